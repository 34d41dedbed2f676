"""Square-lattice geometry and the single-excitation (one flipped spin) Hamiltonian.

Conventions used everywhere in the package: hbar = 1, energies in units of
the edge coupling J, lengths in lattice spacings a, times in 1/J.  Site
(i, j) sits at x = i, y = j and is stored at flat index ``i * ny + j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (names the offending field)."""


class Boundary(str, Enum):
    HARD_WALL = "hard_wall"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class CouplingSpec:
    Je: float = 1.0
    Jd: float = 0.0

    def __post_init__(self):
        if not self.Je > 0:
            raise ConfigError(f"coupling.Je must be > 0, got {self.Je}")
        if not self.Jd >= 0:
            raise ConfigError(f"coupling.Jd must be >= 0, got {self.Jd}")

    @property
    def effective(self) -> float:
        """Coupling felt by axis-aligned magnons, Je + 2 Jd."""
        return self.Je + 2.0 * self.Jd


@dataclass(frozen=True)
class LatticeSpec:
    nx: int
    ny: int
    coupling: CouplingSpec = field(default_factory=CouplingSpec)
    boundary: Boundary = Boundary.HARD_WALL
    a: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.nx < 2 or self.ny < 2:
            raise ConfigError(f"lattice needs nx, ny >= 2, got ({self.nx}, {self.ny})")
        if self.a != 1.0:
            # lengths are measured in units of a internally
            raise ConfigError(f"lattice.a is fixed to 1 internally, got {self.a}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def flatten(self, i, j):
        return np.asarray(i) * self.ny + np.asarray(j)

    def unflatten(self, n):
        return np.divmod(np.asarray(n), self.ny)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) site coordinate grids of shape (nx, ny)."""
        return np.meshgrid(np.arange(self.nx, dtype=float), np.arange(self.ny, dtype=float),
                           indexing="ij")


@dataclass(frozen=True, eq=False)
class SpinState:
    """Normalized amplitudes over the single-excitation basis."""

    amps: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).ravel()
        if amps.size != self.shape[0] * self.shape[1]:
            raise ConfigError(f"state has {amps.size} amplitudes, lattice has {self.shape}")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"SpinState must be normalized, |psi| = {nrm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def normalized(cls, amps, shape) -> "SpinState":
        amps = np.asarray(amps, dtype=complex).ravel()
        nrm = np.linalg.norm(amps)
        if nrm == 0 or not np.isfinite(nrm):
            raise ValueError("cannot normalize a zero or non-finite state")
        return cls(amps / nrm, tuple(shape))

    @classmethod
    def site(cls, lattice: LatticeSpec, i: int, j: int) -> "SpinState":
        amps = np.zeros(lattice.size, dtype=complex)
        amps[lattice.flatten(i, j)] = 1.0
        return cls(amps, lattice.shape)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def grid(self) -> np.ndarray:
        return self.amps.reshape(self.shape)

    def prob(self) -> np.ndarray:
        """|psi|^2 on the (nx, ny) grid."""
        return np.abs(self.grid()) ** 2


@dataclass(frozen=True, eq=False)
class SparseHamiltonian:
    """Real symmetric CSR matrix in units of J."""

    matrix: sp.csr_matrix
    lattice: LatticeSpec

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def bounds(self) -> tuple[float, float]:
        """Gershgorin enclosure (lo, hi) of the spectrum."""
        m = self.matrix
        diag = m.diagonal()
        absrow = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
        return float(np.min(diag - absrow)), float(np.max(diag + absrow))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def expectation(self, s: SpinState) -> float:
        return float(np.real(np.vdot(s.amps, self.matrix @ s.amps)))


def _bond_pairs(lattice: LatticeSpec, di: int, dj: int) -> tuple[np.ndarray, np.ndarray]:
    """Site index pairs (p, q) with q = p + (di, dj); wraps when periodic."""
    nx, ny = lattice.shape
    idx = np.arange(lattice.size).reshape(nx, ny)
    if lattice.boundary is Boundary.PERIODIC:
        q = np.roll(np.roll(idx, -di, axis=0), -dj, axis=1)
        return idx.ravel(), q.ravel()
    i0, i1 = max(0, -di), nx - max(0, di)
    j0, j1 = max(0, -dj), ny - max(0, dj)
    p = idx[i0:i1, j0:j1]
    q = idx[i0 + di:i1 + di, j0 + dj:j1 + dj]
    return p.ravel(), q.ravel()


def _hopping(lattice: LatticeSpec, offsets, t: float):
    rows, cols, vals = [], [], []
    z = np.zeros(lattice.size)
    for di, dj in offsets:
        p, q = _bond_pairs(lattice, di, dj)
        rows += [p, q]
        cols += [q, p]
        vals += [np.full(p.size, -t), np.full(p.size, -t)]
        np.add.at(z, p, 1.0)
        np.add.at(z, q, 1.0)
    return rows, cols, vals, z


def coordination(lattice: LatticeSpec, diagonal: bool = False) -> np.ndarray:
    """Number of (edge or diagonal) bonds per site, shape (nx, ny)."""
    offsets = [(1, 1), (1, -1)] if diagonal else [(1, 0), (0, 1)]
    *_, z = _hopping(lattice, offsets, 1.0)
    return z.reshape(lattice.shape)


def build_hamiltonian(lattice: LatticeSpec, field=None) -> SparseHamiltonian:
    """Tight-binding Hamiltonian of one magnon on the lattice.

    Hopping -Je between edge neighbours (and -Jd between diagonal neighbours),
    diagonal Je*z + Jd*z_d + eps(i, j) so that the free band bottom is 0 and
    the periodic dispersion is 4J - 2J(cos kx + cos ky).

    ``field`` is a PotentialField, an (nx, ny) array, or None for eps = 0.
    """
    eps = np.zeros(lattice.shape) if field is None else np.asarray(getattr(field, "eps", field),
                                                                    dtype=float)
    if eps.shape != lattice.shape:
        raise ConfigError(f"potential shape {eps.shape} does not match lattice {lattice.shape}")
    if not np.all(np.isfinite(eps)):
        raise ValueError("potential contains non-finite on-site energies")

    c = lattice.coupling
    rows, cols, vals, z = _hopping(lattice, [(1, 0), (0, 1)], c.Je)
    diag = c.Je * z + eps.ravel()
    if c.Jd > 0:
        r2, c2, v2, zd = _hopping(lattice, [(1, 1), (1, -1)], c.Jd)
        rows += r2
        cols += c2
        vals += v2
        diag = diag + c.Jd * zd
    n = lattice.size
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    return SparseHamiltonian(m, lattice)


def apply_hamiltonian(H: SparseHamiltonian, s) -> np.ndarray:
    """H @ s for a SpinState or a raw amplitude vector.

    scipy's CSR kernel walks rows in order on a single thread, so the result
    does not depend on how many workers the caller runs.
    """
    v = s.amps if isinstance(s, SpinState) else np.asarray(s)
    if v.shape[0] != H.dim:
        raise ConfigError(f"vector length {v.shape[0]} != Hamiltonian dimension {H.dim}")
    return H.matrix @ v
