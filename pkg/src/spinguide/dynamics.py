"""Time evolution of single-magnon states and the observables read off them."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.special import jv

from .lattice import ConfigError, LatticeSpec, SparseHamiltonian, SpinState


class PropagationError(RuntimeError):
    """The propagator could not reach the requested accuracy."""


class Method(str, Enum):
    CHEBYSHEV = "chebyshev_expansion"
    KRYLOV = "krylov_step"
    EXACT = "exact_small"


@dataclass(frozen=True)
class PropagatorConfig:
    method: Method = Method.CHEBYSHEV
    t_step: float = 10.0
    tol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.tol <= 1e-8:
            raise ConfigError(f"propagator.tol must be <= 1e-8, got {self.tol}")
        if not self.t_step > 0:
            raise ConfigError(f"propagator.t_step must be > 0, got {self.t_step}")


EXACT_MAX_SITES = 4096
_MAX_CHEB_ARG = 4000.0


@numba.njit(cache=True)
def _csr_matvec(indptr, indices, data, v, out):
    for r in range(indptr.size - 1):
        acc = 0j
        for p in range(indptr[r], indptr[r + 1]):
            acc += data[p] * v[indices[p]]
        out[r] = acc


@numba.njit(cache=True)
def _cheb_update(indptr, indices, data, t_cur, t_prev, out, ak):
    """t_prev <- 2 Hn t_cur - t_prev and out += ak * t_prev, one row sweep."""
    for r in range(indptr.size - 1):
        acc = 0j
        for p in range(indptr[r], indptr[r + 1]):
            acc += data[p] * t_cur[indices[p]]
        nxt = 2.0 * acc - t_prev[r]
        t_prev[r] = nxt
        out[r] += ak * nxt


class Propagator:
    """Applies exp(-i H t) to amplitude vectors.

    The Chebyshev route rescales H into [-1, 1] with its Gershgorin bounds and
    sums Bessel-weighted Chebyshev polynomials; the series is cut where the
    remaining coefficient mass drops below ``tol``.
    """

    def __init__(self, H: SparseHamiltonian, cfg: PropagatorConfig | None = None):
        self.H = H
        self.cfg = cfg or PropagatorConfig()
        self.matvecs = 0
        if self.cfg.method is Method.CHEBYSHEV:
            lo, hi = H.bounds()
            self.centre = 0.5 * (hi + lo)
            self.radius = max(0.5 * (hi - lo), 1e-12) * (1 + 1e-12)
            n = H.dim
            self._Hn = ((H.matrix - self.centre * sp.identity(n, format="csr")) / self.radius).tocsr()
        elif self.cfg.method is Method.EXACT:
            if H.dim > EXACT_MAX_SITES:
                raise ConfigError(f"exact_small propagation is limited to {EXACT_MAX_SITES} sites, "
                                  f"got {H.dim}")
            self._evals, self._evecs = eigh(H.dense())

    # -- Chebyshev ----------------------------------------------------------
    def _cheb_coeffs(self, t: float) -> np.ndarray:
        x = self.radius * t
        kmax = int(abs(x) + 40 + 10 * abs(x) ** (1 / 3))
        k = np.arange(kmax + 1)
        b = jv(k, x)
        tail = np.cumsum(np.abs(b[::-1]))[::-1]
        cut = np.nonzero(2 * tail > self.cfg.tol * 1e-2)[0]
        order = int(cut[-1]) + 1 if cut.size else 1
        if order > kmax - 1:
            raise PropagationError(f"Chebyshev series not converged: residual {2 * tail[-1]:.3e} "
                                   f"at order {kmax} for r*t = {x:.3g}")
        a = 2.0 * b[:order + 1] * (-1j) ** k[:order + 1]
        a[0] *= 0.5
        return a

    def _cheb_step(self, v: np.ndarray, t: float) -> np.ndarray:
        a = self._cheb_coeffs(t)
        Hn = self._Hn
        t_prev = np.array(v, dtype=np.complex128)
        out = a[0] * t_prev
        if len(a) > 1:
            t_cur = np.empty_like(t_prev)
            _csr_matvec(Hn.indptr, Hn.indices, Hn.data, t_prev, t_cur)
            out += a[1] * t_cur
            for ak in a[2:]:
                # rows are swept in order, so results do not depend on thread count
                _cheb_update(Hn.indptr, Hn.indices, Hn.data, t_cur, t_prev, out, ak)
                t_prev, t_cur = t_cur, t_prev
            self.matvecs += len(a) - 1
        return np.exp(-1j * self.centre * t) * out

    # -- Lanczos ------------------------------------------------------------
    def _krylov_step(self, v: np.ndarray, t: float, m: int = 30) -> np.ndarray:
        m = min(m, self.H.dim)
        out = v.astype(complex)
        done, dt = 0.0, t
        while abs(done) < abs(t) * (1 - 1e-15):
            dt = math.copysign(min(abs(dt), abs(t - done)), t)
            beta = np.linalg.norm(out)
            V = np.zeros((m + 1, out.size), dtype=complex)
            alpha = np.zeros(m)
            betas = np.zeros(m)
            V[0] = out / beta
            k_used = m
            for j in range(m):
                w = self.H.matrix @ V[j]
                self.matvecs += 1
                alpha[j] = np.real(np.vdot(V[j], w))
                w -= alpha[j] * V[j]
                if j:
                    w -= betas[j - 1] * V[j - 1]
                w -= V[:j + 1].T @ (V[:j + 1].conj() @ w)
                betas[j] = np.linalg.norm(w)
                if betas[j] < 1e-14:
                    k_used = j + 1
                    break
                V[j + 1] = w / betas[j]
            while True:
                ev, U = eigh_tridiagonal(alpha[:k_used], betas[:k_used - 1])
                y = U @ (np.exp(-1j * ev * dt) * U[0])
                err = beta * (betas[k_used - 1] * abs(y[-1]) if k_used == m else 0.0)
                if err <= self.cfg.tol * abs(dt) / max(abs(t), 1e-300) or abs(dt) < 1e-6:
                    break
                dt *= 0.5
            if err > self.cfg.tol * 10:
                raise PropagationError(f"Lanczos step residual {err:.3e} exceeds tol {self.cfg.tol}")
            out = beta * (y @ V[:k_used])
            done += dt
            dt *= 1.5
        return out

    def apply(self, v, t: float) -> np.ndarray:
        """exp(-i H t) v; negative ``t`` runs the dynamics backwards."""
        v = np.asarray(v, dtype=complex)
        if t == 0:
            return v.copy()
        m = self.cfg.method
        if m is Method.EXACT:
            return self._evecs @ (np.exp(-1j * self._evals * t) * (self._evecs.T @ v))
        if m is Method.KRYLOV:
            return self._krylov_step(v, t)
        nsub = max(1, int(math.ceil(abs(self.radius * t) / _MAX_CHEB_ARG)))
        for _ in range(nsub):
            v = self._cheb_step(v, t / nsub)
        return v

    def evolve(self, s: SpinState, t: float) -> SpinState:
        out = self.apply(s.amps, t)
        nrm = np.linalg.norm(out)
        if abs(nrm - 1) > 1e-9:
            raise PropagationError(f"norm drifted to {nrm!r} after t = {t}")
        return SpinState(out, s.shape)


def evolve(H: SparseHamiltonian, s: SpinState, t: float,
           cfg: PropagatorConfig | None = None) -> SpinState:
    return Propagator(H, cfg).evolve(s, t)


def propagate(H: SparseHamiltonian, s: SpinState, times, cfg: PropagatorConfig | None = None,
              propagator: Propagator | None = None):
    """Yield (t, state) for each of the ascending ``times`` (t = 0 is the input)."""
    prop = propagator or Propagator(H, cfg)
    t_now = 0.0
    for t in times:
        if t < t_now:
            raise ValueError("propagate needs ascending times")
        if t > t_now:
            s = prop.evolve(s, t - t_now)
            t_now = t
        yield t_now, s


# ---------------------------------------------------------------------------
# wavepackets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WavepacketParams:
    x0: float
    y0: float
    phi_x: float = 6.0
    phi_y: float = 6.0
    kx: float = 0.0
    ky: float = math.pi / 2
    transverse_mode_override: np.ndarray | None = None

    def __post_init__(self):
        if not (self.phi_x > 0 and self.phi_y > 0):
            raise ConfigError(f"packet widths must be > 0, got ({self.phi_x}, {self.phi_y})")


def _clipped_fraction(center: float, phi: float, n: int) -> float:
    pad = int(math.ceil(10 * phi)) + 1
    x = np.arange(-pad, n + pad, dtype=float)
    w = np.exp(-((x - center) ** 2) / phi**2)
    inside = (x >= 0) & (x <= n - 1)
    return float(w[~inside].sum() / w.sum())


def make_packet(p: WavepacketParams, lattice: LatticeSpec) -> SpinState:
    """Gaussian envelope times plane-wave carrier exp(+i k.r), normalized.

    The carrier sign makes the packet move along +k with velocity
    2J(sin kx, sin ky).  A transverse mode override replaces the x envelope.
    """
    nx, ny = lattice.shape
    x = np.arange(nx, dtype=float)
    y = np.arange(ny, dtype=float)
    if p.transverse_mode_override is not None:
        fx = np.asarray(p.transverse_mode_override, dtype=float)
        if fx.shape != (nx,):
            raise ConfigError(f"transverse mode has shape {fx.shape}, lattice nx = {nx}")
        clipped = 0.0
    else:
        fx = np.exp(-((x - p.x0) ** 2) / (2 * p.phi_x**2))
        clipped = _clipped_fraction(p.x0, p.phi_x, nx)
    fy = np.exp(-((y - p.y0) ** 2) / (2 * p.phi_y**2))
    clipped = max(clipped, _clipped_fraction(p.y0, p.phi_y, ny))
    if clipped > 1e-6:
        warnings.warn(f"wavepacket clipped by the lattice edge: {clipped:.2e} of its norm lost",
                      stacklevel=2)
    amps = np.outer(fx * np.exp(1j * p.kx * x), fy * np.exp(1j * p.ky * y))
    return SpinState.normalized(amps, lattice.shape)


# ---------------------------------------------------------------------------
# regions and observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Region:
    mask: np.ndarray

    def __or__(self, other):
        return Region(self.mask | other.mask)

    def __and__(self, other):
        return Region(self.mask & other.mask)

    def __invert__(self):
        return Region(~self.mask)

    @classmethod
    def full(cls, lattice: LatticeSpec) -> "Region":
        return cls(np.ones(lattice.shape, dtype=bool))

    @classmethod
    def rect(cls, lattice: LatticeSpec, x0=-np.inf, x1=np.inf, y0=-np.inf, y1=np.inf) -> "Region":
        """Sites with x0 <= x <= x1 and y0 <= y <= y1."""
        X, Y = lattice.coords()
        return cls((X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1))

    @classmethod
    def tube(cls, lattice: LatticeSpec, guide, halfwidth: float | None = None) -> "Region":
        """Sites within +-halfwidth (default the guide's wg) of a guide centreline."""
        X, Y = lattice.coords()
        off, _ = guide.local_frame(X, Y)
        hw = guide.profile.wg if halfwidth is None else halfwidth
        return cls(np.abs(off) <= hw + 1e-9)


def region_population(s: SpinState, r: Region) -> float:
    return float(min(1.0, np.sum(s.prob()[r.mask])))


def centroid(s: SpinState) -> tuple[float, float]:
    P = s.prob()
    nx, ny = s.shape
    px, py = P.sum(axis=1), P.sum(axis=0)
    return float(px @ np.arange(nx)), float(py @ np.arange(ny))


def spread(s: SpinState) -> tuple[float, float]:
    """Probability standard deviations (sigma_x, sigma_y)."""
    P = s.prob()
    nx, ny = s.shape
    px, py = P.sum(axis=1), P.sum(axis=0)
    x, y = np.arange(nx), np.arange(ny)
    mx, my = px @ x, py @ y
    return float(np.sqrt(px @ (x - mx) ** 2)), float(np.sqrt(py @ (y - my) ** 2))


def relative_phase(sA: SpinState, sB: SpinState, r: Region, min_population: float = 0.5) -> float:
    """arg <sA|sB> restricted to the window ``r``, in (-pi, pi]."""
    if region_population(sA, r) < min_population or region_population(sB, r) < min_population:
        raise ValueError("insufficient overlap support: window population below "
                         f"{min_population}")
    m = r.mask.ravel()
    ov = np.vdot(sA.amps[m], sB.amps[m])
    phi = float(np.angle(ov))
    return math.pi if phi == -math.pi else phi


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    R: float
    T: float
    inside: float
    state: SpinState


class InconclusiveScattering(RuntimeError):
    pass


def scattering_rt(H: SparseHamiltonian, s0: SpinState, t_run: float, lo: float, hi: float,
                  axis: str = "y", cfg: PropagatorConfig | None = None,
                  clear_tol: float = 1e-3) -> ScatteringResult:
    """Reflected (coordinate < lo) and transmitted (> hi) populations after ``t_run``.

    The packet must start upstream of ``lo`` and move toward ``hi``.
    """
    s = evolve(H, s0, t_run, cfg)
    P = s.prob()
    c = np.arange(P.shape[1] if axis == "y" else P.shape[0], dtype=float)
    prof = P.sum(axis=0) if axis == "y" else P.sum(axis=1)
    R = float(prof[c < lo].sum())
    T = float(prof[c > hi].sum())
    inside = float(prof[(c >= lo) & (c <= hi)].sum())
    if inside > clear_tol or R + T < 0.99:
        raise InconclusiveScattering(f"inconclusive scattering run: {inside:.3e} of the "
                                     f"population still inside [{lo}, {hi}] at t = {t_run}")
    return ScatteringResult(R, T, inside, s)
