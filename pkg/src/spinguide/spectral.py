"""Dispersion relations and transverse mode analysis of guide cross sections."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.optimize import brentq

from .lattice import ConfigError
from .potentials import WirePairProfile, wire_profile


class UnboundError(ValueError):
    """A guide in the cross section has no bound (negative energy) mode."""


# the free hard-wall chain has its ground state at exactly 0; rounding puts it at
# about -1e-16, so "bound" means below -BOUND_TOL (units J)
BOUND_TOL = 1e-12


# ---------------------------------------------------------------------------
# bulk bands
# ---------------------------------------------------------------------------

def dispersion(kx, ky, J: float = 1.0):
    """omega = 4J - 2J (cos kx + cos ky); band bottom 0 at Gamma, top 8J at M."""
    return 4 * J - 2 * J * (np.cos(kx) + np.cos(ky))


def dispersion_diagonal(kx, ky, Je: float = 1.0, Jd: float = 0.0):
    """Band with edge coupling Je and diagonal (next-nearest) coupling Jd."""
    return (4 * (Je + Jd) - 2 * Je * (np.cos(kx) + np.cos(ky))
            - 4 * Jd * np.cos(kx) * np.cos(ky))


def group_velocity(kx, ky, J: float = 1.0):
    return 2 * J * np.sin(kx), 2 * J * np.sin(ky)


def wavevector_for_speed(v: float, J: float = 1.0) -> float:
    """Axis wavevector on the k <= pi/2 branch whose group velocity is ``v``."""
    vmax = 2 * J
    if abs(v) > vmax * (1 + 1e-15):
        raise ValueError(f"speed {v} exceeds the maximum magnon speed 2aJ = {vmax}")
    return math.asin(max(-1.0, min(1.0, v / vmax)))


@dataclass(frozen=True, eq=False)
class BZPathSample:
    kx: np.ndarray
    ky: np.ndarray
    s: np.ndarray
    omega: np.ndarray
    corners: dict

    def rows(self):
        return zip(self.s, self.kx, self.ky, self.omega)


def bz_path(n_per_arm: int, J: float = 1.0, Jd: float = 0.0) -> BZPathSample:
    """Uniform samples along Gamma-X-M-Gamma (endpoint Gamma included)."""
    if n_per_arm < 2:
        raise ConfigError(f"n_per_arm must be >= 2, got {n_per_arm}")
    G, X, M = (0.0, 0.0), (math.pi, 0.0), (math.pi, math.pi)
    ks = []
    for a, b in ((G, X), (X, M), (M, G)):
        t = np.arange(n_per_arm) / n_per_arm
        ks.append(np.column_stack([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]))
    ks.append(np.array([G]))
    k = np.vstack(ks)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(k, axis=0).T))])
    omega = dispersion_diagonal(k[:, 0], k[:, 1], J, Jd)
    corners = {"G": 0, "X": n_per_arm, "M": 2 * n_per_arm, "G'": 3 * n_per_arm}
    return BZPathSample(k[:, 0], k[:, 1], s, omega, corners)


@dataclass(frozen=True)
class MGammaComparison:
    energy: float
    k_diagonal: float
    k_rescaled: float
    rel_k: float
    rel_energy: float


def m_gamma_comparison(Je: float, Jd: float, energy: float | None = None) -> MGammaComparison:
    """Compare the Jd band with the rescaled J = Je + 2Jd band along M-Gamma.

    Along the diagonal kx = ky = k both curves are solved for the launch
    energy (default 2J with J = Je + 2Jd).  ``rel_k`` is the relative shift of
    the wavevector, ``rel_energy`` the relative energy gap at the rescaled k.
    """
    J = Je + 2 * Jd
    E = 2 * J if energy is None else energy
    f_d = lambda k: dispersion_diagonal(k, k, Je, Jd) - E
    f_0 = lambda k: dispersion(k, k, J) - E
    k_d = brentq(f_d, 0.0, math.pi, xtol=1e-15)
    k_0 = brentq(f_0, 0.0, math.pi, xtol=1e-15)
    e_d = dispersion_diagonal(k_0, k_0, Je, Jd)
    return MGammaComparison(E, k_d, k_0, (k_d - k_0) / k_0, (E - e_d) / E)


# ---------------------------------------------------------------------------
# transverse cross sections
# ---------------------------------------------------------------------------

def chain_matrix(eps, J: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """(diagonal, off-diagonal) of the hard-wall chain with on-site ``eps``."""
    eps = np.asarray(eps, dtype=float)
    z = np.full(eps.size, 2.0)
    z[0] = z[-1] = 1.0
    return J * z + eps, np.full(eps.size - 1, -J)


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Transverse eigenpairs; ``modes[n]`` is the n-th real normalized mode."""

    energies: np.ndarray
    modes: np.ndarray
    cross_section: np.ndarray
    x: np.ndarray

    @property
    def bound(self) -> np.ndarray:
        return self.energies < -BOUND_TOL

    def n_bound(self) -> int:
        return int(np.sum(self.bound))

    def ground(self) -> np.ndarray:
        return self.modes[0]

    def residual(self, J: float = 1.0) -> float:
        dg, off = chain_matrix(self.cross_section, J)
        h = np.diag(dg) + np.diag(off, 1) + np.diag(off, -1)
        return float(np.max(np.abs(self.modes @ h - self.energies[:, None] * self.modes)))


def transverse_modes(slice_eps, J: float = 1.0, n_modes: int | None = None,
                     x=None) -> ModeSet:
    """Eigenpairs of the 1D chain (hopping -J, diagonal J z + eps), ascending.

    Energies are measured from the free chain band bottom, so a negative
    energy marks a bound mode.
    """
    eps = np.asarray(slice_eps, dtype=float)
    if eps.ndim != 1 or eps.size < 3:
        raise ConfigError(f"cross section must be 1D with >= 3 sites, got shape {eps.shape}")
    dg, off = chain_matrix(eps, J)
    kw = {}
    if n_modes is not None:
        kw = dict(select="i", select_range=(0, min(n_modes, eps.size) - 1))
    try:
        e, v = eigh_tridiagonal(dg, off, **kw)
    except LinAlgError as exc:
        raise LinAlgError(f"tridiagonal eigensolver failed on slice {eps.tolist()}") from exc
    v = v.T.copy()
    # deterministic sign: largest component positive
    pivots = v[np.arange(len(v)), np.argmax(np.abs(v), axis=1)]
    v *= np.sign(pivots)[:, None]
    x = np.arange(eps.size, dtype=float) if x is None else np.asarray(x, dtype=float)
    return ModeSet(e, v, eps, x)


def confinement_factor(mode, wg: float, x_center: float | None = None, x=None) -> float:
    """Probability of ``mode`` within |x - x_center| <= wg."""
    mode = np.asarray(mode)
    x = np.arange(mode.size, dtype=float) if x is None else np.asarray(x, dtype=float)
    c = (x[0] + x[-1]) / 2 if x_center is None else x_center
    w = np.abs(mode) ** 2
    return float(min(1.0, np.sum(w[np.abs(x - c) <= wg + 1e-12]) / np.sum(w)))


def count_confined_modes(ms: ModeSet, wg: float, threshold: float = 0.9,
                         x_center: float | None = None) -> int:
    return int(sum(confinement_factor(m, wg, x_center, ms.x) >= threshold for m in ms.modes))


def guide_slice(n: int, profile: WirePairProfile, x_center: float | None = None):
    """Cross section (x, eps) of one straight guide across an ``n``-site chain."""
    x = np.arange(n, dtype=float)
    c = (n - 1) / 2 if x_center is None else x_center
    return x, wire_profile(x - c, profile)


def two_guide_slices(n: int, profile: WirePairProfile, separation: float):
    """(x, eps_L, eps_R, eps_both) for two guides ``separation`` apart (centre to centre)."""
    x = np.arange(n, dtype=float)
    c = (n - 1) / 2
    eL = wire_profile(x - (c - separation / 2), profile)
    eR = wire_profile(x - (c + separation / 2), profile)
    return x, eL, eR, eL + eR


COUPLING_METHODS = ("matrix_element", "orthogonalized", "splitting")


def coupling_energy(slice_L, slice_R, slice_both, J: float = 1.0,
                    method: str = "matrix_element") -> float:
    """Inter-guide coupling energy of a two-guide cross section (units J).

    ``matrix_element``: |<L|H|R>| with L, R the isolated-guide ground modes
    and H the Hamiltonian with both guides, no orthogonalization.
    ``orthogonalized``: the Lowdin-orthogonalized two-state hopping.
    ``splitting``: gap between the two lowest modes of the two-guide section,
    which is the tunnelling rate that sets the transfer length.
    """
    if method not in COUPLING_METHODS:
        raise ConfigError(f"coupling method must be one of {COUPLING_METHODS}, got {method!r}")
    sL, sR, sB = (np.asarray(s, dtype=float) for s in (slice_L, slice_R, slice_both))
    if not (sL.shape == sR.shape == sB.shape):
        raise ConfigError("coupling slices must share one cross-section grid")
    mL = transverse_modes(sL, J, n_modes=1)
    mR = transverse_modes(sR, J, n_modes=1)
    if mL.energies[0] >= -BOUND_TOL or mR.energies[0] >= -BOUND_TOL:
        raise UnboundError(f"unbound guide: ground energies {mL.energies[0]:.3e}, "
                           f"{mR.energies[0]:.3e} J")
    if method == "splitting":
        e = transverse_modes(sB, J, n_modes=2).energies
        return float(e[1] - e[0])
    L, R = mL.modes[0], mR.modes[0]
    dg, off = chain_matrix(sB, J)

    def h(u, v):
        hv = dg * v
        hv[:-1] += off * v[1:]
        hv[1:] += off * v[:-1]
        return float(u @ hv)

    hLR = 0.5 * (h(L, R) + h(R, L))
    if method == "matrix_element":
        return abs(hLR)
    S = float(L @ R)
    return abs((hLR - S * 0.5 * (h(L, L) + h(R, R))) / (1 - S * S))


def guide_coupling(profile: WirePairProfile, separation: float, n: int | None = None,
                   method: str = "matrix_element", J: float = 1.0) -> float:
    """coupling_energy for two identical guides ``separation`` apart."""
    n = n or int(separation + 2 * profile.wg + 30 * max(profile.d, 4.0))
    _, eL, eR, eB = two_guide_slices(n, profile, separation)
    return coupling_energy(eL, eR, eB, J, method)


def coupling_grid(eps_values, separations, wg: float, d: float,
                  method: str = "matrix_element", n: int | None = None) -> np.ndarray:
    """J_omega over (eps_min, separation); NaN where a guide is unbound."""
    out = np.full((len(eps_values), len(separations)), np.nan)
    for a, e in enumerate(eps_values):
        for b, s in enumerate(separations):
            try:
                out[a, b] = guide_coupling(WirePairProfile(wg, d, e), s, n, method)
            except UnboundError:
                pass
    return out


def half_transfer_length(v_g: float, J_omega: float) -> float:
    """Propagation distance (units a) for a 50/50 split: pi v_g / (2 J_omega)."""
    if not J_omega > 0:
        raise ValueError(f"coupling energy must be > 0, got {J_omega}")
    return math.pi * v_g / (2 * J_omega)
