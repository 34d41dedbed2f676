"""On-site energy landscapes from current-carrying wires above the spin sheet.

Only the out-of-plane field enters the single-excitation Hamiltonian.  All
energies are in units of J and all lengths in lattice spacings.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .lattice import ConfigError, LatticeSpec


# ---------------------------------------------------------------------------
# wire-pair cross section
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WirePairProfile:
    wg: float = 20.0
    d: float = 20.0
    eps_min: float = 0.1

    def __post_init__(self):
        if not self.d > 0:
            raise ConfigError(f"profile.d must be > 0, got {self.d}")
        if not self.wg >= 0:
            raise ConfigError(f"profile.wg must be >= 0, got {self.wg}")
        if not self.eps_min >= 0:
            raise ConfigError(f"profile.eps_min must be >= 0, got {self.eps_min}")

    def scaled(self, eps_min: float) -> "WirePairProfile":
        return WirePairProfile(self.wg, self.d, eps_min)


def pair_field(x, wg: float, d: float):
    """z-field of the antiparallel pair in units of mu0*I/(2*pi)."""
    x = np.asarray(x, dtype=float)
    return (x - wg) / (d**2 + (x - wg) ** 2) - (x + wg) / (d**2 + (x + wg) ** 2)


def wire_profile(x, p: WirePairProfile):
    """On-site energy at transverse offset ``x`` from the guide centre.

    Normalized so the centre sits at exactly -eps_min; the pair's outer lobes
    are positive and the profile decays as 1/x^2.
    """
    b0 = pair_field(0.0, p.wg, p.d)
    if b0 == 0:
        raise ValueError(f"degenerate wire geometry wg={p.wg}, d={p.d}: zero field at the centre")
    return p.eps_min * pair_field(x, p.wg, p.d) / abs(b0)


@dataclass(frozen=True)
class ProfileAnalysis:
    depth_at_center: float
    is_split: bool
    x_min: float


def profile_analysis(wg: float, d: float) -> ProfileAnalysis:
    """Centre depth per unit current and whether the well splits in two.

    ``depth_at_center`` is |B_z(0)| in units of mu0*I/(2*pi), i.e. the depth a
    fixed current produces; it peaks at wg = d where it equals 1/d.
    ``x_min`` is the offset of the deepest point (>= 0).
    """
    if not (wg > 0 and d > 0):
        raise ConfigError(f"profile_analysis needs wg, d > 0, got ({wg}, {d})")
    depth = abs(float(pair_field(0.0, wg, d)))
    h = 1e-3 * max(wg, d)
    curv = (pair_field(h, wg, d) - 2 * pair_field(0.0, wg, d) + pair_field(-h, wg, d)) / h**2
    # energy ~ +B/|B(0)|: a negative curvature of B at 0 is a local maximum of the energy
    is_split = bool(curv < 0)
    xs = np.linspace(0.0, wg + 3 * d, 20001)
    x_min = float(xs[np.argmin(pair_field(xs, wg, d))])
    return ProfileAnalysis(depth, is_split, x_min)


def depth_map(wg_values, d_values) -> np.ndarray:
    """Centre depth grid [len(wg), len(d)] for the depth-vs-geometry dataset."""
    return np.array([[abs(float(pair_field(0.0, w, d))) for d in d_values] for w in wg_values])


# ---------------------------------------------------------------------------
# guide geometry
# ---------------------------------------------------------------------------

def _resample(points: np.ndarray, step: float) -> np.ndarray:
    seg = np.diff(points, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    keep = np.concatenate([[True], seglen > 1e-12])
    points = points[keep]
    seglen = seglen[seglen > 1e-12]
    s = np.concatenate([[0.0], np.cumsum(seglen)])
    n = max(2, int(math.ceil(s[-1] / step)) + 1)
    t = np.linspace(0.0, s[-1], n)
    # keep the original vertices so straight pieces stay exactly straight
    t = np.union1d(t, s)
    return np.column_stack([np.interp(t, s, points[:, 0]), np.interp(t, s, points[:, 1])])


@dataclass(frozen=True, eq=False)
class GuideSpec:
    """Centreline polyline (x, y) plus the wire-pair cross section.

    The first and last segments are treated as extending to infinity, so a
    guide that stops at the lattice edge behaves like one that runs past it.
    """

    path: np.ndarray
    profile: WirePairProfile = field(default_factory=WirePairProfile)
    step: float = 0.25

    def __post_init__(self):
        path = np.asarray(self.path, dtype=float)
        if path.ndim != 2 or path.shape[1] != 2 or len(path) < 2:
            raise ConfigError("guide path must be an (N>=2, 2) array of points")
        if not np.all(np.isfinite(path)):
            raise ConfigError("guide path contains non-finite points")
        object.__setattr__(self, "path", _resample(path, self.step))

    @classmethod
    def straight(cls, start, end, profile: WirePairProfile) -> "GuideSpec":
        return cls(np.array([start, end], dtype=float), profile)

    @classmethod
    def from_segments(cls, start, heading_deg: float, segments, profile: WirePairProfile,
                      step: float = 0.25) -> "GuideSpec":
        """Chain of ("straight", length) and ("arc", radius, angle_deg) pieces.

        Heading 90 deg points along +y; a positive arc angle turns left.
        """
        pts = [np.asarray(start, dtype=float)]
        theta = math.radians(heading_deg)
        for seg in segments:
            kind = seg[0]
            p = pts[-1]
            if kind == "straight":
                length = float(seg[1])
                if length < 0:
                    raise ConfigError(f"straight segment length must be >= 0, got {length}")
                pts.append(p + length * np.array([math.cos(theta), math.sin(theta)]))
            elif kind == "arc":
                radius, angle = float(seg[1]), math.radians(float(seg[2]))
                if not radius > 0:
                    raise ConfigError(f"arc radius RC must be > 0, got {radius}")
                side = 1.0 if angle >= 0 else -1.0
                # centre lies to the left (right) of the heading for left (right) turns
                centre = p + side * radius * np.array([-math.sin(theta), math.cos(theta)])
                phi0 = math.atan2(p[1] - centre[1], p[0] - centre[0])
                n = max(2, int(math.ceil(abs(angle) * radius / step)) + 1)
                phis = phi0 + np.linspace(0.0, angle, n)[1:]
                pts.extend(centre + radius * np.column_stack([np.cos(phis), np.sin(phis)]))
                theta += angle
            else:
                raise ConfigError(f"unknown guide segment kind {kind!r}")
        return cls(np.array(pts), profile, step)

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.path, axis=0).T)))

    def arclength(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(self.path, axis=0).T))])

    def point_at(self, u: float) -> np.ndarray:
        s = self.arclength()
        return np.array([np.interp(u, s, self.path[:, 0]), np.interp(u, s, self.path[:, 1])])

    def local_frame(self, X, Y) -> tuple[np.ndarray, np.ndarray]:
        """Signed transverse offset (left of travel positive) and arc position of points."""
        path = self.path
        tang = np.gradient(path, axis=0)
        tang /= np.hypot(tang[:, 0], tang[:, 1])[:, None]
        normal = np.column_stack([-tang[:, 1], tang[:, 0]])
        pts = np.column_stack([np.ravel(X), np.ravel(Y)])
        _, k = cKDTree(path).query(pts)
        rel = pts - path[k]
        offset = np.einsum("ij,ij->i", rel, normal[k])
        along = self.arclength()[k] + np.einsum("ij,ij->i", rel, tang[k])
        shape = np.shape(X)
        return offset.reshape(shape), along.reshape(shape)

    def field(self, X, Y) -> np.ndarray:
        offset, _ = self.local_frame(X, Y)
        return wire_profile(offset, self.profile)


# ---------------------------------------------------------------------------
# dynamic magnonic crystal
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DMCSpec:
    """Periodic array of current-carrying wires across a guide.

    ``model="wells"`` places one same-sign Lorentzian well d^2/(r^2 + d^2)
    per period (nonzero spatial mean, so the phase is first order in the
    depth).  ``model="wires"`` is the literal antiparallel wire array, two
    wires per period with B_z ~ r/(r^2 + d^2); its spatial mean vanishes.
    ``span`` = (centre, half_width) restricts the crystal transversally.
    """

    n_periods: int = 10
    period: float = 20.0
    eps_dmc: float = 0.0
    start: float = 0.0
    orientation: str = "y"
    d_dmc: float | None = None
    model: str = "wells"
    span: tuple[float, float] | None = None

    def __post_init__(self):
        if self.n_periods < 1:
            raise ConfigError(f"dmc.n_periods must be >= 1, got {self.n_periods}")
        if not self.period > 0:
            raise ConfigError(f"dmc.period must be > 0, got {self.period}")
        if not self.eps_dmc >= 0:
            raise ConfigError(f"dmc.eps_dmc must be >= 0, got {self.eps_dmc}")
        if self.orientation not in ("x", "y"):
            raise ConfigError(f"dmc.orientation must be 'x' or 'y', got {self.orientation!r}")
        if self.model not in ("wells", "wires"):
            raise ConfigError(f"dmc.model must be 'wells' or 'wires', got {self.model!r}")
        if self.d_dmc is not None and not self.d_dmc > 0:
            raise ConfigError(f"dmc.d_dmc must be > 0, got {self.d_dmc}")
        if self.span is not None:
            object.__setattr__(self, "span", tuple(float(v) for v in self.span))
            if not self.span[1] > 0:
                raise ConfigError(f"dmc.span half width must be > 0, got {self.span[1]}")

    @property
    def height(self) -> float:
        return self.period / 2 if self.d_dmc is None else self.d_dmc

    @property
    def extent(self) -> tuple[float, float]:
        return (self.start, self.start + self.n_periods * self.period)

    def with_depth(self, eps_dmc: float) -> "DMCSpec":
        return DMCSpec(self.n_periods, self.period, eps_dmc, self.start, self.orientation,
                       self.d_dmc, self.model, self.span)


def _dmc_shape(y, spec: DMCSpec) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    h = spec.height
    if spec.model == "wells":
        centres = spec.start + (np.arange(spec.n_periods) + 0.5) * spec.period
        r = y[..., None] - centres
        return -np.sum(h**2 / (r**2 + h**2), axis=-1)
    nw = 2 * spec.n_periods
    pos = spec.start + (np.arange(nw) + 0.5) * spec.period / 2
    sign = np.where(np.arange(nw) % 2 == 0, 1.0, -1.0)
    r = y[..., None] - pos
    return np.sum(sign * r / (r**2 + h**2), axis=-1)


def dmc_profile(y, spec: DMCSpec):
    """On-site energy of the crystal at longitudinal coordinate ``y``.

    Scaled so the deepest point equals -eps_dmc; outside the wire array the
    field just decays, it is never cut off.
    """
    if spec.eps_dmc == 0:
        return np.zeros(np.shape(y))
    lo, hi = spec.extent
    probe = np.linspace(lo, hi, int(40 * spec.n_periods * max(1.0, spec.period / 10)) + 1)
    depth = -np.min(_dmc_shape(probe, spec))
    return spec.eps_dmc * _dmc_shape(y, spec) / depth


def dmc_integral(spec: DMCSpec, margin: float | None = None) -> float:
    """Integral of the crystal energy along its axis (units J*a)."""
    from scipy.integrate import quad

    lo, hi = spec.extent
    margin = 50 * spec.height if margin is None else margin
    val, _ = quad(lambda y: float(dmc_profile(y, spec)), lo - margin, hi + margin,
                  limit=20 * spec.n_periods + 200)
    return val


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bias:
    """Uniform on-site offset (units J)."""

    value: float


@dataclass(frozen=True, eq=False)
class PotentialField:
    eps: np.ndarray
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "eps", np.asarray(self.eps, dtype=float))

    @classmethod
    def zeros(cls, lattice: LatticeSpec) -> "PotentialField":
        return cls(np.zeros(lattice.shape))

    def __add__(self, other: "PotentialField") -> "PotentialField":
        return PotentialField(self.eps + other.eps, self.notes + other.notes)


def _element_field(el, lattice: LatticeSpec, X, Y) -> tuple[np.ndarray, list[str]]:
    notes = []
    if isinstance(el, GuideSpec):
        reach = el.profile.wg + 5 * el.profile.d
        p = el.path
        outside = ((p[:, 0] < -reach) | (p[:, 0] > lattice.nx - 1 + reach)
                   | (p[:, 1] < -reach) | (p[:, 1] > lattice.ny - 1 + reach))
        if np.all(outside):
            notes.append("guide lies entirely outside the lattice")
        return el.field(X, Y), notes
    if isinstance(el, DMCSpec):
        along, across = (Y, X) if el.orientation == "y" else (X, Y)
        lo, hi = el.extent
        size = lattice.ny if el.orientation == "y" else lattice.nx
        if hi < 0 or lo > size - 1:
            notes.append("DMC lies entirely outside the lattice")
        eps = dmc_profile(along, el)
        if el.span is not None:
            c, hw = el.span
            eps = np.where(np.abs(across - c) <= hw, eps, 0.0)
        return eps, notes
    if isinstance(el, Bias):
        return np.full(lattice.shape, float(el.value)), notes
    raise ConfigError(f"unknown layout element {type(el).__name__}")


def layout_to_field(layout, lattice: LatticeSpec) -> PotentialField:
    """Sum the on-site energies of guides, crystals and bias offsets."""
    X, Y = lattice.coords()
    eps = np.zeros(lattice.shape)
    notes: list[str] = []
    for el in layout:
        e, n = _element_field(el, lattice, X, Y)
        eps += e
        for msg in n:
            warnings.warn(msg, stacklevel=2)
        notes += n
    return PotentialField(eps, tuple(notes))


def straight_guide_y(x_center: float, lattice: LatticeSpec, profile: WirePairProfile) -> GuideSpec:
    """Guide running along +y through the whole lattice at column ``x_center``."""
    return GuideSpec.straight((x_center, 0.0), (x_center, lattice.ny - 1.0), profile)
