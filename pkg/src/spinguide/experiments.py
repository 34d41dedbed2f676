"""Turnkey runners: free/guided propagation, bends, couplers, DMC and Michelson.

Every runner takes one of the config dataclasses from :mod:`spinguide.config`
and returns a :class:`RunRecord`.  Guides run along +y unless stated.
"""
from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import curve_fit

from . import config as C
from .dynamics import (Propagator, PropagatorConfig, Region, WavepacketParams, centroid,
                       make_packet, region_population, relative_phase, spread)
from .lattice import ConfigError, CouplingSpec, LatticeSpec, SpinState, build_hamiltonian
from .potentials import (DMCSpec, GuideSpec, PotentialField, WirePairProfile, dmc_integral,
                         layout_to_field, wire_profile)
from .spectral import (BOUND_TOL, UnboundError, guide_coupling, half_transfer_length,
                       transverse_modes)


@dataclass
class RunRecord:
    kind: str
    config: dict
    tracks: list = field(default_factory=list)       # (t, observable, value)
    tables: dict = field(default_factory=dict)       # name -> (columns, rows)
    frames: list = field(default_factory=list)       # (t, complex (nx, ny) grid)
    summary: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    wall_time: float = 0.0

    def track(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        rows = [(t, v) for t, n, v in self.tracks if n == name]
        if not rows:
            return np.array([]), np.array([])
        t, v = zip(*rows)
        return np.array(t), np.array(v)

    def table(self, name: str) -> dict:
        cols, rows = self.tables[name]
        arr = list(zip(*rows)) if rows else [[] for _ in cols]
        return {c: np.array(a) for c, a in zip(cols, arr)}


def _prop_cfg(p: C.PropagationParams) -> PropagatorConfig:
    return PropagatorConfig(p.method, p.t_step, p.tol)


def _profile(g: C.GuideParams, eps_min: float | None = None) -> WirePairProfile:
    return WirePairProfile(g.wg, g.d, g.eps_min if eps_min is None else eps_min)


def _dmc_spec(p: C.DMCParams, eps: float, start: float, span=None) -> DMCSpec:
    return DMCSpec(p.n_periods, p.period, eps, start, "y", p.d_dmc, p.model, span)


def _time_grid(t_end: float, dt: float) -> np.ndarray:
    n = max(1, int(math.ceil(t_end / dt - 1e-9)))
    return np.linspace(0.0, t_end, n + 1)


def _finish(record: RunRecord, caught, t0: float) -> RunRecord:
    record.warnings += sorted({str(w.message) for w in caught})
    record.wall_time = time.perf_counter() - t0
    return record


def _pmap(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# free and guided propagation
# ---------------------------------------------------------------------------

def _straight_setup(cfg: C.PropagationConfig, guided: bool):
    lat = LatticeSpec(cfg.nx, cfg.ny, CouplingSpec(cfg.Je, cfg.Jd))
    pk = cfg.packet
    x0 = (cfg.nx - 1) / 2 if pk.x0 is None else pk.x0
    y0 = 4 * pk.phi_y + 10 if pk.y0 is None else pk.y0
    layout, mode = [], None
    if guided and cfg.guide.eps_min > 0:
        guide = GuideSpec.straight((x0, 0.0), (x0, cfg.ny - 1.0), _profile(cfg.guide))
        layout.append(guide)
        ms = transverse_modes(wire_profile(np.arange(cfg.nx) - x0, guide.profile), cfg.Je,
                              n_modes=pk.mode_index + 1)
        if ms.energies[pk.mode_index] >= -BOUND_TOL:
            raise UnboundError(f"unbound guide: mode {pk.mode_index} has energy "
                               f"{ms.energies[pk.mode_index]:.3e} J >= 0")
        mode = ms.modes[pk.mode_index]
    field_ = layout_to_field(layout, lat) if layout else PotentialField.zeros(lat)
    packet = WavepacketParams(x0, y0, pk.phi_x, pk.phi_y, pk.kx, pk.ky, mode)
    return lat, field_, packet, (layout[0] if layout else None)


def _propagation_run(cfg: C.PropagationConfig, guided: bool, kind: str) -> RunRecord:
    t0 = time.perf_counter()
    rec = RunRecord(kind, C.to_dict(cfg))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lat, fld, packet, guide = _straight_setup(cfg, guided)
        H = build_hamiltonian(lat, fld)
        s = make_packet(packet, lat)
        v = math.hypot(*[2 * cfg.Je * math.sin(k) for k in (cfg.packet.kx, cfg.packet.ky)])
        t_end = cfg.distance / max(v, 1e-12) if v > 1e-9 else cfg.distance
        tube = Region.tube(lat, guide) if guide is not None else None
        prop = Propagator(H, _prop_cfg(cfg.propagation))
        e0 = H.expectation(s)
        t_now = 0.0
        for n, t in enumerate(_time_grid(t_end, cfg.propagation.t_step)):
            if t > t_now:
                s = prop.evolve(s, t - t_now)
                t_now = t
            cx, cy = centroid(s)
            sx, sy = spread(s)
            rows = [("centroid_x", cx), ("centroid_y", cy), ("sigma_x", sx), ("sigma_y", sy),
                    ("norm", s.norm), ("energy", H.expectation(s))]
            if tube is not None:
                rows.append(("guide_population", region_population(s, tube)))
            edge = float(s.prob()[[0, -1], :].sum() + s.prob()[:, [0, -1]].sum())
            rows.append(("edge_population", edge))
            rec.tracks += [(float(t), k, float(val)) for k, val in rows]
            if cfg.output.frames and n % cfg.output.frame_every == 0:
                rec.frames.append((float(t), s.grid().copy()))
        tt, cy = rec.track("centroid_y")
        _, sx = rec.track("sigma_x")
        _, sy = rec.track("sigma_y")
        _, en = rec.track("energy")
        _, edge = rec.track("edge_population")
        if edge.max() > 1e-6:
            warnings.warn(f"packet reached the lattice boundary (edge population {edge.max():.2e})")
        vel = np.polyfit(tt, cy, 1)[0] if len(tt) > 1 else float("nan")
        rec.summary.update(
            velocity_y=float(vel), sigma_x_ratio=float(sx[-1] / sx[0]),
            sigma_y_ratio=float(sy[-1] / sy[0]), energy_drift=float(np.ptp(en)),
            energy=float(e0), t_end=float(t_end), matvecs=prop.matvecs)
        if tube is not None:
            _, gp = rec.track("guide_population")
            rec.summary.update(guide_population_min=float(gp.min()),
                               guide_population_initial=float(gp[0]))
    return _finish(rec, caught, t0)


def run_free_propagation(cfg: C.PropagationConfig) -> RunRecord:
    """Packet on the bare sheet; the transverse width spreads fast at ky = pi/2."""
    return _propagation_run(cfg, guided=False, kind="free")


def run_guided_propagation(cfg: C.PropagationConfig) -> RunRecord:
    """Same launch inside one straight wire-pair guide; the x profile is a guide mode.

    With eps_min = 0 there is no guide and this is the free run.
    """
    return _propagation_run(cfg, guided=True, kind="guide")


# ---------------------------------------------------------------------------
# bends
# ---------------------------------------------------------------------------

def bend_guide(cfg: C.BendConfig, radius: float, x_start: float = 0.0,
               eps_min: float | None = None) -> GuideSpec:
    """Straight run along +y, an arc of ``radius`` turning toward +x, straight run."""
    return GuideSpec.from_segments(
        (x_start, 0.0), 90.0,
        [("straight", cfg.straight_before), ("arc", radius, -abs(cfg.angle)),
         ("straight", cfg.straight_after + 8 * cfg.packet.phi_y)],
        _profile(cfg.guide, eps_min))


def bend_run(cfg: C.BendConfig, radius: float, eps_min: float | None = None,
             keep_state: bool = False) -> dict:
    """One bend: guide population versus arc position and the bend loss.

    Loss = 1 - P_after / P_before, P the population within the capture tube
    (|offset| <= wg + 2d unless ``cfg.loss_halfwidth`` is set), P_before at
    launch and P_after once the packet centre is ``straight_after`` beyond
    the arc.  The +-wg tube ratio is returned as ``tube_loss``; it also counts
    bound transverse sloshing excited at the arc ends, not just leakage.
    """
    g = cfg.guide
    pad = cfg.margin + g.wg + 2 * g.d
    probe = bend_guide(cfg, radius)
    xmin, xmax = probe.path[:, 0].min(), probe.path[:, 0].max()
    x_start = pad - xmin
    guide = bend_guide(cfg, radius, x_start, eps_min)
    arc_start = cfg.straight_before
    arc_end = arc_start + radius * math.radians(abs(cfg.angle))
    target = arc_end + cfg.straight_after
    end_pt = guide.point_at(target + 4 * cfg.packet.phi_y)
    nx = int(math.ceil(max(xmax - xmin + 2 * pad, end_pt[0] + pad)))
    ny = int(math.ceil(min(guide.path[:, 1].max(), end_pt[1]) + pad))
    lat = LatticeSpec(nx, ny)
    fld = layout_to_field([guide], lat)
    H = build_hamiltonian(lat, fld)
    y0 = 4 * cfg.packet.phi_y + 10 if cfg.packet.y0 is None else cfg.packet.y0
    row = fld.eps[:, int(round(y0))]
    ms = transverse_modes(row, 1.0, n_modes=cfg.packet.mode_index + 1)
    if ms.energies[-1] >= -BOUND_TOL:
        raise UnboundError(f"unbound guide at eps_min = {guide.profile.eps_min}")
    packet = WavepacketParams(x_start, y0, cfg.packet.phi_x, cfg.packet.phi_y, cfg.packet.kx,
                              cfg.packet.ky, ms.modes[cfg.packet.mode_index])
    s = make_packet(packet, lat)
    X, Y = lat.coords()
    offset, along = guide.local_frame(X, Y)
    tube = np.abs(offset) <= g.wg + 1e-9
    hw = g.wg + 2 * g.d if cfg.loss_halfwidth is None else cfg.loss_halfwidth
    capture = np.abs(offset) <= hw + 1e-9
    prop = Propagator(H, _prop_cfg(cfg.propagation))
    v = 2 * math.sin(cfg.packet.ky)
    dt = cfg.propagation.t_step
    rows, t = [], 0.0
    t_max = 3.0 * (target - y0) / max(v, 1e-9) + 100
    while True:
        P = s.prob()
        pcap = float(P[capture].sum())
        pos = float((P[capture] * along[capture]).sum() / max(pcap, 1e-300))
        rows.append((t, pos, pcap, float(P[tube].sum()), s.norm))
        if pos >= target or t >= t_max:
            break
        s = prop.evolve(s, dt)
        t += dt
    if rows[-1][1] < target:
        raise RuntimeError(f"bend run RC={radius}: packet did not clear the bend by t={t}")
    loss = 1.0 - rows[-1][2] / rows[0][2]
    tube_loss = 1.0 - rows[-1][3] / rows[0][3]
    out = dict(radius=radius, eps_min=guide.profile.eps_min, loss=float(loss),
               tube_loss=float(tube_loss), rows=rows, shape=(nx, ny),
               arc=(arc_start, arc_end))
    if keep_state:
        out.update(state=s, guide=guide, lattice=lat)
    return out


def run_bend_study(cfg: C.BendConfig, threads: int = 1) -> RunRecord:
    t0 = time.perf_counter()
    rec = RunRecord("bend", C.to_dict(cfg))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        results = _pmap(_bend_worker, [(cfg, r) for r in cfg.radii], threads)
        table = []
        for res in results:
            tag = f"RC={res['radius']:g}"
            for t, pos, pcap, ptube, nrm in res["rows"]:
                rec.tracks.append((t, f"{tag}:position", pos))
                rec.tracks.append((t, f"{tag}:capture_population", pcap))
                rec.tracks.append((t, f"{tag}:guide_population", ptube))
                rec.tracks.append((t, f"{tag}:norm", nrm))
            table.append([res["radius"], res["eps_min"], res["loss"], res["tube_loss"],
                          *res["arc"]])
        rec.tables["bend_loss"] = (["RC", "eps_min", "bend_loss", "tube_loss", "arc_start",
                                    "arc_end"], table)
        rec.summary["bend_loss"] = {f"{r[0]:g}": r[2] for r in table}
    return _finish(rec, caught, t0)


def _bend_worker(args):
    cfg, r = args
    return bend_run(cfg, r)


def bend_loss_vs_depth(cfg: C.BendConfig, eps_values, threads: int = 1) -> np.ndarray:
    """Loss grid [len(radii), len(eps_values)] for the loss-versus-depth dataset."""
    jobs = [(cfg, r, e) for r in cfg.radii for e in eps_values]
    res = _pmap(_bend_depth_worker, jobs, threads)
    return np.array(res).reshape(len(cfg.radii), len(eps_values))


def _bend_depth_worker(args):
    cfg, r, e = args
    return bend_run(cfg, r, e)["loss"]


# ---------------------------------------------------------------------------
# directional coupler
# ---------------------------------------------------------------------------

def coupler_point(cfg: C.CouplerConfig, eps_min: float, separation: float) -> dict:
    """Two straight parallel guides; launch in L and time the 50 % transfer.

    The measured half-transfer length is the centroid travel when the
    population in the right guide tube first reaches one half.
    """
    g = cfg.guide
    prof = _profile(g, eps_min)
    J_omega = {m: guide_coupling(prof, separation, method=m)
               for m in ("matrix_element", "orthogonalized", "splitting")}
    v = 2 * math.sin(cfg.packet.ky)
    predicted = half_transfer_length(v, J_omega[cfg.method])
    pad = cfg.margin + g.wg + 2 * g.d
    nx = int(math.ceil(separation + 2 * pad)) | 1
    xc = (nx - 1) / 2
    xL, xR = xc - separation / 2, xc + separation / 2
    y0 = 4 * cfg.packet.phi_y + 10 if cfg.packet.y0 is None else cfg.packet.y0
    l_exact = half_transfer_length(v, J_omega["splitting"])
    ny = int(math.ceil(y0 + 1.4 * max(predicted, l_exact) + 4 * cfg.packet.phi_y + 20))
    lat = LatticeSpec(nx, ny)
    gL = GuideSpec.straight((xL, 0.0), (xL, ny - 1.0), prof)
    gR = GuideSpec.straight((xR, 0.0), (xR, ny - 1.0), prof)
    fld = layout_to_field([gL, gR], lat)
    H = build_hamiltonian(lat, fld)
    x = np.arange(nx)
    mode = transverse_modes(wire_profile(x - xL, prof), 1.0, n_modes=1).modes[0]
    s = make_packet(WavepacketParams(xL, y0, 1.0, cfg.packet.phi_y, 0.0, cfg.packet.ky, mode), lat)
    X, _ = lat.coords()
    right = X > xc
    prop = Propagator(H, _prop_cfg(cfg.propagation))
    dt = cfg.propagation.t_step
    t, rows = 0.0, []
    y_start = centroid(s)[1]
    t_max = 1.4 * max(predicted, l_exact) / v
    crossing = None
    while t <= t_max:
        pr = float(s.prob()[right].sum())
        rows.append((t, centroid(s)[1] - y_start, pr))
        if len(rows) > 1 and rows[-2][2] < 0.5 <= pr:
            (ta, ya, pa), (tb, yb, pb) = rows[-2], rows[-1]
            f = (0.5 - pa) / (pb - pa)
            crossing = ya + f * (yb - ya)
            break
        s = prop.evolve(s, dt)
        t += dt
    return dict(eps_min=eps_min, separation=separation, J_omega=J_omega, predicted=predicted,
                measured=crossing, rows=rows, method=cfg.method)


def run_coupler(cfg: C.CouplerConfig, threads: int = 1) -> RunRecord:
    t0 = time.perf_counter()
    rec = RunRecord("coupler", C.to_dict(cfg))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = _pmap(_coupler_worker, [(cfg, e, s) for e, s in cfg.points], threads)
        table = []
        for r in res:
            tag = f"eps={r['eps_min']:g},sep={r['separation']:g}"
            for t, y, pr in r["rows"]:
                rec.tracks.append((t, f"{tag}:travel", y))
                rec.tracks.append((t, f"{tag}:pop_right", pr))
            meas = float("nan") if r["measured"] is None else r["measured"]
            table.append([r["eps_min"], r["separation"], r["J_omega"]["matrix_element"],
                          r["J_omega"]["orthogonalized"], r["J_omega"]["splitting"],
                          r["predicted"], meas, meas / r["predicted"] - 1])
        rec.tables["coupler"] = (["eps_min", "separation", "J_matrix_element",
                                  "J_orthogonalized", "J_splitting", "l_half_predicted",
                                  "l_half_measured", "rel_error"], table)
        rec.summary["max_rel_error"] = float(np.nanmax(np.abs([row[-1] for row in table])))
        if cfg.grid_eps and cfg.grid_separations:
            grid = run_coupling_grid(cfg.grid_eps, cfg.grid_separations, cfg.guide.wg,
                                     cfg.guide.d, cfg.method)
            rec.tables.update(grid.tables)
        rec.summary["method"] = cfg.method
    return _finish(rec, caught, t0)


def _coupler_worker(args):
    return coupler_point(*args)


# ---------------------------------------------------------------------------
# dynamic magnonic crystal
# ---------------------------------------------------------------------------

def predict_dmc_phase(spec: DMCSpec, v_g: float, round_trip: bool = False) -> float:
    """First-order phase -(1/v_g) * integral(eps dy) picked up crossing the crystal.

    Sign convention: the phase of <reference|with crystal>, so attractive
    wells give a positive phase.  Doubled for a round trip.
    """
    if not v_g > 0:
        raise ValueError(f"group velocity must be > 0, got {v_g}")
    phi = -dmc_integral(spec) / v_g
    return 2 * phi if round_trip else phi


def _dmc_setup(cfg: C.DMCConfig, ky: float | None = None):
    g = cfg.guide
    pk = cfg.packet
    ky = pk.ky if ky is None else ky
    h = cfg.dmc.d_dmc or cfg.dmc.period / 2
    y0 = 4 * pk.phi_y + 10 if pk.y0 is None else pk.y0
    start = y0 + 4 * pk.phi_y + cfg.gap + 3 * h
    length = cfg.dmc.n_periods * cfg.dmc.period
    ny = int(math.ceil(start + length + cfg.gap + 3 * h + 8 * pk.phi_y + 20))
    lat = LatticeSpec(cfg.nx, ny)
    xc = (cfg.nx - 1) / 2
    prof = _profile(g)
    layout = []
    mode = None
    if g.eps_min > 0:
        guide = GuideSpec.straight((xc, 0.0), (xc, ny - 1.0), prof)
        layout.append(guide)
        mode = transverse_modes(wire_profile(np.arange(cfg.nx) - xc, prof), 1.0, n_modes=1).modes[0]
    packet = WavepacketParams(xc, y0, pk.phi_x, pk.phi_y, 0.0, ky, mode)
    lo, hi = start - 3 * h, start + length + 3 * h
    # travel until the packet centre is 4 sigma beyond the crystal (with tails)
    v = max(2 * math.sin(ky), 1e-9)
    t_run = (hi + 4 * pk.phi_y + 10 - y0) / v
    return lat, layout, packet, start, (lo, hi), t_run


def dmc_point(cfg: C.DMCConfig, eps_dmc: float, ky: float | None = None,
              reference: SpinState | None = None) -> dict:
    lat, layout, packet, start, (lo, hi), t_run = _dmc_setup(cfg, ky)
    spec = _dmc_spec(cfg.dmc, eps_dmc, start)
    fld = layout_to_field(layout + [spec], lat)
    H = build_hamiltonian(lat, fld)
    s = Propagator(H, _prop_cfg(cfg.propagation)).evolve(make_packet(packet, lat), t_run)
    prof = s.prob().sum(axis=0)
    y = np.arange(lat.ny)
    R = float(prof[y < lo].sum())
    T = float(prof[y > hi].sum())
    inside = float(prof[(y >= lo) & (y <= hi)].sum())
    phase = float("nan")
    if reference is not None and T >= 0.5:
        phase = relative_phase(reference, s, Region.rect(lat, y0=hi))
    v = 2 * math.sin(packet.ky)
    return dict(eps_dmc=eps_dmc, R=R, T=T, inside=inside, phase=phase,
                predicted=predict_dmc_phase(spec, v) if eps_dmc > 0 else 0.0, state=s)


def run_dmc_sweep(cfg: C.DMCConfig, threads: int = 1) -> RunRecord:
    """Phase, reflection and transmission of one crystal pass versus depth."""
    t0 = time.perf_counter()
    rec = RunRecord("dmc", C.to_dict(cfg))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ref = dmc_point(cfg, 0.0)["state"]
        res = _pmap(_dmc_worker, [(cfg, e, ref) for e in cfg.eps_dmc], threads)
        wrapped = np.array([r["phase"] for r in res])
        unwrapped = np.full_like(wrapped, np.nan)
        ok = np.isfinite(wrapped)
        if ok.any():
            unwrapped[ok] = np.unwrap(wrapped[ok])
        table = [[r["eps_dmc"], r["R"], r["T"], r["inside"], w, u, r["predicted"]]
                 for r, w, u in zip(res, wrapped, unwrapped)]
        rec.tables["dmc"] = (["eps_dmc", "R", "T", "inside", "phase", "phase_unwrapped",
                              "phase_predicted"], table)
        eps = np.array([r["eps_dmc"] for r in res])
        if ok.sum() >= 3:
            slope, icpt = np.polyfit(eps[ok], unwrapped[ok], 1)
            fit = slope * eps[ok] + icpt
            ss = np.sum((unwrapped[ok] - unwrapped[ok].mean()) ** 2)
            rec.summary.update(phase_slope=float(slope),
                               phase_r2=float(1 - np.sum((unwrapped[ok] - fit) ** 2) / ss))
        rec.summary["max_R"] = float(max(r["R"] for r in res))
    return _finish(rec, caught, t0)


def _dmc_worker(args):
    cfg, e, ref = args
    r = dmc_point(cfg, e, reference=ref)
    r.pop("state")
    return r


# ---------------------------------------------------------------------------
# Michelson interferometer
# ---------------------------------------------------------------------------

FULL_SCALE = dict(guide=C.GuideParams(10.0, 10.0, 1.0), sep_far=35.0, sep_close=23.0,
                  taper=500.0, arm_length=1500.0)


@dataclass
class MichelsonLayout:
    lattice: LatticeSpec
    guides: tuple
    y_marks: dict
    x_mid: float
    x_left: float
    x_right_arm: float
    dmc_start: float
    launch_mode: np.ndarray
    y0: float
    coupling_length: float
    theta: float


def _separation_profile(cfg: C.MichelsonConfig, Lc: float, y_a: float):
    """Piecewise-linear guide separation: far, taper in, coupling, taper out, far."""
    ys = [0.0, y_a, y_a + cfg.taper, y_a + cfg.taper + Lc, y_a + 2 * cfg.taper + Lc]
    ss = [cfg.sep_far, cfg.sep_far, cfg.sep_close, cfg.sep_close, cfg.sep_far]
    return np.array(ys), np.array(ss)


def _mixing_angle(cfg: C.MichelsonConfig, Lc: float, v: float, n_slice: int) -> float:
    """Coupled-mode angle theta = integral(Delta(s(y)) dy) / (2 v); 50/50 at pi/4."""
    prof = _profile(cfg.guide)
    s_grid = np.linspace(cfg.sep_close, cfg.sep_far, 81)
    delta = np.array([guide_coupling(prof, s, n_slice, method="splitting") for s in s_grid])
    # each taper maps separation linearly onto length, so dy = taper / (far - close) ds
    taper_int = 0.0
    if cfg.sep_far > cfg.sep_close:
        taper_int = trapezoid(delta, s_grid) * cfg.taper / (cfg.sep_far - cfg.sep_close)
    return (2 * taper_int + Lc * delta[0]) / (2 * v)


def michelson_layout(cfg: C.MichelsonConfig, eps_dmc: float = 0.0) -> tuple:
    if cfg.full_scale:
        cfg = replace(cfg, **FULL_SCALE)
    g = cfg.guide
    prof = _profile(g)
    pk = cfg.packet
    v = 2 * math.sin(pk.ky)
    pad = cfg.margin + g.wg + 2 * g.d
    nx = int(math.ceil(cfg.sep_far + 2 * pad)) | 1
    n_slice = nx
    Lc = cfg.coupling_length
    if Lc is None:
        th_taper = _mixing_angle(cfg, 0.0, v, n_slice)
        d_close = guide_coupling(prof, cfg.sep_close, n_slice, method="splitting")
        Lc = max(0.0, (math.pi / 4 - th_taper) * 2 * v / d_close)
    theta = _mixing_angle(cfg, Lc, v, n_slice)
    y0 = 4 * pk.phi_y + 10 if pk.y0 is None else pk.y0
    y_a = y0 + 4 * pk.phi_y + 10
    ys, ss = _separation_profile(cfg, Lc, y_a)
    y_top = ys[-1] + cfg.arm_length
    ny = int(math.ceil(y_top)) + 1
    ys = np.append(ys, ny - 1.0)
    ss = np.append(ss, cfg.sep_far)
    xc = (nx - 1) / 2
    gL = GuideSpec(np.column_stack([xc - ss / 2, ys]), prof)
    gR = GuideSpec(np.column_stack([xc + ss / 2, ys]), prof)
    lat = LatticeSpec(nx, ny)
    L = cfg.dmc.n_periods * cfg.dmc.period
    dmc_start = ny - 1 - cfg.dmc_gap - L
    half = g.wg + 2 * g.d
    x_arm_R = xc + cfg.sep_far / 2
    x_arm_L = xc - cfg.sep_far / 2
    layout = [gL, gR, _dmc_spec(cfg.dmc, eps_dmc, dmc_start, (x_arm_R, half))]
    if cfg.dmc_both_arms:
        layout.append(_dmc_spec(cfg.dmc, eps_dmc, dmc_start, (x_arm_L, half)))
    mode = transverse_modes(wire_profile(np.arange(nx) - x_arm_L, prof), 1.0, n_modes=1).modes[0]
    marks = dict(zip(["launch_region_end", "taper_in", "coupling_start", "coupling_end",
                      "taper_out_end", "top"], [float(v_) for v_ in ys]))
    lay = MichelsonLayout(lat, (gL, gR), marks, xc, x_arm_L, x_arm_R, dmc_start, mode, y0, Lc,
                          theta)
    return lay, layout


def michelson_point(cfg: C.MichelsonConfig, eps_dmc: float) -> dict:
    """One full interferometer pass: launch in L, reflect off the far edge, read out."""
    lay, layout = michelson_layout(cfg, eps_dmc)
    lat = lay.lattice
    fld = layout_to_field(layout, lat)
    if eps_dmc == 0 or cfg.dmc_both_arms:
        asym = float(np.max(np.abs(fld.eps - fld.eps[::-1, :])))
        if asym > 1e-9:
            warnings.warn(f"interferometer arms are not mirror images (max |d eps| = {asym:.2e});"
                          " expect a static phase")
    H = build_hamiltonian(lat, fld)
    pk = cfg.packet
    s = make_packet(WavepacketParams(lay.x_left, lay.y0, 1.0, pk.phi_y, 0.0, pk.ky,
                                     lay.launch_mode), lat)
    v = 2 * math.sin(pk.ky)
    t_end = 2 * (lat.ny - 1 - lay.y0) / v
    prop = Propagator(H, _prop_cfg(cfg.propagation))
    X, Y = lat.coords()
    left = X < lay.x_mid
    rows = []
    t = 0.0
    for tt in _time_grid(t_end, cfg.propagation.t_step):
        if tt > t:
            s = prop.evolve(s, tt - t)
            t = tt
        P = s.prob()
        rows.append((t, float(P[left].sum()), float(P[~left].sum()), centroid(s)[1]))
    P = s.prob()
    below = Y < lay.y_marks["taper_in"]
    return dict(eps_dmc=eps_dmc, pop_L=float(P[left].sum()), pop_R=float(P[~left].sum()),
                returned=float(P[below].sum()), rows=rows, coupling_length=lay.coupling_length,
                theta=lay.theta, shape=lat.shape)


def _sinusoid(e, a, b, w, p):
    return a + b * np.cos(w * e + p)


def fit_sinusoid(eps, pop) -> dict:
    """Least-squares a + b cos(w eps + p); the full cycle is 2 pi / w."""
    eps, pop = np.asarray(eps, float), np.asarray(pop, float)
    # seed the frequency from the dominant FFT bin on the (uniform) sweep grid
    n = len(eps)
    spec = np.abs(np.fft.rfft(pop - pop.mean(), 8 * n))
    freqs = np.fft.rfftfreq(8 * n, d=(eps[-1] - eps[0]) / (n - 1))
    f0 = freqs[1 + np.argmax(spec[1:])]
    best = None
    for w0 in (2 * np.pi * f0 * k for k in (0.8, 1.0, 1.25)):
        for p0 in (0.0, np.pi / 2, np.pi, -np.pi / 2):
            try:
                popt, _ = curve_fit(_sinusoid, eps, pop, p0=[pop.mean(), np.ptp(pop) / 2, w0, p0],
                                    maxfev=20000)
            except RuntimeError:
                continue
            res = np.sum((pop - _sinusoid(eps, *popt)) ** 2)
            if best is None or res < best[1]:
                best = (popt, res)
    popt, res = best
    a, b, w, p = popt
    if b < 0:
        b, p = -b, p + np.pi
    if w < 0:
        w, p = -w, -p
    ss = np.sum((pop - pop.mean()) ** 2)
    return dict(offset=float(a), amplitude=float(b), omega=float(w),
                phase=float(np.angle(np.exp(1j * p))), period=float(2 * np.pi / w),
                r2=float(1 - res / ss))


def first_crossing(x, y, level: float = 0.5) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    for k in range(1, len(x)):
        if (y[k - 1] - level) * (y[k] - level) <= 0 and y[k] != y[k - 1]:
            return float(x[k - 1] + (level - y[k - 1]) * (x[k] - x[k - 1]) / (y[k] - y[k - 1]))
    return float("nan")


def run_michelson(cfg: C.MichelsonConfig, threads: int = 1) -> RunRecord:
    t0 = time.perf_counter()
    rec = RunRecord("michelson", C.to_dict(cfg))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = _pmap(_michelson_worker, [(cfg, e) for e in cfg.eps_dmc], threads)
        table = [[r["eps_dmc"], r["pop_L"], r["pop_R"], r["returned"]] for r in res]
        rec.tables["michelson"] = (["eps_dmc", "pop_L", "pop_R", "returned"], table)
        for r in res:
            for t, pl, pr, cy in r["rows"]:
                rec.tracks.append((t, f"eps={r['eps_dmc']:g}:pop_L", pl))
                rec.tracks.append((t, f"eps={r['eps_dmc']:g}:pop_R", pr))
        eps = np.array([r["eps_dmc"] for r in res])
        popL = np.array([r["pop_L"] for r in res])
        rec.summary.update(coupling_length=res[0]["coupling_length"], theta=res[0]["theta"],
                           lattice=list(res[0]["shape"]))
        zero = [r for r in res if r["eps_dmc"] == 0]
        if zero:
            rec.summary["static_pop_R"] = zero[0]["pop_R"]
        if len(eps) >= 5:
            fit = fit_sinusoid(eps, popL)
            rec.summary["fit"] = fit
            order = np.argsort(eps)
            rec.summary["equal_split"] = first_crossing(eps[order], popL[order], 0.5)
            rec.summary["equal_split_over_period"] = rec.summary["equal_split"] / fit["period"]
        try:
            v = 2 * math.sin(cfg.packet.ky)
            lay, _ = michelson_layout(cfg, 1.0)
            spec = _dmc_spec(cfg.dmc, 1.0, lay.dmc_start)
            slope = predict_dmc_phase(spec, v, round_trip=True)
            rec.summary["predicted_period"] = float(2 * np.pi / abs(slope))
        except Exception as exc:  # noqa: BLE001 - summary extra only
            rec.warnings.append(f"phase prediction failed: {exc}")
    return _finish(rec, caught, t0)


def _michelson_worker(args):
    r = michelson_point(*args)
    return r


# ---------------------------------------------------------------------------
# analyses without dynamics
# ---------------------------------------------------------------------------

def run_dispersion(cfg: C.DispersionConfig) -> RunRecord:
    from .spectral import bz_path, m_gamma_comparison

    t0 = time.perf_counter()
    rec = RunRecord("dispersion", C.to_dict(cfg))
    path = bz_path(cfg.points, cfg.Je, cfg.Jd)
    rec.tables["dispersion"] = (["s", "kx", "ky", "omega"], [list(r) for r in path.rows()])
    rec.summary["corners"] = path.corners
    if cfg.Jd > 0:
        cmp_ = m_gamma_comparison(cfg.Je, cfg.Jd)
        rec.summary["m_gamma"] = dict(energy=cmp_.energy, k_diagonal=cmp_.k_diagonal,
                                      k_rescaled=cmp_.k_rescaled, rel_k=cmp_.rel_k,
                                      rel_energy=cmp_.rel_energy)
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_modes(cfg: C.ModesConfig) -> RunRecord:
    """Transverse spectra of one straight guide for each eps_min."""
    from .spectral import confinement_factor, count_confined_modes, guide_slice

    t0 = time.perf_counter()
    rec = RunRecord("modes", C.to_dict(cfg))
    rows, summ = [], []
    for e in cfg.eps_min:
        x, sl = guide_slice(cfg.n_sites, _profile(cfg.guide, e)) if e > 0 else (
            np.arange(cfg.n_sites, dtype=float), np.zeros(cfg.n_sites))
        ms = transverse_modes(sl, 1.0, cfg.n_modes, x)
        xc = (cfg.n_sites - 1) / 2
        cfs = [confinement_factor(m, cfg.guide.wg, xc, x) for m in ms.modes]
        rows += [[e, n, ms.energies[n], cfs[n], int(ms.energies[n] < -BOUND_TOL)]
                 for n in range(len(ms.energies))]
        summ.append([e, cfs[0], count_confined_modes(ms, cfg.guide.wg, cfg.threshold, xc),
                     ms.n_bound()])
    rec.tables["modes"] = (["eps_min", "index", "energy", "CF", "bound"], rows)
    rec.tables["mode_summary"] = (["eps_min", "ground_CF", "n_confined", "n_bound"], summ)
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_coupling_grid(eps_values, separations, wg: float, d: float,
                      method: str = "splitting") -> RunRecord:
    from .spectral import coupling_grid

    t0 = time.perf_counter()
    rec = RunRecord("coupling_grid", dict(eps_min=list(eps_values), separations=list(separations),
                                          wg=wg, d=d, method=method))
    grid = coupling_grid(eps_values, separations, wg, d, method)
    rec.tables["coupling_grid"] = (["eps_min", "separation", "J_omega"],
                                   [[e, s, grid[a, b]] for a, e in enumerate(eps_values)
                                    for b, s in enumerate(separations)])
    rec.wall_time = time.perf_counter() - t0
    return rec


def material_from(cfg: C.UnitsConfig):
    from . import units as U

    m = U.PRESETS["P:Si"] if cfg.material == "P:Si" else None
    if m is None and (cfg.J_ueV is None or cfg.a_nm is None):
        raise ConfigError("material 'custom' needs J_ueV and a_nm")
    kw = {}
    if cfg.J_ueV is not None:
        kw["J_phys"] = cfg.J_ueV * 1e-6 * U.EV
    if cfg.a_nm is not None:
        kw["a_phys"] = cfg.a_nm * 1e-9
    if cfg.gamma is not None:
        kw["gamma"] = cfg.gamma
    if cfg.mu is not None:
        kw["mu"] = cfg.mu
    if m is None:
        return U.MaterialParams(name="custom", **kw)
    return m.with_(**kw)


def run_units(cfg: C.UnitsConfig) -> RunRecord:
    from .units import conversion_table

    rec = RunRecord("units", C.to_dict(cfg))
    rows = conversion_table(material_from(cfg), cfg.d, cfg.eps_min, cfg.device_length_um * 1e-6)
    rec.tables["units"] = (["quantity", "value", "unit", "note"], [list(r) for r in rows])
    return rec
