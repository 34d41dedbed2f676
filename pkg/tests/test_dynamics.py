import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinguide.dynamics import (EXACT_MAX_SITES, InconclusiveScattering, PropagationError,
                                Propagator, PropagatorConfig, Region, WavepacketParams, centroid,
                                evolve, make_packet, propagate, region_population,
                                relative_phase, scattering_rt, spread)
from spinguide.lattice import ConfigError, LatticeSpec, SpinState, build_hamiltonian
from spinguide.potentials import GuideSpec, WirePairProfile

from oracles import dense_evolve, dense_hamiltonian, expm_evolve

METHODS = ["chebyshev_expansion", "krylov_step", "exact_small"]


def _random_state(n, rng):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


@pytest.mark.parametrize("method", METHODS)
def test_matches_dense_oracle(method):
    rng = np.random.default_rng(11)
    lat = LatticeSpec(9, 7)
    eps = rng.uniform(-1, 1, lat.shape)
    H = build_hamiltonian(lat, eps)
    psi = _random_state(lat.size, rng)
    out = Propagator(H, PropagatorConfig(method)).apply(psi, 7.3)
    ref = expm_evolve(dense_hamiltonian(9, 7, eps), psi, 7.3)
    assert np.max(np.abs(out - ref)) < 1e-10


@given(st.integers(2, 8), st.integers(2, 8), st.floats(-40, 40), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_chebyshev_property(nx, ny, t, seed):
    rng = np.random.default_rng(seed)
    lat = LatticeSpec(nx, ny)
    H = build_hamiltonian(lat, rng.uniform(-2, 2, lat.shape))
    psi = _random_state(lat.size, rng)
    out = Propagator(H).apply(psi, t)
    assert np.max(np.abs(out - dense_evolve(H.dense(), psi, t))) < 1e-9
    assert abs(np.linalg.norm(out) - 1) < 1e-12


def test_time_reversal_and_composition():
    rng = np.random.default_rng(5)
    lat = LatticeSpec(10, 10)
    H = build_hamiltonian(lat, rng.uniform(-1, 1, lat.shape))
    p = Propagator(H)
    psi = _random_state(lat.size, rng)
    assert np.allclose(p.apply(p.apply(psi, 13.0), -13.0), psi, atol=1e-11)
    assert np.allclose(p.apply(p.apply(psi, 4.0), 9.0), p.apply(psi, 13.0), atol=1e-11)
    assert np.array_equal(p.apply(psi, 0.0), psi)


def test_long_time_substeps():
    # r*t beyond the single-expansion limit is split internally
    lat = LatticeSpec(6, 6)
    H = build_hamiltonian(lat)
    psi = _random_state(lat.size, np.random.default_rng(0))
    out = Propagator(H).apply(psi, 3000.0)
    assert np.max(np.abs(out - dense_evolve(H.dense(), psi, 3000.0))) < 1e-8


def test_deterministic_bitwise():
    lat = LatticeSpec(24, 30)
    H = build_hamiltonian(lat, np.random.default_rng(2).uniform(-1, 1, lat.shape))
    s = make_packet(WavepacketParams(12, 15, 2.5, 2.5), lat)
    a = evolve(H, s, 25.0).amps
    b = evolve(H, s, 25.0).amps
    assert np.array_equal(a, b)


def test_config_validation():
    with pytest.raises(ConfigError, match="tol"):
        PropagatorConfig(tol=1e-6)
    with pytest.raises(ValueError):
        PropagatorConfig(method="rk4")
    big = build_hamiltonian(LatticeSpec(65, 64))
    assert big.dim > EXACT_MAX_SITES
    with pytest.raises(ConfigError, match="exact_small"):
        Propagator(big, PropagatorConfig("exact_small"))


def test_norm_guard():
    lat = LatticeSpec(4, 4)
    H = build_hamiltonian(lat)
    p = Propagator(H)
    p._Hn = p._Hn * 1.5  # break the rescaling so the series stops being unitary
    with pytest.raises(PropagationError, match="norm"):
        p.evolve(SpinState.site(lat, 1, 1), 50.0)


def test_propagate_generator():
    lat = LatticeSpec(8, 8)
    H = build_hamiltonian(lat)
    s0 = SpinState.site(lat, 3, 3)
    out = list(propagate(H, s0, [0.0, 1.0, 2.5]))
    assert [t for t, _ in out] == [0.0, 1.0, 2.5]
    assert out[0][1] is s0
    assert np.allclose(out[2][1].amps, evolve(H, s0, 2.5).amps, atol=1e-12)
    with pytest.raises(ValueError, match="ascending"):
        list(propagate(H, s0, [1.0, 0.5]))


def test_packet_shape_and_carrier():
    lat = LatticeSpec(60, 80)
    s = make_packet(WavepacketParams(30, 40, 6, 6, 0.0, math.pi / 2), lat)
    cx, cy = centroid(s)
    sx, sy = spread(s)
    assert (cx, cy) == (pytest.approx(30), pytest.approx(40))
    # |exp(-x^2 / 2 phi^2)|^2 has standard deviation phi / sqrt(2)
    assert sx == pytest.approx(6 / math.sqrt(2), rel=1e-6)
    g = s.grid()
    assert np.angle(g[30, 41] / g[30, 40]) == pytest.approx(math.pi / 2)


def test_packet_moves_along_k():
    lat = LatticeSpec(60, 200)
    H = build_hamiltonian(lat)
    s = make_packet(WavepacketParams(30, 50, 6, 6, 0.0, math.pi / 2), lat)
    s2 = evolve(H, s, 20.0)
    assert centroid(s2)[1] - centroid(s)[1] == pytest.approx(40.0, rel=0.01)


def test_packet_clipping_warns():
    with pytest.warns(UserWarning, match="clipped"):
        make_packet(WavepacketParams(1, 20, 6, 6), LatticeSpec(30, 40))


def test_transverse_override():
    lat = LatticeSpec(10, 60)
    mode = np.sin(np.pi * (np.arange(10) + 1) / 11)
    s = make_packet(WavepacketParams(0, 30, transverse_mode_override=mode), lat)
    prof = s.prob().sum(axis=1)
    assert np.allclose(prof / prof.sum(), mode**2 / np.sum(mode**2))
    with pytest.raises(ConfigError):
        make_packet(WavepacketParams(0, 30, transverse_mode_override=mode[:5]), lat)


def test_regions_partition():
    lat = LatticeSpec(40, 40)
    s = make_packet(WavepacketParams(20, 20, 4, 4), lat)
    a = Region.rect(lat, x1=19.5)
    assert region_population(s, a) + region_population(s, ~a) == pytest.approx(1.0)
    assert region_population(s, a | ~a) == pytest.approx(1.0)
    assert region_population(s, a & ~a) == 0
    g = GuideSpec.straight((10, 0), (10, 39), WirePairProfile(3, 3, 0.1))
    assert Region.tube(lat, g).mask.sum() == 7 * 40


def test_relative_phase():
    lat = LatticeSpec(20, 20)
    s = make_packet(WavepacketParams(10, 10, 2, 2), lat)
    t = SpinState(s.amps * np.exp(0.7j), s.shape)
    full = Region.full(lat)
    assert relative_phase(s, t, full) == pytest.approx(0.7)
    assert relative_phase(s, SpinState(-s.amps, s.shape), full) == pytest.approx(math.pi)
    with pytest.raises(ValueError, match="insufficient overlap"):
        relative_phase(s, t, Region.rect(lat, x0=19))


def test_free_scattering_transmits():
    lat = LatticeSpec(5, 300)
    H = build_hamiltonian(lat)
    mode = np.ones(5) / math.sqrt(5)
    s = make_packet(WavepacketParams(2, 60, 1, 10, 0, math.pi / 2, mode), lat)
    r = scattering_rt(H, s, 80.0, 140, 160)
    assert r.T > 0.999 and r.R < 1e-6
    with pytest.raises(InconclusiveScattering):
        scattering_rt(H, s, 45.0, 140, 160)
