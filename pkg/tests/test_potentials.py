import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinguide.lattice import ConfigError, LatticeSpec
from spinguide.potentials import (Bias, DMCSpec, GuideSpec, PotentialField, WirePairProfile,
                                  depth_map, dmc_integral, dmc_profile, layout_to_field,
                                  pair_field, profile_analysis, wire_profile)

from oracles import FROZEN, splits, wire_pair


def test_profile_centre_depth():
    p = WirePairProfile(20, 20, 0.1)
    assert wire_profile(0.0, p) == pytest.approx(-0.1, rel=1e-14)
    assert wire_profile(20.0, p) == pytest.approx(FROZEN["wire_pair_at_wg"], rel=1e-12)


@given(st.floats(1, 60), st.floats(1, 60), st.floats(0.01, 2))
@settings(max_examples=60, deadline=None)
def test_profile_matches_oracle_and_is_even(wg, d, eps):
    x = np.linspace(-200, 200, 81)
    p = WirePairProfile(wg, d, eps)
    got = wire_profile(x, p)
    assert np.allclose(got, wire_pair(x, wg, d, eps), rtol=1e-12, atol=1e-15)
    assert np.allclose(got, got[::-1], atol=1e-15)


def test_profile_tails_decay_as_inverse_square():
    p = WirePairProfile(5, 5, 1.0)
    r = wire_profile(4000.0, p) / wire_profile(2000.0, p)
    assert r == pytest.approx(0.25, rel=1e-2)


def test_profile_linear_in_depth():
    x = np.arange(-50, 51.0)
    a = wire_profile(x, WirePairProfile(10, 10, 0.2))
    b = wire_profile(x, WirePairProfile(10, 10, 0.6))
    assert np.allclose(b, 3 * a, rtol=1e-13)


@given(st.floats(0.5, 50), st.floats(0.5, 50))
@settings(max_examples=80, deadline=None)
def test_split_threshold_matches_analytic(wg, d):
    ratio = wg / d
    if abs(ratio - math.sqrt(3)) < 1e-3:
        return
    assert profile_analysis(wg, d).is_split == splits(wg, d)


def test_depth_per_current_peaks_at_wg_equal_d():
    assert profile_analysis(20, 20).depth_at_center == pytest.approx(FROZEN["depth_wg_eq_d"])
    wg = np.linspace(2, 60, 59)
    dm = depth_map(wg, [20.0])[:, 0]
    assert wg[np.argmax(dm)] == pytest.approx(20.0, abs=1.0)


def test_split_well_minimum_off_centre():
    a = profile_analysis(60, 10)
    assert a.is_split and a.x_min > 10
    assert profile_analysis(10, 10).x_min == pytest.approx(0.0, abs=0.05)


def test_bad_profile():
    with pytest.raises(ConfigError, match="d"):
        WirePairProfile(10, 0, 0.1)
    with pytest.raises(ConfigError, match="eps_min"):
        WirePairProfile(10, 10, -0.1)
    with pytest.raises(ValueError, match="degenerate"):
        wire_profile(0.0, WirePairProfile(0.0, 5.0, 0.1))


def test_pair_field_antisymmetric_wires():
    # each wire alone is odd about its own position; the pair is even in x
    x = np.linspace(-30, 30, 61)
    assert np.allclose(pair_field(x, 7, 3), pair_field(-x, 7, 3))


def test_straight_guide_field_is_cross_section():
    lat = LatticeSpec(41, 30)
    p = WirePairProfile(5, 5, 0.3)
    f = layout_to_field([GuideSpec.straight((20, 0), (20, 29), p)], lat).eps
    expect = wire_profile(np.arange(41) - 20.0, p)
    assert np.allclose(f, expect[:, None], atol=1e-12)


def test_arc_offsets_are_radial_distance():
    g = GuideSpec.from_segments((0, 0), 90, [("straight", 20), ("arc", 100, -45),
                                            ("straight", 20)], WirePairProfile(5, 5, 0.1))
    # arc centre sits at (100, 20); for a right turn the left side is the outside, so
    # the signed offset is r - R
    phi = np.radians(160)
    r = np.array([90.0, 100.0, 112.0])
    X = 100 + r * np.cos(phi)
    Y = 20 + r * np.sin(phi)
    off, _ = g.local_frame(X, Y)
    assert np.allclose(off, r - 100, atol=1e-3)
    assert g.length == pytest.approx(40 + 100 * math.pi / 4, rel=1e-5)


def test_arc_turns_correct_way():
    g = GuideSpec.from_segments((0, 0), 90, [("arc", 50, 90)], WirePairProfile())
    assert g.path[-1] == pytest.approx([-50, 50], abs=1e-9)
    g = GuideSpec.from_segments((0, 0), 90, [("arc", 50, -90)], WirePairProfile())
    assert g.path[-1] == pytest.approx([50, 50], abs=1e-9)


def test_guide_segment_errors():
    with pytest.raises(ConfigError, match="RC"):
        GuideSpec.from_segments((0, 0), 0, [("arc", 0, 10)], WirePairProfile())
    with pytest.raises(ConfigError, match="kind"):
        GuideSpec.from_segments((0, 0), 0, [("spiral", 1)], WirePairProfile())


def test_guide_outside_lattice_warns():
    lat = LatticeSpec(10, 10)
    g = GuideSpec.straight((500, 0), (500, 9), WirePairProfile(2, 2, 0.1))
    with pytest.warns(UserWarning, match="outside"):
        fld = layout_to_field([g], lat)
    assert fld.notes


def test_superposition_and_bias():
    lat = LatticeSpec(30, 40)
    p = WirePairProfile(4, 4, 0.2)
    g1 = GuideSpec.straight((8, 0), (8, 39), p)
    g2 = GuideSpec.straight((21, 0), (21, 39), p)
    both = layout_to_field([g1, g2, Bias(0.05)], lat).eps
    sep = layout_to_field([g1], lat) + layout_to_field([g2], lat)
    assert np.allclose(both, sep.eps + 0.05)
    assert PotentialField.zeros(lat).eps.shape == (30, 40)


@pytest.mark.parametrize("model", ["wells", "wires"])
def test_dmc_depth_normalization(model):
    spec = DMCSpec(10, 20.0, 0.07, 100.0, model=model)
    y = np.linspace(100, 300, 4001)
    assert dmc_profile(y, spec).min() == pytest.approx(-0.07, rel=1e-3)
    assert np.all(dmc_profile(y, spec.with_depth(0.0)) == 0)


def test_dmc_integral_linear_and_signed():
    spec = DMCSpec(10, 20.0, 0.01, 0.0)
    a, b = dmc_integral(spec), dmc_integral(spec.with_depth(0.03))
    assert a < 0
    assert b == pytest.approx(3 * a, rel=1e-10)
    # closed form: N Lorentzians of area pi h each, divided by the overlap-deepened peak
    h = 10.0
    yy = np.linspace(0, 200, 200001)
    centres = (np.arange(10) + 0.5) * 20
    peak = np.max(np.sum(h**2 / ((yy[:, None] - centres) ** 2 + h**2), axis=1))
    margin = 50 * h
    tails = sum(h * (math.atan((200 + margin - c) / h) - math.atan((-margin - c) / h))
                for c in centres)
    assert a == pytest.approx(-0.01 * tails / peak, rel=1e-6)


def test_dmc_wires_mean_vanishes_with_window():
    spec = DMCSpec(10, 20.0, 0.05, 0.0, model="wires")
    wells = abs(dmc_integral(DMCSpec(10, 20.0, 0.05, 0.0)))
    short, long_ = abs(dmc_integral(spec, 500.0)), abs(dmc_integral(spec, 50000.0))
    assert short < 0.2 * wells
    assert long_ < 0.02 * short


def test_dmc_span_restricts_transversally():
    lat = LatticeSpec(40, 300)
    spec = DMCSpec(5, 20.0, 0.1, 50.0, span=(30.0, 5.0))
    eps = layout_to_field([spec], lat).eps
    assert np.all(eps[:24, :] == 0) and eps[30].min() < -0.09


def test_dmc_validation():
    with pytest.raises(ConfigError, match="eps_dmc"):
        DMCSpec(eps_dmc=-1)
    with pytest.raises(ConfigError, match="model"):
        DMCSpec(model="comb")
