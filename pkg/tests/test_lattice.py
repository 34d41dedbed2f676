import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinguide.lattice import (Boundary, ConfigError, CouplingSpec, LatticeSpec, SpinState,
                               apply_hamiltonian, build_hamiltonian, coordination)

from oracles import dense_hamiltonian, periodic_spectrum


def test_flat_index_convention():
    lat = LatticeSpec(3, 5)
    assert lat.flatten(2, 4) == 14
    i, j = lat.unflatten(14)
    assert (i, j) == (2, 4)
    X, Y = lat.coords()
    assert X[2, 4] == 2 and Y[2, 4] == 4


@pytest.mark.parametrize("nx,ny", [(1, 5), (5, 0)])
def test_lattice_too_small(nx, ny):
    with pytest.raises(ConfigError):
        LatticeSpec(nx, ny)


def test_bad_coupling():
    with pytest.raises(ConfigError, match="Je"):
        CouplingSpec(Je=0.0)
    with pytest.raises(ConfigError, match="Jd"):
        CouplingSpec(Jd=-0.1)


def test_effective_coupling():
    assert CouplingSpec(1.0, 0.25).effective == 1.5


@given(st.integers(2, 6), st.integers(2, 6), st.floats(0.5, 2.0), st.floats(0.0, 0.5),
       st.booleans(), st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_matches_dense_oracle(nx, ny, Je, Jd, periodic, seed):
    eps = np.random.default_rng(seed).uniform(-1, 1, (nx, ny))
    lat = LatticeSpec(nx, ny, CouplingSpec(Je, Jd), "periodic" if periodic else "hard_wall")
    H = build_hamiltonian(lat, eps).dense()
    ref = dense_hamiltonian(nx, ny, eps, Je, Jd, periodic)
    assert np.allclose(H, ref, atol=1e-14)
    assert np.allclose(H, H.T)


def test_zero_field_ground_state():
    # the uniform state is annihilated on any hard-wall lattice: band bottom at 0
    lat = LatticeSpec(7, 4)
    H = build_hamiltonian(lat)
    v = np.ones(lat.size) / np.sqrt(lat.size)
    assert np.max(np.abs(apply_hamiltonian(H, v))) < 1e-14
    assert np.linalg.eigvalsh(H.dense())[0] == pytest.approx(0, abs=1e-12)


def test_two_by_two_periodic_spectrum():
    # each bond counted twice through the wrap: spectrum {0, 4, 4, 8}
    H = build_hamiltonian(LatticeSpec(2, 2, boundary="periodic"))
    assert np.allclose(np.linalg.eigvalsh(H.dense()), [0, 4, 4, 8])


def test_periodic_band():
    H = build_hamiltonian(LatticeSpec(6, 8, CouplingSpec(1.0, 0.3), Boundary.PERIODIC))
    assert np.allclose(np.linalg.eigvalsh(H.dense()), periodic_spectrum(6, 8, 1.0, 0.3),
                       atol=1e-12)


def test_coordination_counts():
    z = coordination(LatticeSpec(4, 3))
    assert z[0, 0] == 2 and z[1, 0] == 3 and z[1, 1] == 4
    zd = coordination(LatticeSpec(4, 3), diagonal=True)
    assert zd[0, 0] == 1 and zd[1, 1] == 4


def test_gershgorin_encloses_spectrum():
    rng = np.random.default_rng(3)
    lat = LatticeSpec(5, 5)
    H = build_hamiltonian(lat, rng.normal(size=lat.shape))
    lo, hi = H.bounds()
    w = np.linalg.eigvalsh(H.dense())
    assert lo <= w[0] and w[-1] <= hi


def test_field_shape_and_finiteness():
    lat = LatticeSpec(3, 3)
    with pytest.raises(ConfigError, match="shape"):
        build_hamiltonian(lat, np.zeros((3, 4)))
    bad = np.zeros((3, 3))
    bad[1, 1] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        build_hamiltonian(lat, bad)


def test_state_normalization_enforced():
    with pytest.raises(ValueError, match="normalized"):
        SpinState(np.ones(4), (2, 2))
    s = SpinState.normalized(np.ones(4), (2, 2))
    assert s.norm == pytest.approx(1.0)
    assert s.prob().sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        SpinState.normalized(np.zeros(4), (2, 2))


def test_site_state_is_read_only():
    s = SpinState.site(LatticeSpec(3, 3), 1, 2)
    assert s.grid()[1, 2] == 1
    with pytest.raises(ValueError):
        s.amps[0] = 1
