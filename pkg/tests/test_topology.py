import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosotop.diagonalize import diagonalize_bloch
from bosotop.errors import GapClosedError, ResolutionError, ValidationError
from bosotop.nambu import SIGMA3, build_prototype_bloch, k_grid
from bosotop.samplers import random_sls_bloch
from bosotop.topology import (AZClass, AZEntry, analyze_topology, az_table_lookup,
                              flatten_at_zero_energy, q_from_D, symplectic_polarization,
                              whole_polarization_quantization, winding_number)


@pytest.mark.parametrize("power", [-3, -1, 0, 1, 2, 5])
def test_winding_of_pure_harmonics(power):
    k = k_grid(64)
    assert winding_number(0.3 + np.exp(1j * power * k)) == power
    assert winding_number(2.0 + np.exp(1j * power * k)) == 0


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.05, 3), b=st.floats(0.05, 3), shift=st.floats(0, 6.3))
def test_winding_oracle_linear_symbol(a, b, shift):
    if abs(a - b) < 0.02:
        return
    k = k_grid(401)
    q = np.exp(1j * shift) * (a + b * np.exp(1j * k))
    assert winding_number(q) == (1 if b > a else 0)


def test_q_from_blocks():
    k = k_grid(32)
    D = (1 + 1.3 * np.exp(-1j * k))[:, None, None]
    assert winding_number(D) == 1
    assert np.allclose(q_from_D(D), 1 + 1.3 * np.exp(1j * k))
    D2 = np.zeros((32, 2, 2), dtype=complex)
    D2[:, 0, 0] = 1 + 1.3 * np.exp(-1j * k)
    D2[:, 1, 1] = 1 + 1.3 * np.exp(-1j * k)
    assert winding_number(D2) == 2


def test_winding_errors():
    k = k_grid(64)
    with pytest.raises(GapClosedError, match="k="):
        winding_number(1 + np.exp(1j * k))
    with pytest.raises(ResolutionError, match="finer"):
        winding_number(np.exp(5j * k_grid(12)))
    with pytest.raises(ValidationError):
        winding_number(np.ones(2))
    res = winding_number(0.5 + np.exp(1j * k), return_residual=True)
    assert res[0] == 1 and res[1] < 1e-12


def test_prototype_topological_and_trivial(proto_topo, proto_triv):
    top = analyze_topology(proto_topo, SIGMA3)
    assert (top.winding, top.polarization) == (1, pytest.approx(0.5, abs=1e-9))
    assert abs(top.polarization_whole) == pytest.approx(1, abs=1e-6)
    assert top.gap_center == pytest.approx(np.sqrt(24))
    grid_gap = 2 * np.min(np.abs(1 + 1.3 * np.exp(1j * proto_topo.k)))
    assert top.gap_min == pytest.approx(grid_gap, abs=1e-9)
    triv = analyze_topology(proto_triv, SIGMA3)
    assert (triv.winding, triv.polarization) == (0, pytest.approx(0.0, abs=1e-9))
    assert triv.polarization_whole == pytest.approx(0, abs=1e-6)
    d = triv.to_dict()
    assert set(d) == {"nu", "P", "P_whole", "gap_min", "gap_center", "winding_residual",
                      "regularization"}


@pytest.mark.parametrize("xi_abs, phase", [(0.0, 0.0), (2.0, 0.0), (1.0, 1.7), (3.0, -0.4)])
def test_invariants_do_not_depend_on_pairing(xi_abs, phase):
    for t2, nu in ((1.3, 1), (0.7, 0)):
        res = analyze_topology(build_prototype_bloch(5, 1, t2, xi_abs, phase, 101), SIGMA3)
        assert res.winding == nu
        assert res.polarization == pytest.approx(nu / 2, abs=1e-9)


def test_near_critical_points_need_fine_grid():
    for t2, nu in ((1.01, 1), (0.99, 0)):
        assert analyze_topology(build_prototype_bloch(5, 1, t2, 1, 0, 2001), SIGMA3).winding == nu


def test_critical_point_gap_closes():
    with pytest.raises(GapClosedError):
        analyze_topology(build_prototype_bloch(5, 1, 1.0, 1, 0, 100), SIGMA3)


def test_broken_sublattice_rejected():
    b = build_prototype_bloch(5, 1, 1.3, 1, 0, 21)
    b = type(b)(b.K + 0.1 * SIGMA3[None], b.M)
    with pytest.raises(ValidationError, match="sublattice"):
        analyze_topology(b, SIGMA3)


def test_polarization_band_count_validation(proto_topo):
    bogs = diagonalize_bloch(proto_topo)
    with pytest.raises(ValidationError):
        symplectic_polarization(bogs, n_bands=3)
    # both bands together are trivial
    assert symplectic_polarization(bogs, n_bands=2) == pytest.approx(0.0, abs=1e-9)


def test_unstable_grid_rejected():
    with pytest.warns(UserWarning):
        b = build_prototype_bloch(2, 1, 1.3, 1, 0, 21)
    with pytest.raises(ValidationError, match="regularize"):
        symplectic_polarization(diagonalize_bloch(b))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_whole_polarization_quantized_random(seed):
    rng = np.random.default_rng(seed)
    b, S = random_sls_bloch(4, 64, rng)
    bogs = diagonalize_bloch(b)
    try:
        whole = whole_polarization_quantization(bogs, S)
    except (ResolutionError, GapClosedError):
        return
    assert whole.m in (-2, -1, 0, 1, 2)
    assert whole.quantization_residual <= 1e-6
    assert abs(((whole.P - whole.m / 2) + 0.5) % 1 - 0.5) <= 1e-6


def test_flatten_lands_on_tau3(proto_topo, rng):
    assert flatten_at_zero_energy(diagonalize_bloch(proto_topo)) < 1e-10
    b, _ = random_sls_bloch(4, 16, rng)
    assert flatten_at_zero_energy(diagonalize_bloch(b)) < 1e-10


def test_az_table():
    assert az_table_lookup(AZClass.AIII, 1) is AZEntry.Z
    assert az_table_lookup("AIII", 0) is AZEntry.ZERO
    assert az_table_lookup(AZClass.A, 2) is AZEntry.Z
    assert az_table_lookup(AZClass.AI, 4) is AZEntry.TWO_Z
    assert az_table_lookup(AZClass.AII, 2) is AZEntry.Z2
    with pytest.raises(ValidationError):
        az_table_lookup("BDI", 1)
    with pytest.raises(ValidationError):
        az_table_lookup(AZClass.A, 8)
