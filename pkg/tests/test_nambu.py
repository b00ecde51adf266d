import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosotop._linalg import max_abs
from bosotop.errors import ValidationError
from bosotop.nambu import (SIGMA3, BlochBdg, PrototypeParams, RealSpaceBdg, assemble_bdg,
                           bloch_from_blocks, build_prototype_bloch, dynamical_matrix,
                           encode_complex_matrix, k_grid, parse_complex_matrix,
                           pauli_like_metrics, quadrature_form, symplectic_form)


def test_k_grid_is_closed_under_reflection():
    k = k_grid(8)
    assert np.allclose(np.sort((-k) % (2 * np.pi)), k)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_structure_matrices(n):
    m = pauli_like_metrics(n)
    eye = np.eye(2 * n)
    for tau in (m.tau1, m.tau2, m.tau3):
        assert max_abs(tau @ tau - eye) == 0
    assert max_abs(m.tau1 - 1j * m.tau3 @ m.tau2) == 0
    assert max_abs(m.G @ m.G.conj().T - eye) < 1e-15
    assert max_abs(1j * m.tau2 - symplectic_form(n)) == 0
    with pytest.raises(ValueError):
        m.tau3[0, 0] = 2


def test_prototype_blocks_at_k0():
    b = build_prototype_bloch(5, 1, 1.3, 1, 0, k_points=8)
    expected = np.array([[5, 2.3, 1, 0], [2.3, 5, 0, -1], [1, 0, 5, 2.3], [0, -1, 2.3, 5]])
    assert max_abs(b.H(0) - expected) < 1e-15
    assert max_abs(assemble_bdg(b, 0.0) - expected) < 1e-15


def test_prototype_blocks_at_k_pi():
    b = build_prototype_bloch(5, 1, 1.3, 1, 0, k_points=8)
    K = b.K[b.index_of(np.pi)]
    assert max_abs(K - (5 * np.eye(2) - 0.3 * np.array([[0, 1], [1, 0]]))) < 1e-14


@settings(max_examples=40, deadline=None)
@given(t1=st.floats(0.1, 2), t2=st.floats(0.1, 2), xi=st.floats(0, 4), phase=st.floats(0, 6.3),
       n_k=st.integers(3, 20))
def test_bdg_particle_hole_structure(t1, t2, xi, phase, n_k):
    b = build_prototype_bloch(5, t1, t2, xi, phase, k_points=n_k)
    tau1 = pauli_like_metrics(2).tau1
    for i in range(n_k):
        H = b.H(i)
        assert max_abs(H - H.conj().T) < 1e-14
        assert max_abs(H - tau1 @ b.H(b.minus_index(i)).conj() @ tau1) < 1e-14


def test_dynamical_matrix_flips_hole_rows():
    H = np.arange(16.0).reshape(4, 4)
    assert max_abs(dynamical_matrix(H) - pauli_like_metrics(2).tau3 @ H) == 0
    with pytest.raises(ValidationError):
        dynamical_matrix(np.eye(3))


def test_non_hermitian_block_names_momentum():
    K = np.zeros((4, 2, 2), dtype=complex)
    K[1, 0, 1] = 1.0
    with pytest.raises(ValidationError, match="k=1.5708"):
        BlochBdg(K, np.zeros_like(K))


def test_pairing_constraint_enforced():
    K = np.zeros((4, 2, 2), dtype=complex)
    M = np.zeros_like(K)
    M[1] = [[0, 1], [0, 0]]
    with pytest.raises(ValidationError, match="M\\(-k\\)"):
        BlochBdg(K, M)


def test_index_of_rejects_off_grid_momentum():
    b = build_prototype_bloch(5, 1, 1.3, k_points=8)
    assert b.index_of(-np.pi / 2) == 6
    with pytest.raises(ValidationError):
        b.index_of(0.1)


def test_real_space_quadrature_form_is_real(rng):
    n = 4
    K = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rs = RealSpaceBdg(K + K.conj().T, M + M.T)
    R = quadrature_form(rs.H)
    assert max_abs(R.imag) < 1e-14
    assert max_abs(R - R.T) < 1e-14


def test_real_space_validation():
    with pytest.raises(ValidationError):
        RealSpaceBdg(np.array([[0, 1], [2, 0]]), np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        RealSpaceBdg(np.eye(2), np.array([[0, 1], [0, 0]]))


def test_prototype_params():
    p = PrototypeParams(5, 1, 1.3, 1)
    assert p.mu_tilde == pytest.approx(np.sqrt(24))
    assert p.squeeze_r == pytest.approx(-0.1013663, abs=1e-7)
    assert p.thermodynamically_stable
    for bad in [(0, 1, 1), (5, -1, 1), (5, 1, 0)]:
        with pytest.raises(ValidationError):
            PrototypeParams(*bad)
    with pytest.raises(ValidationError):
        PrototypeParams(1, 1, 1, xi_abs=1.5)


def test_unstable_prototype_warns():
    with pytest.warns(UserWarning, match="not thermodynamically stable"):
        build_prototype_bloch(2, 1, 1.3, 1, k_points=8)


def test_matrix_encoding_round_trip(rng):
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert max_abs(parse_complex_matrix(encode_complex_matrix(a)) - a) == 0
    b = build_prototype_bloch(5, 1, 1.3, 1, 0.3, k_points=6)
    again = bloch_from_blocks([encode_complex_matrix(K) for K in b.K],
                              [encode_complex_matrix(M) for M in b.M])
    assert max_abs(again.K - b.K) == 0 and max_abs(again.M - b.M) == 0


def test_shifted_records_regularization():
    b = build_prototype_bloch(5, 1, 1.3, k_points=4).shifted(1e-3)
    assert b.regularization == 1e-3
    assert max_abs(b.K[0] - b.K[0].conj().T) == 0
    assert b.K[0][0, 0] == pytest.approx(5.001)
    assert max_abs(b.M - 0 * SIGMA3) == 0
