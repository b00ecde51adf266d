import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosotop._linalg import hermitian_function, max_abs
from bosotop.diagonalize import (Stability, bogoliubov_diagonalize, chaudhary_deformation,
                                 classify_stability, compute_W, deformation_path,
                                 diagonalize_bloch, exp_2W_closed_form, regularize_bloch,
                                 regularize_semidefinite, williamson_diagonalize)
from bosotop.errors import NotPositiveDefiniteError, ValidationError
from bosotop.nambu import (SIGMA0, SIGMA1, SIGMA2, SIGMA3, build_prototype_bloch,
                           dynamical_matrix, pauli_like_metrics, quadrature_form, symplectic_form)
from bosotop.samplers import random_bloch
from bosotop.topology import analyze_topology

MU, XI_ABS = 5.0, 1.0
R_SINGLE = 0.25 * np.log((MU - XI_ABS) / (MU + XI_ABS))


def single_mode(mu=MU, xi=XI_ABS):
    return np.array([[mu, xi], [np.conj(xi), mu]], dtype=complex)


def random_real_space_H(rng, n):
    """Random positive-definite BdG matrix of a finite system."""
    K = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    K, M = 0.5 * (K + K.conj().T), 0.5 * (M + M.T)
    H = np.block([[K, M], [M.conj(), K.conj()]])
    return H + (0.2 - np.linalg.eigvalsh(H)[0]) * np.eye(2 * n)


@pytest.mark.parametrize("phase", [0.0, 0.9, -2.5])
def test_single_mode_squeezing_oracle(phase):
    xi = XI_ABS * np.exp(1j * phase)
    H = single_mode(xi=xi)
    bog = bogoliubov_diagonalize(H)
    assert bog.E_plus == pytest.approx([np.sqrt(MU ** 2 - XI_ABS ** 2)], abs=1e-13)
    assert bog.E_minus_neg == pytest.approx(-bog.E_plus, abs=1e-13)
    c, s = np.cosh(R_SINGLE), np.sinh(R_SINGLE)
    expected = np.array([[c, np.exp(1j * phase) * s], [np.exp(-1j * phase) * s, c]])
    for col in range(2):
        v, w = bog.V[:, col], expected[:, col]
        ph = np.vdot(w, v) / abs(np.vdot(w, v))
        assert max_abs(v - ph * w) < 1e-12
    pu, eig = bog.residuals(H)
    assert pu < 1e-14 and eig < 1e-13


def test_prototype_energies_at_k_pi():
    b = build_prototype_bloch(5, 1, 1.3, 1, 0, k_points=8)
    bog = bogoliubov_diagonalize(b.H(b.index_of(np.pi)))
    assert bog.E_plus == pytest.approx([4.598979, 5.198979], abs=1e-6)
    assert bog.E_plus == pytest.approx([np.sqrt(24) - 0.3, np.sqrt(24) + 0.3], abs=1e-13)


def test_no_pairing_gives_unitary_blocks(rng):
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    K = A @ A.conj().T + np.eye(3)
    H = np.block([[K, np.zeros((3, 3))], [np.zeros((3, 3)), K.conj()]])
    bog = bogoliubov_diagonalize(H)
    assert bog.E_plus == pytest.approx(np.linalg.eigvalsh(K), abs=1e-12)
    assert max_abs(bog.V[:3, 3:]) < 1e-12 and max_abs(bog.V[3:, :3]) < 1e-12
    U = bog.V[:3, :3]
    assert max_abs(U.conj().T @ U - np.eye(3)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 8))
def test_pseudo_unitarity_and_eigen_relation(seed, n):
    H = random_real_space_H(np.random.default_rng(seed), n)
    bog = bogoliubov_diagonalize(H)
    pu, eig = bog.residuals(H)
    assert pu <= 1e-10
    assert eig <= 1e-10 * max(1.0, np.linalg.norm(H, 2))
    assert np.all(np.diff(bog.E_plus) >= 0) and np.all(bog.E_plus > 0)


def test_bloch_grid_has_exact_particle_hole_pairing(proto_topo):
    bogs = diagonalize_bloch(proto_topo)
    tau1 = pauli_like_metrics(2).tau1
    for i, b in enumerate(bogs):
        partner = bogs[proto_topo.minus_index(i)]
        assert max_abs(tau1 @ partner.V.conj() @ tau1 - b.V) < 1e-14
        pu, eig = b.residuals(proto_topo.H(i))
        assert pu < 1e-10 and eig < 1e-10


def test_stability_classes():
    assert classify_stability(single_mode(5, 1)) is Stability.THERMO_AND_DYNAMICAL
    unstable = bogoliubov_diagonalize(single_mode(1, 2))
    assert unstable.stability is Stability.DYNAMICALLY_UNSTABLE and unstable.V is None
    # imaginary eigenvalues +- i sqrt(xi^2 - mu^2)
    ev = np.linalg.eigvals(dynamical_matrix(single_mode(1, 2)))
    assert np.abs(ev.imag) == pytest.approx([np.sqrt(3)] * 2)


def test_unstable_prototype_at_k0_is_landau_unstable():
    with pytest.warns(UserWarning):
        b = build_prototype_bloch(2, 1, 1.3, 1, k_points=8)
    bog = bogoliubov_diagonalize(b.H(0))
    assert bog.stability is Stability.LANDAU_UNSTABLE
    assert bog.E_plus[0] == pytest.approx(np.sqrt(3) - 2.3, abs=1e-12)
    pu, eig = bog.residuals(b.H(0))
    assert pu < 1e-10 and eig < 1e-10


def test_defective_zero_mode_is_dynamically_unstable():
    # K = M = 1: H is PSD but H_tau is a nilpotent Jordan block
    assert classify_stability(single_mode(1, 1)) is Stability.DYNAMICALLY_UNSTABLE


def test_negative_onsite_without_pairing_is_landau_unstable():
    H = np.diag([-1.0, -1.0]).astype(complex)
    bog = bogoliubov_diagonalize(H)
    assert bog.stability is Stability.LANDAU_UNSTABLE
    assert bog.E_plus == pytest.approx([-1.0])


def test_non_hermitian_input_rejected():
    with pytest.raises(ValidationError):
        bogoliubov_diagonalize(np.array([[1, 2], [0, 1]], dtype=complex))


def test_compute_W_without_pairing_is_trivial(rng):
    A = rng.standard_normal((3, 3))
    K = A @ A.T + np.eye(3)
    H = np.block([[K, np.zeros((3, 3))], [np.zeros((3, 3)), K]])
    sq = compute_W(H)
    assert max_abs(sq.W) < 1e-12
    assert max_abs(sq.exp_W - np.eye(6)) < 1e-12
    assert max_abs(sq.K_tilde - K) < 1e-12


def test_compute_W_single_mode_oracle():
    sq = compute_W(single_mode())
    assert sq.W[0, 1].real == pytest.approx(-0.1013663, abs=1e-7)
    assert max_abs(sq.W - R_SINGLE * np.array([[0, 1], [1, 0]])) < 1e-13
    assert sq.K_tilde[0, 0].real == pytest.approx(np.sqrt(24), abs=1e-13)


def test_reduced_prototype_matches_ssh_form(proto_topo):
    for i, k in enumerate(proto_topo.k):
        sq = compute_W(proto_topo.H(i))
        expected = np.sqrt(24) * SIGMA0 + (1 + 1.3 * np.cos(k)) * SIGMA1 + 1.3 * np.sin(k) * SIGMA2
        assert max_abs(sq.K_tilde - expected) < 1e-8
        assert sq.cross_residual < 1e-8


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 6))
def test_squeeze_decomposition_invariants(seed, n):
    H = random_real_space_H(np.random.default_rng(seed), n)
    sq = compute_W(H)
    tau3 = pauli_like_metrics(n).tau3
    e2W = exp_2W_closed_form(H)
    scale = np.linalg.norm(H, 2)
    assert max_abs(e2W @ H @ e2W - tau3 @ H @ tau3) <= 1e-8 * scale * np.linalg.norm(e2W, 2) ** 2
    assert sq.cross_residual <= 1e-8
    assert max_abs(sq.W[:n, :n]) < 1e-10 and max_abs(sq.W[n:, n:]) < 1e-10
    assert max_abs(sq.exp_W @ tau3 @ sq.exp_W - tau3) < 1e-10
    assert abs(np.trace(sq.W)) <= 1e-8
    reduction = dynamical_matrix(H) @ sq.exp_W - sq.exp_W @ sq.H_prime_tau
    assert max_abs(reduction) <= 1e-10 * max(1.0, scale)
    assert np.all(sq.E >= -1e-12)
    both = np.sort(np.concatenate([sq.E, -np.linalg.eigvalsh(sq.K_tilde_hole)]))
    ref = np.sort(np.linalg.eigvals(dynamical_matrix(H)).real)
    assert max_abs(both - ref) <= 1e-10 * max(1.0, scale)


def test_generator_block_is_momentum_symmetric():
    b = build_prototype_bloch(5, 1, 1.3, 1, 0.4, k_points=12)
    b = type(b)(b.K + 0.2 * np.cos(b.k)[:, None, None] * SIGMA1, b.M)
    n = b.n_modes
    for i in range(b.n_k):
        Wk = compute_W(b.H(i)).W
        Wmk = compute_W(b.H(b.minus_index(i))).W
        assert max_abs(Wk[:n, n:] - Wmk[:n, n:].T) < 1e-12


def test_compute_W_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError, match="regularize_semidefinite"):
        compute_W(single_mode(1, 1))


def test_williamson_identity_and_single_mode():
    J, Rp = williamson_diagonalize(np.eye(4))
    assert max_abs(Rp - np.eye(4)) < 1e-14
    assert max_abs(J.T @ J - np.eye(4)) < 1e-14
    J, Rp = williamson_diagonalize(np.diag([MU + XI_ABS, MU - XI_ABS]))
    assert np.diag(Rp) == pytest.approx([np.sqrt(24)] * 2, abs=1e-13)


def test_williamson_matches_bogoliubov_on_random_instances():
    rng = np.random.default_rng(7)
    for seed in range(120):
        n = 1 + seed % 8
        H = random_real_space_H(rng, n)
        R = quadrature_form(H)
        J, Rp = williamson_diagonalize(R)
        omega = symplectic_form(n)
        assert max_abs(J.T @ omega @ J - omega) <= 1e-10 * max(1.0, np.linalg.norm(J, 2) ** 2)
        bound = 1e-10 * np.linalg.norm(R, 2) * np.linalg.norm(J, 2) ** 2
        assert max_abs(J.T @ R.real @ J - Rp) <= bound
        nu = np.diag(Rp)
        assert max_abs(nu[:n] - nu[n:]) == 0
        assert max_abs(nu[:n] - bogoliubov_diagonalize(H).E_plus) <= 1e-10 * max(1, nu.max())


def test_williamson_rejects_complex_and_indefinite():
    b = build_prototype_bloch(5, 1, 1.3, 1, 0.0, k_points=8)
    with pytest.raises(ValidationError):
        williamson_diagonalize(quadrature_form(b.H(1)))
    with pytest.raises(NotPositiveDefiniteError):
        williamson_diagonalize(np.diag([1.0, -1.0]))


def test_similarity_path_keeps_spectrum():
    b = build_prototype_bloch(5, 1, 1.3, 1, 0.3, k_points=8)
    H = b.H(b.index_of(np.pi))
    sq = compute_W(H)
    rep = deformation_path(H, sq, np.linspace(0, 1, 11), n_lower=1)
    assert rep.max_spectral_deviation <= 1e-10
    assert rep.gaps == pytest.approx([0.6] * 11, abs=1e-12)
    assert max(rep.endpoint_residuals) < 1e-12


def test_replacement_path_keeps_gap_open():
    b = build_prototype_bloch(5, 1, 1.3, 1, 0.0, k_points=8)
    H = b.H(b.index_of(np.pi))
    sq = compute_W(H)
    rep = chaudhary_deformation(H, sq, np.linspace(0, 1, 21), n_lower=1)
    assert rep.gaps[0] == pytest.approx(0.6, abs=1e-12)
    assert rep.endpoint_residuals[0] < 1e-12
    # W^2 = r^2 I here, so the lambda = 1 matrix is cosh^2 r times the reduced one
    assert rep.gaps[-1] == pytest.approx(np.cosh(R_SINGLE) ** 2 * 0.6, abs=1e-12)
    assert rep.min_gap > 0.5 * 0.6
    assert rep.max_imag < 1e-12


def test_replacement_path_gap_on_whole_grid(proto_topo):
    lam = np.linspace(0, 1, 6)
    gaps = [chaudhary_deformation(proto_topo.H(i), compute_W(proto_topo.H(i)), lam, 1).min_gap
            for i in range(0, proto_topo.n_k, 10)]
    assert min(gaps) > 0.3


def test_regularization():
    reg = regularize_semidefinite(np.zeros((2, 2)), 1e-6)
    assert max_abs(reg.H - 1e-6 * np.eye(2)) == 0 and reg.delta == 1e-6
    psd = single_mode(1, 1)
    assert np.linalg.eigvalsh(regularize_semidefinite(psd, 1e-3).H)[0] == pytest.approx(1e-3)
    with pytest.raises(ValidationError):
        regularize_semidefinite(single_mode(1, 2), 1e-3)
    with pytest.raises(ValidationError):
        regularize_semidefinite(psd, 0.0)


def test_regularized_topology_is_stable():
    base = build_prototype_bloch(5, 1, 1.3, 1, 0.0, k_points=101)
    nus = [analyze_topology(regularize_bloch(base, d), SIGMA3).winding for d in (1e-6, 1e-3)]
    assert nus == [1, 1]
    assert regularize_bloch(base, 1e-3).regularization == 1e-3


def test_hermitian_function_consistency(rng):
    H = random_real_space_H(rng, 3)
    W = compute_W(H).W
    ch = hermitian_function(W, np.cosh)
    sh = hermitian_function(W, np.sinh)
    assert max_abs((ch + sh) - compute_W(H).exp_W) < 1e-12


def test_random_bloch_grid_pseudo_unitary(rng):
    b = random_bloch(3, 6, rng)
    for i, r in enumerate(diagonalize_bloch(b)):
        pu, eig = r.residuals(b.H(i))
        assert pu < 1e-10 and eig < 1e-10
