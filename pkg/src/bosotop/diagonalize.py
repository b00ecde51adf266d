"""Bogoliubov diagonalization and the squeezing reduction.

The main route is Colpa's: for ``H > 0`` factor ``H = L L^dagger``,
diagonalize the Hermitian ``L^dagger tau3 L`` and rescale.  The resulting
``V`` is pseudo-unitary to roundoff.  Indefinite ``H`` only goes through a
generic eigen-solver, for stability classification.

The reduction ``H_tau e^W = e^W (Kt + (-Kt^T(-k)))`` uses the closed form

    e^{2W} = H^{-1/2} (H^{1/2} tau3 H tau3 H^{1/2})^{1/2} H^{-1/2},

cross-checked against ``e^{2W} = V V^dagger``.
"""
import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cholesky, schur, solve_triangular

from ._linalg import (expm_hermitian, hermitian_function, hermitize, inv_sqrtm_pd,
                      logm_pd, max_abs, sqrtm_pd)
from .errors import NotPositiveDefiniteError, ResolutionError, ValidationError
from .nambu import dynamical_matrix, pauli_like_metrics, symplectic_form

TOL_PD = 1e-12      # relative to ||H||
TOL_PU = 1e-10
TOL_EIG = 1e-10
TOL_CROSS = 1e-8


class Stability(str, enum.Enum):
    THERMO_AND_DYNAMICAL = "ThermoAndDynamical"
    DYNAMICAL_ONLY = "DynamicalOnly"
    LANDAU_UNSTABLE = "LandauUnstable"
    DYNAMICALLY_UNSTABLE = "DynamicallyUnstable"


@dataclass(frozen=True)
class BogoliubovResult:
    """Paraunitary eigenbasis of ``H_tau``.

    Columns of ``V`` are ordered as ``(particle modes, hole modes)``;
    ``E_plus`` ascending, ``E_minus_neg`` the matching hole energies
    ``-E(-k)``.  ``V`` is ``None`` for dynamically unstable input.
    """
    V: Optional[np.ndarray]
    E_plus: np.ndarray
    E_minus_neg: np.ndarray
    stability: Stability

    @property
    def n_modes(self):
        return len(self.E_plus)

    @property
    def Lambda(self):
        return np.diag(np.concatenate([self.E_plus, self.E_minus_neg]))

    def residuals(self, H):
        """``(pseudo-unitarity, eigen-relation)`` max-norm residuals."""
        tau3 = pauli_like_metrics(self.n_modes).tau3
        V = self.V
        pu = max(max_abs(V.conj().T @ tau3 @ V - tau3), max_abs(V @ tau3 @ V.conj().T - tau3))
        eig = max_abs(dynamical_matrix(H) @ V - V @ self.Lambda)
        return pu, eig


def _scale(H):
    return max(float(np.linalg.norm(H, 2)), 1e-300)


def is_positive_definite(H, tol_pd=TOL_PD):
    H = hermitize(np.asarray(H, dtype=complex))
    return np.linalg.eigvalsh(H)[0] > tol_pd * _scale(H)


def _sorted_order(energies, vecs, ascending=True, tie=1e-12):
    """Indices sorting ``energies``; near-ties broken by eigenvector moduli."""
    e = np.asarray(energies, dtype=float) * (1 if ascending else -1)
    order = list(np.argsort(e, kind="stable"))
    scale = max(1.0, float(np.max(np.abs(e)))) if len(e) else 1.0
    out, i = [], 0
    while i < len(order):
        j = i + 1
        while j < len(order) and e[order[j]] - e[order[i]] <= tie * scale:
            j += 1
        group = order[i:j]
        if len(group) > 1:
            group.sort(key=lambda c: tuple(np.round(np.abs(vecs[:, c]), 10)))
        out.extend(group)
        i = j
    return np.array(out, dtype=int)


def _colpa(H):
    n = H.shape[0] // 2
    tau3 = pauli_like_metrics(n).tau3
    L = cholesky(H, lower=True)
    w, U = np.linalg.eigh(hermitize(L.conj().T @ tau3 @ L))
    pos = np.flatnonzero(w > 0)
    neg = np.flatnonzero(w <= 0)
    if len(pos) != n:
        raise ResolutionError("Colpa step found an unbalanced number of positive modes")
    pos = pos[_sorted_order(w[pos], U[:, pos])]
    neg = neg[_sorted_order(w[neg], U[:, neg], ascending=False)]
    order = np.concatenate([pos, neg])
    V = solve_triangular(L.conj().T, U[:, order] * np.sqrt(np.abs(w[order])), lower=False)
    return BogoliubovResult(V, w[pos], w[neg], Stability.THERMO_AND_DYNAMICAL)


def _generic(H, tol_pd):
    """Eigen-solve ``H_tau`` directly and sort by Krein signature."""
    n = H.shape[0] // 2
    tau3 = pauli_like_metrics(n).tau3
    scale = _scale(H)
    unstable = BogoliubovResult(None, np.full(n, np.nan), np.full(n, np.nan),
                                Stability.DYNAMICALLY_UNSTABLE)
    w, X = np.linalg.eig(dynamical_matrix(H))
    if np.max(np.abs(w.imag)) > 1e-8 * scale:
        return unstable
    if np.linalg.cond(X) > 1e10:
        return unstable
    w = w.real
    order = np.argsort(w, kind="stable")
    w, X = w[order], X[:, order]
    vecs, norms, energies = [], [], []
    i = 0
    while i < 2 * n:
        j = i + 1
        while j < 2 * n and w[j] - w[i] <= 1e-8 * scale:
            j += 1
        Xg = X[:, i:j]
        g, Y = np.linalg.eigh(hermitize(Xg.conj().T @ tau3 @ Xg))
        if np.min(np.abs(g)) < 1e-10:
            return unstable
        Xg = Xg @ Y / np.sqrt(np.abs(g))
        vecs.extend(Xg.T)
        norms.extend(np.sign(g))
        energies.extend([w[i:j].mean()] * (j - i))
        i = j
    vecs, norms, energies = np.array(vecs).T, np.array(norms), np.array(energies)
    pos, neg = np.flatnonzero(norms > 0), np.flatnonzero(norms < 0)
    if len(pos) != n:
        return unstable
    pos = pos[_sorted_order(energies[pos], vecs[:, pos])]
    neg = neg[_sorted_order(energies[neg], vecs[:, neg], ascending=False)]
    V = vecs[:, np.concatenate([pos, neg])]
    res = BogoliubovResult(V, energies[pos], energies[neg], Stability.DYNAMICAL_ONLY)
    return BogoliubovResult(V, res.E_plus, res.E_minus_neg, classify_stability(H, res, tol_pd))


def bogoliubov_diagonalize(H, tol_pd=TOL_PD):
    """Paraunitary diagonalization ``H_tau V = V Lambda``.

    Positive-definite ``H`` goes through Colpa's Cholesky construction.
    Anything else falls back to a generic eigen-solver whose degenerate
    blocks are re-orthonormalized in the ``tau3`` inner product; complex or
    defective spectra come back tagged ``DynamicallyUnstable`` with
    ``V = None``.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] % 2:
        raise ValidationError(f"expected a 2N x 2N matrix, got shape {H.shape}")
    if max_abs(H - H.conj().T) > 1e-10 * max(1.0, max_abs(H)):
        raise ValidationError("BdG matrix is not Hermitian")
    H = hermitize(H)
    if is_positive_definite(H, tol_pd):
        return _colpa(H)
    return _generic(H, tol_pd)


def classify_stability(H, bog=None, tol_pd=TOL_PD):
    """Thermodynamic / dynamical stability class of ``H``.

    Precedence: complex or defective spectrum -> DynamicallyUnstable;
    ``H >= 0`` -> ThermoAndDynamical; a positive-norm mode at negative
    energy -> LandauUnstable; otherwise DynamicalOnly.
    """
    H = hermitize(np.asarray(H, dtype=complex))
    if bog is None:
        bog = bogoliubov_diagonalize(H, tol_pd)
    if bog.V is None:
        return Stability.DYNAMICALLY_UNSTABLE
    if np.linalg.eigvalsh(H)[0] >= -tol_pd * _scale(H):
        return Stability.THERMO_AND_DYNAMICAL
    if np.any(bog.E_plus < -tol_pd * _scale(H)):
        return Stability.LANDAU_UNSTABLE
    return Stability.DYNAMICAL_ONLY


def diagonalize_bloch(bloch, tol_pd=TOL_PD):
    """Per-k Bogoliubov results with exact particle-hole pairing.

    When every ``H(k)`` is positive definite the hole block of ``V(k)`` is
    set to ``tau1 V_+(-k)^*`` so that ``tau1 V^*(-k) tau1 = V(k)`` holds
    identically.
    """
    results = [bogoliubov_diagonalize(bloch.H(i), tol_pd) for i in range(bloch.n_k)]
    if any(r.stability is not Stability.THERMO_AND_DYNAMICAL for r in results):
        return results
    n = bloch.n_modes
    tau1 = pauli_like_metrics(n).tau1
    paired = []
    for i, r in enumerate(results):
        partner = results[bloch.minus_index(i)]
        V = np.hstack([r.V[:, :n], tau1 @ partner.V[:, :n].conj()])
        paired.append(BogoliubovResult(V, r.E_plus, -partner.E_plus, r.stability))
    return paired


@dataclass(frozen=True)
class SqueezeDecomposition:
    """Output of :func:`compute_W`.

    ``exp_W`` maps the BdG problem to ``K_tilde (+) K_tilde_hole`` where
    ``K_tilde_hole = K_tilde^T(-k)``; ``K_tilde = U diag(E) U^dagger``.
    """
    W: np.ndarray
    exp_W: np.ndarray
    U: np.ndarray
    E: np.ndarray
    K_tilde: np.ndarray
    K_tilde_hole: np.ndarray
    block_residual: float
    cross_residual: float

    @property
    def n_modes(self):
        return self.K_tilde.shape[0]

    @property
    def epsilon(self):
        """``Tr K_tilde / N``: the onsite energy of the reduced model."""
        return float(np.trace(self.K_tilde).real / self.n_modes)

    @property
    def exp_minus_W(self):
        return expm_hermitian(self.W, -1.0)

    @property
    def H_prime_tau(self):
        """Block-diagonal ``K_tilde (+) -K_tilde^T(-k)``."""
        n = self.n_modes
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, :n] = self.K_tilde
        out[n:, n:] = -self.K_tilde_hole
        return out


def exp_2W_closed_form(H):
    """Unique positive-definite ``X`` with ``X H X = tau3 H tau3``."""
    n = H.shape[0] // 2
    tau3 = pauli_like_metrics(n).tau3
    w, q = np.linalg.eigh(H)
    if w[0] <= 0:
        raise NotPositiveDefiniteError("closed form for e^(2W) needs a positive-definite H")
    Hs = (q * np.sqrt(w)) @ q.conj().T
    Hsi = (q / np.sqrt(w)) @ q.conj().T
    return hermitize(Hsi @ sqrtm_pd(Hs @ tau3 @ H @ tau3 @ Hs) @ Hsi)


def compute_W(H, tol_pd=TOL_PD, tol_cross=TOL_CROSS):
    """Squeezing generator ``W`` reducing ``H`` to particle-conserving form.

    Raises
    ------
    NotPositiveDefiniteError
        If ``H`` is not positive definite; regularize first.
    ResolutionError
        If the closed form and ``V V^dagger`` disagree beyond ``tol_cross``.
    """
    H = hermitize(np.asarray(H, dtype=complex))
    if not is_positive_definite(H, tol_pd):
        raise NotPositiveDefiniteError(
            "compute_W needs a positive-definite H; shift semi-definite input with "
            "regularize_semidefinite(H, delta)")
    n = H.shape[0] // 2
    e2W = exp_2W_closed_form(H)
    V = _colpa(H).V
    cross = max_abs(V @ V.conj().T - e2W) / max_abs(e2W)
    if cross > tol_cross:
        raise ResolutionError(f"e^(2W) closed form and V V^dagger disagree ({cross:.3e})")
    W = 0.5 * logm_pd(e2W)
    exp_W = sqrtm_pd(e2W)
    Hp = exp_W @ H @ exp_W
    K_tilde = hermitize(Hp[:n, :n])
    E, U = np.linalg.eigh(K_tilde)
    return SqueezeDecomposition(W=W, exp_W=exp_W, U=U, E=E, K_tilde=K_tilde,
                                K_tilde_hole=hermitize(Hp[n:, n:]),
                                block_residual=max_abs(Hp[:n, n:]), cross_residual=cross)


def williamson_diagonalize(R, tol=TOL_PU):
    """Symplectic diagonalization ``J^T R J = diag(nu, nu)``.

    Parameters
    ----------
    R : (2N, 2N) array_like
        Real symmetric positive-definite quadrature matrix (xxpp order).

    Returns
    -------
    J : (2N, 2N) ndarray
        Real matrix with ``J^T (i tau2) J = i tau2``.
    R_prime : (2N, 2N) ndarray
        ``diag(nu_1..nu_N, nu_1..nu_N)`` with ascending symplectic eigenvalues.
    """
    R = np.asarray(R)
    if np.iscomplexobj(R):
        if max_abs(R.imag) > tol * max(1.0, max_abs(R)):
            raise ValidationError("Williamson form needs a real quadrature matrix")
        R = R.real
    R = 0.5 * (R + R.T)
    if R.shape[0] % 2 or np.linalg.eigvalsh(R)[0] <= 0:
        raise NotPositiveDefiniteError("Williamson form needs a positive-definite R")
    n = R.shape[0] // 2
    Rm12 = inv_sqrtm_pd(R).real
    A = Rm12 @ symplectic_form(n) @ Rm12
    T, O = schur(0.5 * (A - A.T), output="real")
    d = np.empty(n)
    for i in range(n):
        d[i] = T[2 * i, 2 * i + 1]
        if d[i] < 0:
            O[:, [2 * i, 2 * i + 1]] = O[:, [2 * i + 1, 2 * i]]
            d[i] = -d[i]
    nu = 1.0 / d
    order = np.argsort(nu, kind="stable")
    xs = O[:, 2 * order]
    ps = O[:, 2 * order + 1]
    scale = 1.0 / np.sqrt(d[order])
    J = Rm12 @ np.hstack([xs * scale, ps * scale])
    nu = nu[order]
    return J, np.diag(np.concatenate([nu, nu]))


def _positive_branch(eigs, n):
    e = np.sort(np.real(eigs))
    return e[n:]


def _gap(positive, n_lower):
    if n_lower == 0:
        return 2 * positive[0]
    return positive[n_lower] - positive[n_lower - 1]


@dataclass(frozen=True)
class DeformationReport:
    lambdas: np.ndarray
    spectra: np.ndarray         # (n_lambda, 2N) sorted real parts
    gaps: np.ndarray
    max_spectral_deviation: float
    max_imag: float
    endpoint_residuals: tuple   # (lambda=0 vs H_tau, lambda=1 vs reduced)

    @property
    def min_gap(self):
        return float(np.min(self.gaps))


def _default_lower(n):
    return n // 2


def deformation_path(H, sq, lambdas, n_lower=None):
    """Similarity path ``e^{(1-l)W} H'_tau e^{-(1-l)W}`` from ``H_tau`` to ``H'_tau``."""
    H = np.asarray(H, dtype=complex)
    n = H.shape[0] // 2
    n_lower = _default_lower(n) if n_lower is None else n_lower
    lambdas = np.asarray(lambdas, dtype=float)
    Hp = sq.exp_minus_W @ dynamical_matrix(H) @ sq.exp_W
    spectra, gaps, imag, mats = [], [], 0.0, []
    for lam in lambdas:
        Hl = expm_hermitian(sq.W, 1 - lam) @ Hp @ expm_hermitian(sq.W, -(1 - lam))
        mats.append(Hl)
        ev = np.linalg.eigvals(Hl)
        imag = max(imag, float(np.max(np.abs(ev.imag))))
        spectra.append(np.sort(ev.real))
        gaps.append(_gap(_positive_branch(ev, n), n_lower))
    spectra = np.array(spectra)
    dev = float(np.max(np.abs(spectra - spectra[0]))) if len(spectra) else 0.0
    ends = (max_abs(expm_hermitian(sq.W, 1.0) @ Hp @ sq.exp_minus_W - dynamical_matrix(H)),
            max_abs(Hp - sq.H_prime_tau))
    return DeformationReport(lambdas, spectra, np.array(gaps), dev, imag, ends)


def chaudhary_deformation(H, sq, lambdas, n_lower=None):
    """Replacement path ``(cosh W + (1-l) sinh W) H'_tau (cosh W - (1-l) sinh W)``.

    Unlike :func:`deformation_path` this is not a similarity transform, so
    the spectrum moves; only the gap must stay open.
    """
    H = np.asarray(H, dtype=complex)
    n = H.shape[0] // 2
    n_lower = _default_lower(n) if n_lower is None else n_lower
    lambdas = np.asarray(lambdas, dtype=float)
    Hp = sq.exp_minus_W @ dynamical_matrix(H) @ sq.exp_W
    cosh_W = hermitian_function(sq.W, np.cosh)
    sinh_W = hermitian_function(sq.W, np.sinh)
    spectra, gaps, imag = [], [], 0.0
    for lam in lambdas:
        Hl = (cosh_W + (1 - lam) * sinh_W) @ Hp @ (cosh_W - (1 - lam) * sinh_W)
        ev = np.linalg.eigvals(Hl)
        imag = max(imag, float(np.max(np.abs(ev.imag))))
        spectra.append(np.sort(ev.real))
        gaps.append(_gap(_positive_branch(ev, n), n_lower))
    spectra = np.array(spectra)
    end0 = max_abs((cosh_W + sinh_W) @ Hp @ (cosh_W - sinh_W) - dynamical_matrix(H))
    return DeformationReport(lambdas, spectra, np.array(gaps),
                             float(np.max(np.abs(spectra - spectra[0]))), imag, (end0, np.nan))


@dataclass(frozen=True)
class RegularizedHamiltonian:
    """``H + delta I`` plus the shift that produced it."""
    H: np.ndarray
    delta: float


def regularize_semidefinite(H, delta, tol_pd=TOL_PD):
    """Shift a positive semi-definite ``H`` to ``H + delta I``.

    Raises :class:`ValidationError` for ``delta <= 0`` or a genuinely
    negative eigenvalue (below ``-tol_pd ||H||``).
    """
    if not delta > 0:
        raise ValidationError(f"regularization delta must be positive, got {delta}")
    H = hermitize(np.asarray(H, dtype=complex))
    lo = np.linalg.eigvalsh(H)[0]
    if lo < -tol_pd * max(float(np.linalg.norm(H, 2)), 1.0):
        raise ValidationError(f"H has a negative eigenvalue {lo:.3e}; not semi-definite")
    return RegularizedHamiltonian(H + delta * np.eye(H.shape[0]), float(delta))


def regularize_bloch(bloch, delta, tol_pd=TOL_PD):
    """Apply :func:`regularize_semidefinite` at every k of a :class:`BlochBdg`."""
    for i in range(bloch.n_k):
        regularize_semidefinite(bloch.H(i), delta, tol_pd)
    return bloch.shifted(delta)
