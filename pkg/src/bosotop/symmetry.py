"""Symmetry checkers on the dynamical matrix and on the reduced Hamiltonian.

Antiunitary operators are stored as a plain unitary matrix plus a flag;
conjugation is applied to the argument before the matrix acts.  A symmetry
``O`` of ``H_tau`` holds when

    O conj?(H_tau(eps_O k)) O^{-1} = eta_O H_tau(k)

on every grid momentum.
"""
import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ._linalg import max_abs
from .diagonalize import SqueezeDecomposition, TOL_PU, compute_W
from .errors import ValidationError
from .nambu import BlochBdg, dynamical_matrix, pauli_like_metrics

TOL_SYM = 1e-9


class SymmetryKind(str, enum.Enum):
    TIME_REVERSAL = "TimeReversal"
    PARTICLE_HOLE = "ParticleHole"
    CHIRAL = "Chiral"
    SUBLATTICE = "Sublattice"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class SymmetryOperator:
    """Unitary matrix ``O`` with conjugation flag and sign data.

    ``eta`` is the sign relating the transformed ``H_tau`` to itself and
    ``eps_k`` says whether the operator reverses momentum.
    """
    O: np.ndarray
    antiunitary: bool
    eta: int
    eps_k: int
    kind: SymmetryKind = SymmetryKind.CUSTOM
    tol: float = field(default=TOL_PU, repr=False)

    def __post_init__(self):
        O = np.array(self.O, dtype=complex)
        if O.ndim != 2 or O.shape[0] != O.shape[1]:
            raise ValidationError(f"symmetry matrix must be square, got {O.shape}")
        if self.eta not in (1, -1) or self.eps_k not in (1, -1):
            raise ValidationError("eta and eps_k must be +1 or -1")
        if max_abs(O.conj().T @ O - np.eye(len(O))) > self.tol:
            raise ValidationError("symmetry matrix is not unitary")
        kind = SymmetryKind(self.kind)
        if kind is not SymmetryKind.SUBLATTICE and len(O) % 2 == 0:
            tau3 = pauli_like_metrics(len(O) // 2).tau3
            if max_abs(O @ tau3 - self.eta * tau3 @ O) > self.tol:
                raise ValidationError(f"O tau3 = {self.eta:+d} tau3 O is violated")
        O.setflags(write=False)
        object.__setattr__(self, "O", O)
        object.__setattr__(self, "kind", kind)

    def apply(self, A):
        """``O conj?(A) O^{-1}``."""
        A = A.conj() if self.antiunitary else A
        return self.O @ A @ self.O.conj().T


def time_reversal(T_tilde):
    """``T = T_tilde (+) T_tilde^*``, antiunitary, commutes with ``H_tau``."""
    T = np.asarray(T_tilde, dtype=complex)
    n = len(T)
    O = np.zeros((2 * n, 2 * n), dtype=complex)
    O[:n, :n], O[n:, n:] = T, T.conj()
    return SymmetryOperator(O, True, 1, -1, SymmetryKind.TIME_REVERSAL)


def particle_hole(n_modes):
    """``C = tau1``: the built-in particle-hole redundancy of any BdG matrix."""
    return SymmetryOperator(pauli_like_metrics(n_modes).tau1, True, -1, -1,
                            SymmetryKind.PARTICLE_HOLE)


def chiral(T_tilde):
    """``Gamma = T tau1``: unitary, anticommutes with ``H_tau`` at fixed k."""
    T = time_reversal(T_tilde).O
    return SymmetryOperator(T @ pauli_like_metrics(len(T) // 2).tau1, False, -1, 1,
                            SymmetryKind.CHIRAL)


def sublattice(S_tilde):
    """Nambu lift ``S = S_tilde (+) S_tilde^*`` of a reduced-basis involution."""
    S = _check_involution(S_tilde)
    n = len(S)
    O = np.zeros((2 * n, 2 * n), dtype=complex)
    O[:n, :n], O[n:, n:] = S, S.conj()
    return SymmetryOperator(O, False, -1, 1, SymmetryKind.SUBLATTICE)


def _check_involution(S_tilde, tol=TOL_PU):
    S = np.asarray(S_tilde, dtype=complex)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError(f"S_tilde must be square, got {S.shape}")
    if max_abs(S - S.conj().T) > tol:
        raise ValidationError("S_tilde is not Hermitian")
    if max_abs(S @ S - np.eye(len(S))) > tol:
        raise ValidationError("S_tilde is not involutory (S_tilde^2 != I)")
    return S


def _htau_grid(model):
    if isinstance(model, BlochBdg):
        return np.array([model.H_tau(i) for i in range(model.n_k)])
    grid = np.asarray(model, dtype=complex)
    if grid.ndim != 3:
        raise ValidationError("expected a BlochBdg or an (n_k, 2N, 2N) array of H_tau(k)")
    return grid


@dataclass(frozen=True)
class SymmetryReport:
    residual: float
    per_k: np.ndarray
    holds: bool


def check_symmetry(H_tau_of_k, op, tol_sym=TOL_SYM):
    """Max residual of ``O conj?(H_tau(eps k)) O^{-1} - eta H_tau(k)`` over the grid.

    The grid is the uniform ``2 pi m / n_k`` grid, which always contains the
    ``-k`` partner; an explicit array whose grid size is inconsistent with
    the operator is rejected.
    """
    grid = _htau_grid(H_tau_of_k)
    n_k = len(grid)
    if grid.shape[1] != len(op.O):
        raise ValidationError(f"operator size {len(op.O)} does not match H_tau size {grid.shape[1]}")
    per_k = np.array([max_abs(op.apply(grid[(op.eps_k * i) % n_k]) - op.eta * grid[i])
                      for i in range(n_k)])
    res = float(per_k.max())
    return SymmetryReport(res, per_k, res <= tol_sym)


@dataclass(frozen=True)
class SublatticeReport:
    """Result of :func:`check_sublattice`.

    ``residual`` is ``max_k ||S h S + h|| / 2`` so that an additive
    ``Delta S`` term in ``h`` shows up as ``Delta``.
    """
    epsilon: float
    S_tilde: np.ndarray
    residual: float
    holds: bool
    epsilon_spread: float = 0.0
    spectrum_residual: float = 0.0
    diagnostic: str = ""


def check_sublattice(sq_grid, S_tilde, tol_sym=TOL_SYM):
    """Test ``S h(k) S = -h(k)`` for ``h = K_tilde - eps I`` on the grid.

    Parameters
    ----------
    sq_grid : sequence of SqueezeDecomposition or (n_k, N, N) array
        Reduced Hamiltonians ``K_tilde(k)``.
    S_tilde : (N, N) array_like
        Hermitian involution.
    """
    S = _check_involution(S_tilde)
    Kt = np.array([s.K_tilde if isinstance(s, SqueezeDecomposition) else s for s in sq_grid],
                  dtype=complex)
    n = Kt.shape[1]
    eps_k = np.trace(Kt, axis1=1, axis2=2).real / n
    eps = float(eps_k.mean())
    spread = float(np.max(np.abs(eps_k - eps)))
    residual, spec_res, neg = 0.0, 0.0, 0.0
    for K in Kt:
        h = K - eps * np.eye(n)
        residual = max(residual, 0.5 * float(np.linalg.norm(S @ h @ S + h, 2)))
        E = np.linalg.eigvalsh(K)
        spec_res = max(spec_res, float(np.max(np.abs(np.sort(2 * eps - E) - E))))
        neg = max(neg, float(-E.min()))
    notes = []
    if spread > tol_sym:
        notes.append(f"gap centre varies with k (spread {spread:.3e})")
    if residual > tol_sym:
        notes.append(f"S h S + h residual {residual:.3e}")
    if spec_res > tol_sym:
        notes.append(f"spectrum not symmetric about eps ({spec_res:.3e})")
    if neg > tol_sym:
        notes.append(f"K_tilde has negative eigenvalue {-neg:.3e}")
    return SublatticeReport(eps, S, residual, not notes, spread, spec_res, "; ".join(notes))


def _s_basis(S):
    w, P = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    n_a = int(np.sum(w > 0))
    return P[:, order], n_a


def offdiagonalize_in_S_basis(h_of_k, S_tilde, tol_sym=TOL_SYM):
    """Upper-right block ``D(k)`` of ``h(k)`` in the eigenbasis of ``S_tilde``.

    The ``+1`` eigenspace comes first, so ``D`` has shape ``(N_A, N_B)``.
    """
    S = _check_involution(S_tilde)
    P, n_a = _s_basis(S)
    h_of_k = np.asarray(h_of_k, dtype=complex)
    single = h_of_k.ndim == 2
    hs = h_of_k[None] if single else h_of_k
    D = []
    for i, h in enumerate(hs):
        hp = P.conj().T @ h @ P
        res = max(max_abs(hp[:n_a, :n_a]), max_abs(hp[n_a:, n_a:]))
        if res > tol_sym:
            raise ValidationError(f"h does not anticommute with S_tilde at grid index {i} "
                                  f"(diagonal-block residual {res:.3e})")
        D.append(hp[:n_a, n_a:])
    D = np.array(D)
    return D[0] if single else D


@dataclass(frozen=True)
class SlsFamily:
    """A sublattice-symmetric BdG family and its closed-form reduction."""
    bloch: BlochBdg
    W: np.ndarray
    K_tilde: np.ndarray     # (n_k, N, N)
    squeeze_r: float
    mu_tilde: float

    def compare_numeric(self):
        """Max deviation of numerical ``(K_tilde, W)`` from the prediction."""
        dk, dw = 0.0, 0.0
        for i in range(self.bloch.n_k):
            sq = compute_W(self.bloch.H(i))
            dk = max(dk, max_abs(sq.K_tilde - self.K_tilde[i]))
            dw = max(dw, max_abs(sq.W - self.W))
        return dk, dw


def construct_sls_bdg(h_of_k, epsilon_bare, xi, S, tol_sym=TOL_SYM):
    """Build ``K = eps_bar I + h(k)``, ``M = xi S`` and its predicted reduction.

    ``h`` must satisfy ``S h S = -h`` and ``h^*(-k) = h(k)``.  The reduction
    has ``K_tilde = sqrt(eps_bar^2 - |xi|^2) I + h`` and a k-independent
    generator ``W = r [[0, e^{i phi} S], [e^{-i phi} S, 0]]`` with
    ``r = log((eps_bar - |xi|) / (eps_bar + |xi|)) / 4``.
    """
    h = np.asarray(h_of_k, dtype=complex)
    if h.ndim == 2:
        h = h[None]
    S = np.asarray(S, dtype=complex)
    if max_abs(S - S.T) > tol_sym:
        raise ValidationError("pairing pattern S must be symmetric")
    S = _check_involution(S)
    if not epsilon_bare > abs(xi):
        raise ValidationError(f"need eps_bar > |xi| for positive definiteness, got "
                              f"{epsilon_bare} <= {abs(xi)}")
    n_k, n = h.shape[0], h.shape[1]
    for i in range(n_k):
        if max_abs(S @ h[i] @ S + h[i]) > tol_sym:
            raise ValidationError(f"h does not anticommute with S at grid index {i}")
        if max_abs(h[(-i) % n_k].conj() - h[i]) > tol_sym:
            raise ValidationError(f"h breaks time reversal h*(-k) = h(k) at grid index {i}")
    eye = np.eye(n)
    bloch = BlochBdg(epsilon_bare * eye + h, np.broadcast_to(xi * S, h.shape))
    a = abs(xi)
    r = 0.25 * float(np.log((epsilon_bare - a) / (epsilon_bare + a)))
    phase = np.exp(1j * np.angle(xi)) if a > 0 else 1.0
    W = np.block([[np.zeros((n, n)), r * phase * S], [r * np.conj(phase) * S, np.zeros((n, n))]])
    mu_t = float(np.sqrt(epsilon_bare ** 2 - a ** 2))
    return SlsFamily(bloch, W, mu_t * eye + h, r, mu_t)


@dataclass(frozen=True)
class Lemma1Report:
    """Residuals of ``O conj?(W(eps k)) O^{-1} = W(k)`` and the reduced relation."""
    w_residual: float
    reduced_residual: float
    holds: bool


def lemma1_preservation_test(bloch, op, tol_sym=TOL_SYM, sq_grid=None):
    """Check that the squeezing map preserves a symmetry of ``H_tau``.

    For a sublattice operator the relation tested on the reduced block is
    ``S (H'_tau - eps tau3) S^{-1} = -(H'_tau - eps tau3)``; otherwise it is
    ``O conj?(H'_tau(eps k)) O^{-1} = eta H'_tau(k)``.
    """
    if sq_grid is None:
        sq_grid = [compute_W(bloch.H(i)) for i in range(bloch.n_k)]
    n_k = bloch.n_k
    n = bloch.n_modes
    if op.kind is SymmetryKind.SUBLATTICE:
        pre = check_sublattice(sq_grid, op.O[:n, :n], tol_sym)
        if not pre.holds:
            raise ValidationError(f"sublattice symmetry does not hold upstream: {pre.diagnostic}")
        tau3 = pauli_like_metrics(n).tau3
        red = max(max_abs(op.apply(s.H_prime_tau - pre.epsilon * tau3)
                          + (s.H_prime_tau - pre.epsilon * tau3)) for s in sq_grid)
    else:
        pre = check_symmetry(bloch, op, tol_sym)
        if not pre.holds:
            raise ValidationError(f"symmetry does not hold on H_tau (residual {pre.residual:.3e})")
        red = max(max_abs(op.apply(sq_grid[(op.eps_k * i) % n_k].H_prime_tau)
                          - op.eta * sq_grid[i].H_prime_tau) for i in range(n_k))
    w_res = max(max_abs(op.apply(sq_grid[(op.eps_k * i) % n_k].W) - sq_grid[i].W)
                for i in range(n_k))
    return Lemma1Report(w_res, red, w_res <= tol_sym and red <= tol_sym)


def inversion_identity_residual(H, sq, S_tilde, times):
    """Max residual of ``U(-t) = exp(2 i t eps tau3 e^{-2W}) S U(t) S^{-1}``.

    ``U(t) = exp(-i H_tau t)``; ``S`` is the Nambu lift of ``S_tilde`` and
    ``eps`` the gap centre of ``sq``.
    """
    Ht = dynamical_matrix(H)
    S = sublattice(S_tilde).O
    tau3 = pauli_like_metrics(len(S) // 2).tau3
    e2 = sq.exp_minus_W @ sq.exp_minus_W
    out = 0.0
    for t in np.atleast_1d(times):
        lhs = expm(1j * Ht * t)
        rhs = expm(2j * t * sq.epsilon * tau3 @ e2) @ S @ expm(-1j * Ht * t) @ S.conj().T
        out = max(out, max_abs(lhs - rhs))
    return out
