"""Nambu-form containers for quadratic boson Hamiltonians.

A translation-invariant model is stored as momentum-resolved blocks
``K(k)`` (hopping) and ``M(k)`` (pairing) on a uniform grid
``k_m = 2 pi m / n_k``.  The BdG matrix is assembled as

.. math::

    H(k) = \\begin{pmatrix} K(k) & M(k) \\\\ M^*(-k) & K^T(-k) \\end{pmatrix}

where ``-k`` is looked up by index reflection ``m -> (-m) mod n_k`` so that
no interpolation is ever needed.
"""
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._linalg import max_abs
from .errors import ValidationError

TOL_HERM = 1e-10

SIGMA0 = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def k_grid(n_k):
    """Uniform momentum grid on [0, 2 pi), closed under k -> -k."""
    if n_k < 1:
        raise ValidationError("k grid needs at least one point")
    return 2 * np.pi * np.arange(n_k) / n_k


@dataclass(frozen=True)
class PauliLikeMetrics:
    """The constant 2N x 2N structure matrices of the Nambu space.

    ``tau3`` is the Krein metric, ``G`` the unitary map to quadratures
    ``xi = G Phi`` with ``xi = (x_1..x_N, p_1..p_N)``.
    """
    tau1: np.ndarray
    tau2: np.ndarray
    tau3: np.ndarray
    G: np.ndarray


@lru_cache(maxsize=64)
def pauli_like_metrics(n_modes):
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    tau3 = np.block([[eye, zero], [zero, -eye]]).astype(complex)
    tau2 = np.block([[zero, -1j * eye], [1j * eye, zero]])
    tau1 = 1j * tau3 @ tau2
    G = np.block([[eye, eye], [-1j * eye, 1j * eye]]) / np.sqrt(2)
    return PauliLikeMetrics(*(_frozen(m) for m in (tau1, tau2, tau3, G)))


def symplectic_form(n_modes):
    """Real symplectic form ``i tau2 = [[0, I], [-I, 0]]`` in xxpp order."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class BlochBdg:
    """Momentum-resolved BdG model.

    Attributes
    ----------
    K, M : (n_k, N, N) complex arrays
        Hopping and pairing blocks at ``k_grid(n_k)``.
    regularization : float
        Onsite shift Delta already added to ``K`` (0 if none); carried along
        so downstream invariants can be labelled as regularized.
    """
    K: np.ndarray
    M: np.ndarray
    regularization: float = 0.0
    tol_herm: float = field(default=TOL_HERM, repr=False)

    def __post_init__(self):
        K = np.asarray(self.K, dtype=complex)
        M = np.asarray(self.M, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        if M.ndim == 2:
            M = M[None]
        if K.ndim != 3 or K.shape[1] != K.shape[2]:
            raise ValidationError(f"K blocks must have shape (n_k, N, N), got {K.shape}")
        if M.shape != K.shape:
            raise ValidationError(f"M blocks shape {M.shape} differs from K blocks {K.shape}")
        object.__setattr__(self, "K", _frozen(K))
        object.__setattr__(self, "M", _frozen(M))
        self.validate()

    @property
    def n_modes(self):
        return self.K.shape[1]

    @property
    def n_k(self):
        return self.K.shape[0]

    @property
    def k(self):
        return k_grid(self.n_k)

    def minus_index(self, i):
        return (-i) % self.n_k

    def index_of(self, k):
        """Grid index of momentum ``k`` (taken mod 2 pi)."""
        m = (k % (2 * np.pi)) * self.n_k / (2 * np.pi)
        i = int(round(m)) % self.n_k
        if abs(m - round(m)) > 1e-9:
            raise ValidationError(f"k={k!r} is not on the {self.n_k}-point grid")
        return i

    def validate(self):
        for i, k in enumerate(self.k):
            j = self.minus_index(i)
            herm = max_abs(self.K[i] - self.K[i].conj().T)
            if herm > self.tol_herm:
                raise ValidationError(f"K(k) not Hermitian at k={k:.6g} (residual {herm:.3e})")
            pair = max_abs(self.M[j] - self.M[i].T)
            if pair > self.tol_herm:
                raise ValidationError(
                    f"pairing constraint M(-k) = M(k)^T broken at k={k:.6g} (residual {pair:.3e})")

    def H(self, i):
        """BdG matrix at grid index ``i``."""
        j = self.minus_index(i)
        return np.block([[self.K[i], self.M[i]],
                         [self.M[j].conj(), self.K[j].T]])

    def H_tau(self, i):
        return dynamical_matrix(self.H(i))

    def shifted(self, delta):
        """Copy with ``K -> K + delta I`` (i.e. ``H -> H + delta I``)."""
        eye = np.eye(self.n_modes)
        return BlochBdg(self.K + delta * eye, self.M,
                        regularization=self.regularization + delta, tol_herm=self.tol_herm)


@dataclass(frozen=True)
class RealSpaceBdg:
    """Finite-system BdG model with ``K = K^dagger`` and ``M = M^T``."""
    K: np.ndarray
    M: np.ndarray
    tol_herm: float = field(default=TOL_HERM, repr=False)

    def __post_init__(self):
        K = np.asarray(self.K, dtype=complex)
        M = np.asarray(self.M, dtype=complex)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or M.shape != K.shape:
            raise ValidationError(f"K, M must be square and equal-sized, got {K.shape}, {M.shape}")
        if max_abs(K - K.conj().T) > self.tol_herm:
            raise ValidationError("K is not Hermitian")
        if max_abs(M - M.T) > self.tol_herm:
            raise ValidationError("M is not symmetric")
        object.__setattr__(self, "K", _frozen(K))
        object.__setattr__(self, "M", _frozen(M))

    @property
    def n_sites(self):
        return self.K.shape[0]

    @property
    def H(self):
        return np.block([[self.K, self.M], [self.M.conj(), self.K.conj()]])


def assemble_bdg(bloch, k):
    """BdG matrix ``H(k)`` of ``bloch`` at the grid momentum ``k``."""
    i = bloch.index_of(k)
    bloch_i = bloch.H(i)
    if max_abs(bloch_i - bloch_i.conj().T) > bloch.tol_herm:
        raise ValidationError(f"assembled H(k) not Hermitian at k={k:.6g}")
    return bloch_i


def _check_nambu_shape(H):
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] % 2:
        raise ValidationError(f"expected a 2N x 2N matrix, got shape {H.shape}")
    return H


def dynamical_matrix(H):
    """``H_tau = tau3 H`` -- the generator of the Heisenberg equations."""
    H = _check_nambu_shape(H).astype(complex)
    n = H.shape[0] // 2
    out = H.copy()
    out[n:] *= -1
    return out


def quadrature_form(H):
    """``R = G H G^dagger``; real symmetric whenever H is a real-space BdG."""
    H = _check_nambu_shape(H)
    G = pauli_like_metrics(H.shape[0] // 2).G
    return G @ H @ G.conj().T


@dataclass(frozen=True)
class PrototypeParams:
    """Parameters of the dimerized chain with staggered pairing ``xi sigma3``."""
    mu: float
    t1: float
    t2: float
    xi_abs: float = 0.0
    xi_phase: float = 0.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValidationError(f"onsite energy mu must be positive, got {self.mu}")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValidationError(f"couplings must be positive, got t1={self.t1}, t2={self.t2}")
        if self.xi_abs < 0:
            raise ValidationError("xi_abs is a magnitude and must be >= 0")
        if self.xi_abs >= self.mu:
            raise ValidationError(
                f"|xi|={self.xi_abs} >= mu={self.mu}: onsite squeezing is dynamically unstable")

    @property
    def xi(self):
        return self.xi_abs * np.exp(1j * self.xi_phase)

    @property
    def mu_tilde(self):
        """Gap centre ``sqrt(mu^2 - |xi|^2)``."""
        return float(np.sqrt(self.mu ** 2 - self.xi_abs ** 2))

    @property
    def squeeze_r(self):
        """Signed squeezing parameter ``log sqrt((mu-|xi|)/(mu+|xi|)) / 2`` (<= 0)."""
        return 0.25 * float(np.log((self.mu - self.xi_abs) / (self.mu + self.xi_abs)))

    @property
    def thermodynamically_stable(self):
        return self.mu_tilde >= self.t1 + self.t2

    def bands(self, k):
        """Closed-form excitation bands ``(E_minus, E_plus)``."""
        k = np.asarray(k, dtype=float)
        q = np.sqrt(self.t1 ** 2 + self.t2 ** 2 + 2 * self.t1 * self.t2 * np.cos(k))
        return self.mu_tilde - q, self.mu_tilde + q

    def q(self, k):
        """Off-diagonal SSH symbol ``t1 + t2 exp(ik)``."""
        return self.t1 + self.t2 * np.exp(1j * np.asarray(k, dtype=float))


def build_prototype_bloch(mu, t1, t2, xi_abs=0.0, xi_phase=0.0, k_points=201):
    """Bloch blocks of the prototype chain.

    ``K(k) = mu I + (t1 + t2 cos k) sigma1 + t2 sin k sigma2`` and
    ``M = xi sigma3`` with ``xi = xi_abs exp(i xi_phase)``.
    A :class:`UserWarning` is emitted if ``sqrt(mu^2-|xi|^2) < t1 + t2``,
    where the lower band dips below zero energy.
    """
    p = PrototypeParams(mu, t1, t2, xi_abs, xi_phase)
    if not p.thermodynamically_stable:
        warnings.warn(
            f"mu_tilde={p.mu_tilde:.6g} < t1+t2={t1 + t2:.6g}: prototype is not thermodynamically stable",
            stacklevel=2)
    k = k_grid(k_points)
    K = (mu * SIGMA0[None]
         + (t1 + t2 * np.cos(k))[:, None, None] * SIGMA1[None]
         + (t2 * np.sin(k))[:, None, None] * SIGMA2[None])
    M = np.broadcast_to(p.xi * SIGMA3, K.shape)
    return BlochBdg(K, M)


def parse_complex_matrix(rows):
    """Decode ``[[[re, im], ...], ...]`` (or plain real numbers) to a complex array."""
    a = np.asarray(rows, dtype=float)
    if a.ndim >= 1 and a.shape[-1] == 2 and a.ndim == 3:
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim == 2:
        return a.astype(complex)
    raise ValidationError(f"cannot decode complex matrix of shape {a.shape}")


def encode_complex_matrix(a):
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def bloch_from_blocks(K_blocks, M_blocks):
    """Build a :class:`BlochBdg` from per-k encoded dense matrices."""
    K = np.array([parse_complex_matrix(b) for b in K_blocks])
    M = np.array([parse_complex_matrix(b) for b in M_blocks])
    return BlochBdg(K, M)
