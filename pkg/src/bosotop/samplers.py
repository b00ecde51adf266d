"""Random positive-definite Bloch BdG models with prescribed symmetry.

Used by the property test suites.  Every model is a finite Fourier series
in k so the pairing constraint ``M(-k) = M(k)^T`` holds exactly, and is
shifted so the smallest eigenvalue of ``H(k)`` over the grid is ``margin``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._linalg import random_unitary
from .nambu import BlochBdg, k_grid
from .symmetry import (SymmetryOperator, chiral, construct_sls_bdg, particle_hole, sublattice,
                       time_reversal)

KINDS = ("ParticleHole", "TimeReversal", "Chiral", "Sublattice")


@dataclass(frozen=True)
class SymmetricInstance:
    bloch: BlochBdg
    op: SymmetryOperator
    S_tilde: Optional[np.ndarray] = None


def _series(coeffs, k, pair):
    """``C_0 + sum_m (C_m e^{ikm} + pair(C_m) e^{-ikm})`` on the grid."""
    out = np.repeat(coeffs[0][None], len(k), axis=0).astype(complex)
    for m, C in enumerate(coeffs[1:], start=1):
        ph = np.exp(1j * m * k)[:, None, None]
        out += C[None] * ph + pair(C)[None] / ph
    return out


def _coeffs(rng, n, n_harm, real):
    def draw():
        a = rng.standard_normal((n, n))
        return a if real else a + 1j * rng.standard_normal((n, n))
    return [draw() for _ in range(n_harm + 1)]


def _shift_pd(K, M, margin):
    bloch = BlochBdg(K, M, tol_herm=1e-9)
    lo = min(np.linalg.eigvalsh(bloch.H(i))[0] for i in range(bloch.n_k))
    return BlochBdg(K + (margin - lo) * np.eye(K.shape[1]), M)


def random_bloch(n_modes, n_k, rng, real=False, n_harm=2, margin=0.5, scale=0.5):
    """Generic positive-definite model; real coefficients give ``h^*(-k) = h(k)``."""
    k = k_grid(n_k)
    A = [scale * a for a in _coeffs(rng, n_modes, n_harm, real)]
    B = [scale * b for b in _coeffs(rng, n_modes, n_harm, real)]
    A[0] = 0.5 * (A[0] + A[0].conj().T)
    B[0] = 0.5 * (B[0] + B[0].T)
    K = _series(A, k, lambda c: c.conj().T)
    M = _series(B, k, lambda c: c.T)
    return _shift_pd(K, M, margin)


def random_symmetric_instance(kind, n_modes, n_k, rng):
    """One random instance of ``kind`` (see :data:`KINDS`) with its operator."""
    if kind == "ParticleHole":
        return SymmetricInstance(random_bloch(n_modes, n_k, rng), particle_hole(n_modes))
    if kind in ("TimeReversal", "Chiral"):
        base = random_bloch(n_modes, n_k, rng, real=True)
        U = random_unitary(n_modes, rng)
        K = U[None] @ base.K @ U.conj().T[None]
        M = U[None] @ base.M @ U.T[None]
        T = U @ U.T
        op = time_reversal(T) if kind == "TimeReversal" else chiral(T)
        return SymmetricInstance(BlochBdg(K, M), op)
    if kind == "Sublattice":
        bloch, S = random_sls_bloch(n_modes, n_k, rng)
        return SymmetricInstance(bloch, sublattice(S), S)
    raise ValueError(f"unknown symmetry kind {kind!r}")


def random_sls_bloch(n_modes, n_k, rng, n_harm=2, margin=0.3):
    """Sublattice-symmetric family ``K = eps I + h``, ``M = xi S`` in a random real frame.

    Returns the model and the sublattice matrix ``S``.
    """
    if n_modes % 2:
        raise ValueError("sublattice instances need an even number of modes")
    a = n_modes // 2
    k = k_grid(n_k)
    D = _series([rng.standard_normal((a, a)) for _ in range(n_harm + 1)], k, lambda c: c)
    # D(k) = D_0 + sum D_m (e^{ikm} + e^{-ikm}) + random antisymmetric-in-k part
    D = D + _series([np.zeros((a, a))] + [rng.standard_normal((a, a)) for _ in range(n_harm)],
                    k, lambda c: -c)
    h = np.zeros((n_k, n_modes, n_modes), dtype=complex)
    h[:, :a, a:] = D
    h[:, a:, :a] = np.conj(np.transpose(D, (0, 2, 1)))
    O, _ = np.linalg.qr(rng.standard_normal((n_modes, n_modes)))
    S = O @ np.diag([1.0] * a + [-1.0] * a) @ O.T
    h = O[None] @ h @ O.T[None]
    width = max(np.linalg.norm(x, 2) for x in h)
    mu_t = width + margin
    xi = rng.uniform(0.1, 2.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    eps_bar = float(np.sqrt(mu_t ** 2 + abs(xi) ** 2))
    fam = construct_sls_bdg(h, eps_bar, xi, S)
    return fam.bloch, S
