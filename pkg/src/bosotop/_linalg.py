"""Small dense linear-algebra helpers.

All matrix functions here act on Hermitian matrices through their
eigendecomposition, so the principal branch is the only branch.
"""
import numpy as np

from .errors import NotPositiveDefiniteError


def max_abs(a):
    """Entrywise max-norm, 0 for empty input."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def hermitize(a):
    return 0.5 * (a + a.conj().T)


def hermitian_function(a, func, positive=False):
    """Apply a scalar function to a Hermitian matrix.

    Parameters
    ----------
    a : (n, n) array_like
        Hermitian matrix; the anti-Hermitian part is discarded.
    func : callable
        Vectorized scalar function applied to the eigenvalues.
    positive : bool
        Require strictly positive eigenvalues (for sqrt/log/inverse powers).
    """
    w, q = np.linalg.eigh(hermitize(np.asarray(a, dtype=complex)))
    if positive and w[0] <= 0:
        raise NotPositiveDefiniteError(
            f"matrix function needs a positive-definite argument (min eig {w[0]:.3e})")
    return (q * func(w)) @ q.conj().T


def sqrtm_pd(a):
    return hermitian_function(a, np.sqrt, positive=True)


def inv_sqrtm_pd(a):
    return hermitian_function(a, lambda w: 1.0 / np.sqrt(w), positive=True)


def logm_pd(a):
    return hermitian_function(a, np.log, positive=True)


def expm_hermitian(a, scale=1.0):
    """``exp(scale * a)`` for Hermitian ``a`` and real ``scale``."""
    return hermitian_function(a, lambda w: np.exp(scale * w))


def random_unitary(n, rng):
    """Haar-random unitary via QR with phase fix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
