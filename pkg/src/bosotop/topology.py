"""One-dimensional topological invariants of bosonic BdG bands.

All Berry-phase quantities use the Krein inner product ``<v|tau3|w>``.
Every loop product is closed with the k=0 vector itself, so per-k phase
conventions cancel.
"""
import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from ._linalg import hermitize, max_abs, sqrtm_pd
from .diagonalize import Stability, compute_W, diagonalize_bloch
from .errors import GapClosedError, ResolutionError, ValidationError
from .nambu import pauli_like_metrics
from .symmetry import TOL_SYM, check_sublattice, offdiagonalize_in_S_basis

TOL_WIND = 1e-6
TOL_GAP_REL = 1e-8


def q_from_D(D_of_k):
    """Scalar symbol ``q(k) = conj(det D(k))`` of the off-diagonal block.

    ``D`` is the upper-right block in the ``S = +1`` first basis; the
    conjugate is the lower-left block, which for the dimerized chain is
    ``t1 + t2 e^{ik}``.
    """
    D = np.asarray(D_of_k, dtype=complex)
    if D.ndim == 1:
        return D.conj()
    return np.linalg.det(D).conj()


def winding_number(q_or_D, k=None, tol_gap=None, tol_wind=TOL_WIND, return_residual=False):
    """Winding of ``q(k)`` around the origin over the periodic grid.

    Parameters
    ----------
    q_or_D : (n_k,) complex or (n_k, N_A, N_B) complex
        Scalar samples ``q(k_i)``, or off-diagonal blocks (converted by
        :func:`q_from_D`).
    k : array_like, optional
        Momenta, used only for error messages.
    tol_gap : float, optional
        Absolute gap threshold; default ``1e-8 max|q|``.

    Raises
    ------
    GapClosedError
        If ``|q(k)| <= tol_gap`` somewhere.
    ResolutionError
        If a single link turns by more than pi/2 or the total phase is not
        an integer multiple of 2 pi within ``tol_wind``.
    """
    q = np.asarray(q_or_D, dtype=complex)
    if q.ndim == 3:
        q = q_from_D(q)
    if q.ndim != 1 or len(q) < 3:
        raise ValidationError("winding needs at least three q(k) samples")
    k = np.arange(len(q)) * 2 * np.pi / len(q) if k is None else np.asarray(k)
    scale = float(np.max(np.abs(q)))
    tol_gap = TOL_GAP_REL * scale if tol_gap is None else tol_gap
    small = np.flatnonzero(np.abs(q) <= tol_gap)
    if len(small) or scale == 0:
        i = int(small[0]) if len(small) else 0
        raise GapClosedError(f"|q(k)| = {abs(q[i]):.3e} at k={k[i]:.6g}: gap closed")
    steps = np.angle(np.roll(q, -1) / q)
    worst = int(np.argmax(np.abs(steps)))
    if abs(steps[worst]) > np.pi / 2:
        raise ResolutionError(f"phase of q jumps by {steps[worst]:.3f} rad after k={k[worst]:.6g}; "
                              "use a finer k grid")
    total = steps.sum() / (2 * np.pi)
    nu = int(round(total))
    residual = abs(total - nu)
    if residual > tol_wind:
        raise ResolutionError(f"accumulated winding {total:.9f} is not an integer; use a finer k grid")
    return (nu, residual) if return_residual else nu


def _krein(n):
    return pauli_like_metrics(n).tau3


def _lower_vectors(bogs, n_bands, tol_gap):
    n = bogs[0].n_modes
    n_bands = n // 2 if n_bands is None else n_bands
    if not 1 <= n_bands <= n:
        raise ValidationError(f"n_bands must be in 1..{n}, got {n_bands}")
    vecs = []
    for i, b in enumerate(bogs):
        if b.V is None or b.stability is not Stability.THERMO_AND_DYNAMICAL:
            raise ValidationError(f"grid point {i} is not thermodynamically stable; regularize first")
        if n_bands < n:
            gap = b.E_plus[n_bands] - b.E_plus[n_bands - 1]
            tol = tol_gap * max(1.0, float(np.max(np.abs(b.E_plus))))
            if gap <= tol:
                raise GapClosedError(f"bands {n_bands - 1} and {n_bands} touch at grid index {i}")
        vecs.append(b.V[:, :n_bands])
    return vecs, n_bands


def _link(a, b, tau3):
    return a.conj().T @ tau3 @ b


def symplectic_polarization(bogs, n_bands=None, tol_gap=TOL_GAP_REL):
    """Krein-Wilson-loop polarization of the lowest ``n_bands`` bands, mod 1.

    ``P = -(1/2 pi) Im log prod_i det <v(k_i)|tau3|v(k_{i+1})>`` with the
    loop closed on the first grid point.  The default band count is N/2.
    """
    vecs, _ = _lower_vectors(bogs, n_bands, tol_gap)
    tau3 = _krein(bogs[0].n_modes)
    phase = 0.0
    for i in range(len(vecs)):
        d = np.linalg.det(_link(vecs[i], vecs[(i + 1) % len(vecs)], tau3))
        if abs(d) < tol_gap:
            raise ResolutionError(f"link overlap vanishes after grid index {i}; refine the grid")
        phase += np.angle(d)
    P = (-phase / (2 * np.pi)) % 1.0
    return 0.0 if P > 1 - 1e-12 or P < 1e-12 else float(P)


def _polar_unitary(A):
    u, _, vh = np.linalg.svd(A)
    return u @ vh


def _unitary_power(U, frac):
    T, Z = schur(U, output="complex")
    theta = np.angle(np.diag(T))
    return (Z * np.exp(1j * frac * theta)) @ Z.conj().T, theta


def _smooth_gauge(vecs, tau3):
    """Parallel-transport gauge with the loop holonomy spread evenly."""
    out = [vecs[0]]
    for v in vecs[1:]:
        out.append(v @ _polar_unitary(_link(v, out[-1], tau3)))
    hol = _polar_unitary(_link(out[-1], vecs[0], tau3))
    n_k = len(vecs)
    fixed = []
    for i, v in enumerate(out):
        Ui, _ = _unitary_power(hol, i / n_k)
        fixed.append(v @ Ui)
    return fixed


def _exp_W_from_V(V):
    e2W = hermitize(V @ V.conj().T)
    eW = sqrtm_pd(e2W)
    return eW, np.linalg.inv(eW)


@dataclass(frozen=True)
class WholePolarization:
    P_whole: float
    m: int
    P: float
    quantization_residual: float
    relation_residual: float


def whole_polarization_quantization(bogs, S_tilde, n_bands=None, tol_wind=TOL_WIND,
                                    tol_gap=TOL_GAP_REL):
    """Polarization of the lower bands together with their sublattice partners.

    The partner of ``v = e^W (u, 0)`` is ``e^W (S u, 0)``.  In a smooth
    periodic gauge for ``v`` the summed link phases of the pair are
    ``2 pi m`` with integer ``m``, and ``P = m / 2 mod 1``.

    Raises
    ------
    ResolutionError
        If ``P_whole`` is not an integer or ``P != m/2 mod 1`` within
        ``tol_wind``.
    """
    vecs, n_bands = _lower_vectors(bogs, n_bands, tol_gap)
    n = bogs[0].n_modes
    S = np.asarray(S_tilde, dtype=complex)
    if S.shape != (n, n):
        raise ValidationError(f"S_tilde must be {n}x{n}")
    tau3 = _krein(n)
    vecs = _smooth_gauge(vecs, tau3)
    pairs = []
    for b, v in zip(bogs, vecs):
        eW, emW = _exp_W_from_V(b.V)
        u = (emW @ v)[:n]
        partner = eW @ np.vstack([S @ u, np.zeros_like(u)])
        pairs.append(np.hstack([v, partner]))
    phase = 0.0
    for i in range(len(pairs)):
        d = np.linalg.det(_link(pairs[i], pairs[(i + 1) % len(pairs)], tau3))
        if abs(d) < tol_gap:
            raise ResolutionError(f"pair link overlap vanishes after grid index {i}")
        phase += np.angle(d)
    P_whole = -phase / (2 * np.pi)
    m = int(round(P_whole))
    P = symplectic_polarization(bogs, n_bands, tol_gap)
    q_res = abs(P_whole - m)
    rel = abs(((P - m / 2) + 0.5) % 1.0 - 0.5)
    if q_res > tol_wind:
        raise ResolutionError(f"P_whole = {P_whole:.9f} is not an integer")
    if rel > tol_wind:
        raise ResolutionError(f"P = {P:.9f} differs from m/2 = {m / 2} mod 1")
    return WholePolarization(float(P_whole), m, P, q_res, rel)


def flatten_at_zero_energy(bogs, tol_gap=TOL_GAP_REL):
    """Max over k of ``||V' diag(I, -I) V'^dagger - tau3||`` with ``V' = e^{-W} V``.

    A zero-energy flattening of a stable BdG band structure always lands on
    ``tau3`` itself, so the returned deviation is roundoff.
    """
    dev = 0.0
    for i, b in enumerate(bogs):
        if b.V is None or b.stability is not Stability.THERMO_AND_DYNAMICAL:
            raise ValidationError(f"grid point {i} is not thermodynamically stable")
        if np.min(b.E_plus) <= tol_gap * max(1.0, float(np.max(b.E_plus))):
            raise GapClosedError(f"zero-energy gap closed at grid index {i}; regularize first")
        tau3 = _krein(b.n_modes)
        _, emW = _exp_W_from_V(b.V)
        Vp = emW @ b.V
        dev = max(dev, max_abs(Vp @ tau3 @ Vp.conj().T - tau3))
    return dev


class AZClass(str, enum.Enum):
    A = "A"
    AIII = "AIII"
    AI = "AI"
    AII = "AII"


class AZEntry(str, enum.Enum):
    ZERO = "0"
    Z = "Z"
    TWO_Z = "2Z"
    Z2 = "Z2"


_AZ_TABLE = {
    AZClass.A: "Z 0 Z 0 Z 0 Z 0",
    AZClass.AIII: "0 Z 0 Z 0 Z 0 Z",
    AZClass.AI: "Z 0 0 0 2Z 0 Z2 Z2",
    AZClass.AII: "2Z 0 Z2 Z2 Z 0 0 0",
}


def az_table_lookup(az_class, d):
    """Classification group of bosonic Bogoliubov bands in class ``az_class``, dimension ``d``."""
    if not isinstance(d, (int, np.integer)) or not 0 <= d <= 7:
        raise ValidationError(f"dimension must be an integer in 0..7, got {d!r}")
    try:
        row = _AZ_TABLE[AZClass(az_class)]
    except ValueError:
        raise ValidationError(f"unknown symmetry class {az_class!r}") from None
    return AZEntry(row.split()[d])


@dataclass(frozen=True)
class TopologyResult:
    winding: int
    polarization: float
    polarization_whole: float
    q_trace: np.ndarray
    gap_center: float
    gap_min: float
    winding_residual: float = 0.0
    regularization: float = 0.0

    def to_dict(self):
        return {"nu": self.winding, "P": self.polarization, "P_whole": self.polarization_whole,
                "gap_min": self.gap_min, "gap_center": self.gap_center,
                "winding_residual": self.winding_residual, "regularization": self.regularization}


def analyze_topology(bloch, S_tilde, n_bands=None, tol_sym=TOL_SYM):
    """All invariants of a sublattice-symmetric Bloch model in one pass.

    Raises :class:`ValidationError` if sublattice symmetry fails on the
    reduced Hamiltonian.
    """
    bogs = diagonalize_bloch(bloch)
    sqs = [compute_W(bloch.H(i)) for i in range(bloch.n_k)]
    rep = check_sublattice(sqs, S_tilde, tol_sym)
    if not rep.holds:
        raise ValidationError(f"sublattice symmetry violated: {rep.diagnostic}")
    n = bloch.n_modes
    h = np.array([s.K_tilde - rep.epsilon * np.eye(n) for s in sqs])
    q = q_from_D(offdiagonalize_in_S_basis(h, S_tilde, tol_sym))
    norm_H = max(float(np.linalg.norm(bloch.H(i), 2)) for i in range(bloch.n_k))
    nu, res = winding_number(q, bloch.k, tol_gap=TOL_GAP_REL * norm_H, return_residual=True)
    whole = whole_polarization_quantization(bogs, S_tilde, n_bands)
    nb = n // 2 if n_bands is None else n_bands
    gap = min(float(b.E_plus[nb] - b.E_plus[nb - 1]) for b in bogs) if nb < n else float("nan")
    return TopologyResult(nu, whole.P, whole.P_whole, q, rep.epsilon, gap, res,
                          bloch.regularization)
