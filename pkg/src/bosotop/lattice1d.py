"""Real-space dimerized boson chain with staggered pairing.

Site ``(j, +)`` (sublattice A of cell j) is index ``2j`` and ``(j, -)``
(sublattice B) is ``2j + 1``.  The intra-cell bond ``t_intra[j]`` joins
``2j`` and ``2j + 1``; the inter-cell bond ``t_inter[j]`` joins ``2j + 1``
and ``2j + 2`` (wrapping to site 0 for the last cell under PBC).
"""
import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._linalg import sqrtm_pd
from .diagonalize import Stability, bogoliubov_diagonalize
from .errors import BosotopError, ValidationError
from .nambu import RealSpaceBdg, dynamical_matrix


class Boundary(str, enum.Enum):
    OPEN = "Open"
    PERIODIC = "Periodic"


class Side(str, enum.Enum):
    LEFT = "Left"
    RIGHT = "Right"


class DisorderKind(str, enum.Enum):
    HOPPING = "Hopping"
    ONSITE = "Onsite"


@dataclass(frozen=True)
class ChainSpec:
    """Couplings of a finite chain of ``L`` two-site cells."""
    L: int
    mu: float
    t_intra: tuple
    t_inter: tuple
    xi_abs: float = 0.0
    xi_phase: float = 0.0
    boundary: Boundary = Boundary.OPEN
    onsite_offsets: tuple = None

    def __post_init__(self):
        L = int(self.L)
        if L < 1:
            raise ValidationError("chain needs at least one cell")
        boundary = Boundary(self.boundary)
        t_intra = tuple(float(t) for t in self.t_intra)
        t_inter = tuple(float(t) for t in self.t_inter)
        offsets = (0.0,) * (2 * L) if self.onsite_offsets is None else \
            tuple(float(x) for x in self.onsite_offsets)
        if len(t_intra) != L:
            raise ValidationError(f"t_intra needs {L} entries, got {len(t_intra)}")
        if len(t_inter) not in (L - 1, L) or (boundary is Boundary.PERIODIC and len(t_inter) != L):
            raise ValidationError(f"t_inter needs {L - 1} (open) or {L} entries, got {len(t_inter)}")
        if boundary is Boundary.PERIODIC and L < 2:
            raise ValidationError("periodic chain needs L >= 2 (L = 1 would double-bond one pair)")
        if min(t_intra + t_inter, default=1.0) <= 0:
            raise ValidationError("all couplings must be positive")
        if len(offsets) != 2 * L:
            raise ValidationError(f"onsite_offsets needs {2 * L} entries, got {len(offsets)}")
        if self.mu <= 0:
            raise ValidationError("onsite energy mu must be positive")
        if self.xi_abs < 0:
            raise ValidationError("xi_abs must be >= 0")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "t_intra", t_intra)
        object.__setattr__(self, "t_inter", t_inter)
        object.__setattr__(self, "onsite_offsets", offsets)

    @classmethod
    def clean(cls, L, mu, t1, t2, xi_abs=0.0, xi_phase=0.0, boundary=Boundary.OPEN):
        boundary = Boundary(boundary)
        n_inter = L if boundary is Boundary.PERIODIC else L - 1
        return cls(L, mu, (t1,) * L, (t2,) * n_inter, xi_abs, xi_phase, boundary)

    @property
    def xi(self):
        return self.xi_abs * np.exp(1j * self.xi_phase)

    @property
    def mu_tilde(self):
        return float(np.sqrt(self.mu ** 2 - self.xi_abs ** 2))

    @property
    def squeeze_r(self):
        return 0.25 * float(np.log((self.mu - self.xi_abs) / (self.mu + self.xi_abs)))

    @property
    def has_onsite_disorder(self):
        return any(x != 0 for x in self.onsite_offsets)

    @property
    def bonds(self):
        """Inter-cell couplings actually present for this boundary."""
        return self.t_inter if self.boundary is Boundary.PERIODIC else self.t_inter[:self.L - 1]

    def clean_couplings(self):
        """``(t1, t2)`` if all intra and all inter bonds are equal, else ``None``."""
        if len(set(self.t_intra)) == 1 and len(set(self.bonds)) <= 1 and not self.has_onsite_disorder:
            return self.t_intra[0], (self.bonds[0] if self.bonds else self.t_intra[0])
        return None


def sublattice_signs(L):
    """``+1`` on A sites and ``-1`` on B sites."""
    return np.tile([1.0, -1.0], L)


def build_chain(spec):
    """Real-space BdG blocks ``K`` (hopping + onsite) and ``M = xi diag(+-1)``."""
    n = 2 * spec.L
    K = np.diag(spec.mu + np.asarray(spec.onsite_offsets)).astype(complex)
    for j, t in enumerate(spec.t_intra):
        K[2 * j, 2 * j + 1] = K[2 * j + 1, 2 * j] = t
    for j, t in enumerate(spec.bonds):
        a, b = 2 * j + 1, (2 * j + 2) % n
        K[a, b] = K[b, a] = t
    M = np.diag(spec.xi * sublattice_signs(spec.L))
    return RealSpaceBdg(K, M)


@dataclass(frozen=True)
class SweepPoint:
    t2: float
    E_plus: np.ndarray          # empty when unstable
    stability: Stability
    midgap: np.ndarray
    critical: bool


def obc_spectrum_sweep(template, t2_values):
    """Positive-branch OBC spectra of a clean chain as ``t2`` varies.

    Midgap energies are those with ``|E - mu_tilde| < |t1 - t2| / 2``; at
    ``t2 = t1`` the gap closes and the point is flagged ``critical``.
    """
    t1 = template.t_intra[0]
    out = []
    for t2 in t2_values:
        spec = ChainSpec.clean(template.L, template.mu, t1, t2, template.xi_abs,
                               template.xi_phase, Boundary.OPEN)
        bog = bogoliubov_diagonalize(build_chain(spec).H)
        critical = abs(t2 - t1) <= 1e-12 * t1
        if bog.V is None:
            out.append(SweepPoint(float(t2), np.array([]), bog.stability, np.array([]), critical))
            continue
        E = bog.E_plus
        mid = E[np.abs(E - spec.mu_tilde) < 0.5 * abs(t1 - t2)] if not critical else np.array([])
        out.append(SweepPoint(float(t2), E, bog.stability, mid, critical))
    return out


@dataclass(frozen=True)
class EdgeMode:
    """Analytic edge vector in the original Nambu basis.

    ``residual`` is ``||H_tau v - E v||_2`` for the normalized ansatz.
    ``residual_flat_hole`` is the same quantity when the hole part carries
    no spatial envelope (kept for comparison only).
    """
    side: Side
    energy: float
    amplitudes_particle: np.ndarray
    amplitudes_hole: np.ndarray
    residual: float
    residual_flat_hole: float = float("nan")

    @property
    def vector(self):
        return np.concatenate([self.amplitudes_particle, self.amplitudes_hole])

    def overlap(self, V_sub):
        """``sum_n |<v_n|tau3|v>|^2`` over the columns of ``V_sub``."""
        tau3v = np.concatenate([self.amplitudes_particle, -self.amplitudes_hole])
        return float(np.sum(np.abs(V_sub.conj().T @ tau3v) ** 2))


def _squeeze_reduced(spec, u):
    """Map a reduced (particle-conserving) vector back: ``v = e^W (u, 0)``."""
    r = spec.squeeze_r
    S = sublattice_signs(spec.L)
    return np.cosh(r) * u, np.sinh(r) * np.exp(-1j * spec.xi_phase) * S * u


def _edge_from_reduced(spec, side, u):
    u = u / np.linalg.norm(u)
    part, hole = _squeeze_reduced(spec, u)
    Ht = dynamical_matrix(build_chain(spec).H)
    E = spec.mu_tilde
    v = np.concatenate([part, hole])
    res = float(np.linalg.norm(Ht @ v - E * v))
    # same hole weight on every occupied site, no decay
    flat = (np.sinh(spec.squeeze_r) * np.exp(-1j * spec.xi_phase)
            * sublattice_signs(spec.L) * (u != 0) / np.sqrt(np.count_nonzero(u)))
    w = np.concatenate([part, flat])
    w = w / np.sqrt(abs(np.vdot(part, part) - np.vdot(flat, flat)))
    res_flat = float(np.linalg.norm(Ht @ w - E * w))
    return EdgeMode(Side(side), E, part, hole, res, res_flat)


def edge_mode_ansatz(spec, side):
    """Clean-chain edge vector with envelope ``delta^{j-1}``, ``delta = -t1/t2``.

    The left mode lives on sublattice A counted from cell 1, the right mode
    on sublattice B counted from cell L.  Both particle and hole parts carry
    the envelope.

    Raises
    ------
    ValidationError
        For a disordered, periodic, or trivial (``t1 >= t2``) chain.
    """
    couplings = spec.clean_couplings()
    if couplings is None or spec.boundary is not Boundary.OPEN:
        raise ValidationError("edge_mode_ansatz needs a clean open chain")
    t1, t2 = couplings
    if not t1 < t2:
        raise ValidationError(f"no edge mode in the trivial phase t1={t1} >= t2={t2}")
    delta = -t1 / t2
    u = np.zeros(2 * spec.L, dtype=complex)
    powers = delta ** np.arange(spec.L)
    if Side(side) is Side.LEFT:
        u[0::2] = powers
    else:
        u[1::2] = powers[::-1]
    return _edge_from_reduced(spec, side, u)


def disordered_edge_ansatz(spec):
    """Product-form edge vectors ``(left, right)`` of a hopping-disordered open chain.

    Left amplitudes obey ``u_A[j+1] = -t_intra[j]/t_inter[j] u_A[j]``; right
    amplitudes ``u_B[j-1] = -t_intra[j]/t_inter[j-1] u_B[j]``.
    """
    if spec.has_onsite_disorder:
        raise ValidationError("product-form edge modes need pure hopping disorder; "
                              "onsite offsets break sublattice symmetry")
    if spec.boundary is not Boundary.OPEN:
        raise ValidationError("edge modes need an open chain")
    L = spec.L
    ti, te = np.asarray(spec.t_intra), np.asarray(spec.t_inter[:L - 1])
    left = np.zeros(2 * L, dtype=complex)
    right = np.zeros(2 * L, dtype=complex)
    left[0::2] = np.concatenate([[1.0], np.cumprod(-ti[:-1] / te)])
    right[1::2] = np.concatenate([np.cumprod((-ti[1:] / te)[::-1])[::-1], [1.0]])
    if abs(left[-2]) >= 1 or abs(right[1]) >= 1:
        raise ValidationError("coupling product does not decay; edge mode is delocalized")
    return _edge_from_reduced(spec, Side.LEFT, left), _edge_from_reduced(spec, Side.RIGHT, right)


@dataclass(frozen=True)
class DisorderEnsemble:
    """Spectra of ``n_samples`` seeded realizations at one disorder strength."""
    n_samples: int
    strength: float
    kind: DisorderKind
    seed: int
    spectra: np.ndarray             # (n_samples, 2L), each row ascending
    edge_energies: np.ndarray       # (n_samples, 2), ascending
    edge_in_gap: np.ndarray         # (n_samples,) bool
    sublattice_residuals: np.ndarray
    rejections: int
    mu_tilde: float

    @property
    def mean_spectrum(self):
        return self.spectra.mean(axis=0)

    @property
    def edge_splittings(self):
        return self.edge_energies[:, 1] - self.edge_energies[:, 0]

    @property
    def mean_edge_splitting(self):
        return float(self.edge_splittings.mean())

    @property
    def max_edge_deviation(self):
        return float(np.max(np.abs(self.edge_energies - self.mu_tilde)))


def sample_rng(seed, d_index, sample_index):
    """Independent stream for (disorder value, sample); order of execution is irrelevant."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(d_index, sample_index)))


def draw_realization(spec, kind, D, rng):
    """One disordered copy of ``spec`` plus the number of rejected draws.

    Hopping draws that would make a coupling non-positive are redrawn.
    """
    kind = DisorderKind(kind)
    if D == 0:
        return spec, 0
    if kind is DisorderKind.ONSITE:
        off = np.asarray(spec.onsite_offsets) + rng.uniform(-D, D, 2 * spec.L)
        return replace(spec, onsite_offsets=tuple(off)), 0
    base = np.concatenate([spec.t_intra, spec.t_inter])
    t = base + rng.uniform(-D, D, len(base))
    rejected = 0
    for i in range(len(t)):
        while t[i] <= 0:
            rejected += 1
            t[i] = base[i] + rng.uniform(-D, D)
    L = spec.L
    return replace(spec, t_intra=tuple(t[:L]), t_inter=tuple(t[L:])), rejected


def _reduced_sublattice_residual(H, V, L):
    # e^{2W} = V V^dagger, so the Colpa basis already fixes the reduction
    eW = sqrtm_pd(V @ V.conj().T)
    Kt = (eW @ H @ eW)[:2 * L, :2 * L]
    eps = np.trace(Kt).real / len(Kt)
    h = Kt - eps * np.eye(len(Kt))
    S = sublattice_signs(L)
    return 0.5 * float(np.linalg.norm(S[:, None] * h * S[None, :] + h, 2))


def _run_sample(spec, kind, D, seed, d_index, i, with_sublattice):
    real, rej = draw_realization(spec, kind, D, sample_rng(seed, d_index, i))
    H = build_chain(real).H
    bog = bogoliubov_diagonalize(H)
    if bog.V is None:
        raise BosotopError(f"sample {i} at D={D} is dynamically unstable")
    sub = _reduced_sublattice_residual(H, bog.V, spec.L) if with_sublattice else np.nan
    return bog.E_plus, rej, sub


def disorder_ensemble(spec, kind, D_values, n_samples=100, seed=0, threads=1,
                      with_sublattice=True):
    """Disorder-averaged spectra, one :class:`DisorderEnsemble` per strength.

    Draws are uniform on ``[-D, D]`` added to the clean values of ``spec``.
    Results do not depend on ``threads``: sample ``i`` at strength index
    ``d`` always uses the stream ``(seed, d, i)``.
    """
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    if any(D < 0 for D in D_values):
        raise ValidationError("disorder strengths must be >= 0")
    kind = DisorderKind(kind)
    mu_t = spec.mu_tilde
    t1 = spec.t_intra[0]
    t2 = spec.bonds[0] if spec.bonds else t1
    gap_half = abs(t1 - t2)
    out = []
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        for d, D in enumerate(D_values):
            jobs = [pool.submit(_run_sample, spec, kind, D, seed, d, i, with_sublattice)
                    for i in range(n_samples)]
            rows = [j.result() for j in jobs]
            spectra = np.array([r[0] for r in rows])
            edges = np.sort(np.array([s[np.argsort(np.abs(s - mu_t), kind="stable")[:2]]
                                      for s in spectra]), axis=1)
            in_gap = np.all(np.abs(edges - mu_t) < gap_half, axis=1)
            out.append(DisorderEnsemble(n_samples, float(D), kind, int(seed), spectra, edges,
                                        in_gap, np.array([r[2] for r in rows]),
                                        int(sum(r[1] for r in rows)), mu_t))
    return out
