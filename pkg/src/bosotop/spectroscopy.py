"""Lorentzian-broadened quadrature correlation functions.

Only resonant terms are kept.  For the cell quadrature
``x_j = sum_s (a_{j,s} + a_{j,s}^dagger) / sqrt(2)`` mode ``n`` contributes

    w_jn kappa / ((omega - E_n)^2 + kappa^2),
    w_jn = |sum_{s in j} (X_sn + Y_sn)|^2 / 2,

where ``(X, Y)`` are the particle and hole rows of the Bogoliubov column.
Cells are numbered ``1..L``.
"""
import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .diagonalize import bogoliubov_diagonalize
from .errors import ResolutionError, ValidationError

TOL_ENV = 1e-3
THRESHOLD_RATIO = 2.0
N_OMEGA = 4000
SPAN_KAPPAS = 20.0


class BoundaryLabel(str, enum.Enum):
    OPEN = "Open"
    PERIODIC = "Periodic"
    SYNTHETIC = "Synthetic"


class Band(str, enum.Enum):
    LOWER = "Lower"
    UPPER = "Upper"


class Direction(str, enum.Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    NONE = "None"


class TopologyCall(str, enum.Enum):
    TOPOLOGICAL = "Topological"
    TRIVIAL = "Trivial"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class CorrelationTrace:
    """``-Im C_j[omega]`` on a frequency grid.

    ``mode_energies`` and ``mode_weights`` are the resonances that built the
    trace (empty for synthetic traces); they are used only to locate peaks.
    """
    omega_grid: np.ndarray
    minus_im_C: np.ndarray
    kappa: float
    j: int
    boundary: BoundaryLabel
    mode_energies: np.ndarray = field(default_factory=lambda: np.array([]))
    mode_weights: np.ndarray = field(default_factory=lambda: np.array([]))

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValidationError(f"linewidth kappa must be positive, got {self.kappa}")
        object.__setattr__(self, "boundary", BoundaryLabel(self.boundary))


def lorentzian_sum(omega, energies, weights, kappa):
    omega = np.asarray(omega, dtype=float)[:, None]
    return (np.asarray(weights)[None] * kappa / ((omega - np.asarray(energies)[None]) ** 2
                                                 + kappa ** 2)).sum(axis=1)


def default_omega_grid(energies, kappa, n_points=N_OMEGA):
    """``n_points`` frequencies spanning all resonances plus ``20 kappa`` each side."""
    return np.linspace(np.min(energies) - SPAN_KAPPAS * kappa,
                       np.max(energies) + SPAN_KAPPAS * kappa, n_points)


def _check_kappa(kappa):
    if not kappa > 0:
        raise ValidationError(f"linewidth kappa must be positive, got {kappa}")


def prototype_resonances(params, L):
    """Energies and cell weights of the PBC prototype at ``k = 2 pi m / L``.

    Weights are ``(cosh 2r -+ cos phi(k)) / 2L`` for the lower/upper band,
    ``phi(k) = arg(t1 + t2 e^{ik})``.
    """
    k = 2 * np.pi * np.arange(L) / L
    e_lo, e_hi = params.bands(k)
    c2r = np.cosh(2 * params.squeeze_r)
    cphi = np.cos(np.angle(params.q(k)))
    return (np.concatenate([e_lo, e_hi]),
            np.concatenate([c2r - cphi, c2r + cphi]) / (2 * L))


def correlation_pbc_analytic(params, L, omega_grid=None, kappa=None):
    """Closed-form ``-Im C_j`` of the clean periodic prototype (any cell ``j``)."""
    kappa = 0.006 * params.t1 if kappa is None else kappa
    _check_kappa(kappa)
    if not params.thermodynamically_stable:
        raise ValidationError("analytic correlation needs a thermodynamically stable prototype")
    E, w = prototype_resonances(params, L)
    omega = default_omega_grid(E, kappa) if omega_grid is None else np.asarray(omega_grid, float)
    return CorrelationTrace(omega, lorentzian_sum(omega, E, w, kappa), float(kappa), 1,
                            BoundaryLabel.PERIODIC, E, w)


def quadrature_weights(V, j):
    """Weights ``w_jn`` of cell ``j`` (1-based) for every particle column of ``V``."""
    n = V.shape[0] // 2
    if not 1 <= j <= n // 2:
        raise ValidationError(f"cell index j must be in 1..{n // 2}, got {j}")
    rows = slice(2 * (j - 1), 2 * j)
    amp = V[:n, :n][rows] + V[n:, :n][rows]
    return np.abs(amp.sum(axis=0)) ** 2 / 2


def correlation_numeric(realization, j, omega_grid=None, kappa=0.006, boundary="Open", bog=None):
    """``-Im C_j`` from the Bogoliubov modes of a real-space chain."""
    _check_kappa(kappa)
    if bog is None:
        bog = bogoliubov_diagonalize(realization.H)
    if bog.V is None:
        raise ValidationError("realization is dynamically unstable; no correlation spectrum")
    w = quadrature_weights(bog.V, j)
    E = bog.E_plus
    omega = default_omega_grid(E, kappa) if omega_grid is None else np.asarray(omega_grid, float)
    return CorrelationTrace(omega, lorentzian_sum(omega, E, w, kappa), float(kappa), int(j),
                            boundary, E, w)


@dataclass(frozen=True)
class EnvelopeReport:
    peak_freqs: np.ndarray
    peak_heights: np.ndarray
    band: Band
    monotonic: bool
    direction: Direction
    multiplicities: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    @property
    def height_ratio(self):
        return float(np.max(self.peak_heights) / np.min(self.peak_heights))


def _levels(energies, tol):
    """Distinct resonance energies and their degeneracies."""
    E = np.sort(np.asarray(energies, float))
    groups = [[E[0]]]
    for e in E[1:]:
        if e - groups[-1][-1] <= tol:
            groups[-1].append(e)
        else:
            groups.append([e])
    return np.array([np.mean(g) for g in groups]), np.array([len(g) for g in groups])


def _local_maxima(omega, y):
    idx = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])) + 1
    freqs, heights = [], []
    for i in idx:
        a, b, c = y[i - 1], y[i], y[i + 1]
        denom = a - 2 * b + c
        s = 0.5 * (a - c) / denom if denom != 0 else 0.0
        freqs.append(omega[i] + s * (omega[i + 1] - omega[i]))
        heights.append(b - 0.25 * (a - c) * s)
    return np.array(freqs), np.array(heights)


def _fit_levels(trace, levels):
    """Least-squares Lorentzian amplitudes at known resonance positions."""
    kappa = trace.kappa
    A = kappa / ((trace.omega_grid[:, None] - levels[None]) ** 2 + kappa ** 2)
    coef, *_ = np.linalg.lstsq(A, trace.minus_im_C, rcond=None)
    cond = np.linalg.cond(A)
    misfit = np.max(np.abs(A @ coef - trace.minus_im_C)) / np.max(trace.minus_im_C)
    return coef, cond, misfit


def _monotonicity(heights, tol_env):
    d = np.diff(heights)
    d = d[np.abs(d) > tol_env * np.max(np.abs(heights))]
    if len(d) == 0:
        return True, Direction.NONE
    if np.all(d > 0):
        return True, Direction.INCREASING
    if np.all(d < 0):
        return True, Direction.DECREASING
    return False, Direction.NONE


def extract_envelope(trace, band_window, band=Band.LOWER, tol_env=TOL_ENV, max_cond=1e10):
    """Resonance envelope of ``trace`` inside ``band_window = (lo, hi)``.

    With mode data available, peak positions are the distinct resonance
    energies and heights come from a least-squares Lorentzian fit divided by
    the degeneracy, i.e. one height per momentum in ``[0, pi]``.  Synthetic
    traces fall back to 3-point local maxima with quadratic refinement.

    Raises
    ------
    ResolutionError
        If adjacent levels are unresolvable, the Lorentzian design is too
        ill-conditioned, or fewer than two peaks fall in the window.
    """
    lo, hi = band_window
    if len(trace.mode_energies):
        scale = max(1.0, float(np.max(np.abs(trace.mode_energies))))
        levels, mult = _levels(trace.mode_energies, 1e-9 * scale)
        coef, cond, misfit = _fit_levels(trace, levels)
        if cond > max_cond or misfit > 1e-6:
            raise ResolutionError(f"peaks not separable at kappa={trace.kappa:g} (condition "
                                  f"{cond:.2e}); lower kappa or increase L")
        inside = (levels >= lo) & (levels <= hi)
        freqs, heights, mult = levels[inside], coef[inside] / trace.kappa / mult[inside], mult[inside]
        # two equal Lorentzians show separate maxima only beyond 2 kappa / sqrt(3)
        if len(freqs) > 1 and np.min(np.diff(freqs)) <= 2 * trace.kappa / np.sqrt(3):
            raise ResolutionError(f"kappa={trace.kappa:g} exceeds the Lorentzian resolution "
                                  f"limit for level spacing {np.min(np.diff(freqs)):g}")
    else:
        freqs, heights = _local_maxima(trace.omega_grid, trace.minus_im_C)
        inside = (freqs >= lo) & (freqs <= hi)
        freqs, heights = freqs[inside], heights[inside]
        mult = np.ones(len(freqs), dtype=int)
        if len(freqs) > 1:
            spacing = np.min(np.diff(freqs))
            if not trace.kappa < 0.5 * spacing:
                raise ResolutionError(f"kappa={trace.kappa:g} exceeds half the peak spacing "
                                      f"{spacing:g}; lower kappa or increase L")
    if len(freqs) < 2:
        raise ResolutionError(f"only {len(freqs)} resolved peak(s) in window {band_window}")
    monotonic, direction = _monotonicity(heights, tol_env)
    return EnvelopeReport(freqs, heights, Band(band), monotonic, direction, mult)


def band_windows(trace):
    """Frequency windows of the lower and upper half of the resonances."""
    E = np.sort(trace.mode_energies)
    n = len(E) // 2
    return (E[0], E[n - 1]), (E[n], E[-1])


def classify_topology_from_trace(trace, threshold_ratio=THRESHOLD_RATIO, tol_env=TOL_ENV):
    """Topological / Trivial / Undetermined from the lower-band envelope.

    Undetermined when the two bands are closer than ``2 kappa``, the peaks
    cannot be separated, fewer than three peaks are found, or the envelope
    is monotonic but flatter than ``threshold_ratio``.
    """
    if not len(trace.mode_energies):
        return TopologyCall.UNDETERMINED
    (lo, hi), (up_lo, _) = band_windows(trace)
    if up_lo - hi < 2 * trace.kappa:
        return TopologyCall.UNDETERMINED
    try:
        env = extract_envelope(trace, (lo, hi), Band.LOWER, tol_env)
    except ResolutionError:
        return TopologyCall.UNDETERMINED
    if len(env.peak_freqs) < 3:
        return TopologyCall.UNDETERMINED
    if not env.monotonic:
        return TopologyCall.TRIVIAL
    if env.height_ratio > threshold_ratio:
        return TopologyCall.TOPOLOGICAL
    return TopologyCall.UNDETERMINED


@dataclass(frozen=True)
class MidgapPeak:
    present: bool
    freq: float
    height: float
    reference_height: float


def detect_midgap_peak(trace, center, half_width, rel_threshold=0.05):
    """Strongest local maximum of the raw trace within ``center +- half_width``.

    ``present`` if it reaches ``rel_threshold`` of the largest peak outside
    the window.
    """
    freqs, heights = _local_maxima(trace.omega_grid, trace.minus_im_C)
    inside = np.abs(freqs - center) < half_width
    ref = float(np.max(heights[~inside])) if np.any(~inside) else float(np.max(trace.minus_im_C))
    if not np.any(inside):
        return MidgapPeak(False, float("nan"), 0.0, ref)
    i = int(np.argmax(np.where(inside, heights, -np.inf)))
    return MidgapPeak(bool(heights[i] >= rel_threshold * ref), float(freqs[i]), float(heights[i]), ref)


def sum_rule(trace):
    """``(integral of -Im C d omega / pi, sum of weights)``."""
    area = trapezoid(trace.minus_im_C, trace.omega_grid) / np.pi
    return float(area), float(np.sum(trace.mode_weights))
