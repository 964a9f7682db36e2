"""Single-cycle storage fidelity by several independent routes.

All routes reduce a state to its photon-number distribution ``p_n``; the
analytic ones further reduce it to the distribution of differences
``A(d) = sum_n p_n p_{n+d}``, which is all the double sum over (n, n') sees.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .berry_phase import (PhaseModel, Protocol, build_phase_model,
                          unit_phases_exact, unit_phases_linear)
from .disorder_ensemble import BLOCK_SIZE, SystemParams, map_blocks, sample_block
from .errors import (FidelityUnderflowError, LinearizationError,
                     SeriesDivergenceError)
from .fock_states import StoredState, photon_stats

log = logging.getLogger(__name__)

METHODS = ("analytic", "monte_carlo_exact_phase", "monte_carlo_linear_phase",
           "series", "lower_bound", "coherent_closed_form")
MAX_SERIES_ORDER = 8
SERIES_REL_TOL = 0.1


@dataclass(frozen=True)
class FidelityResult:
    value: float
    method: str
    std_error: float = 0.0
    samples: int = 0
    truncation_error: Optional[float] = None


def difference_distribution(probs: np.ndarray):
    """``(d, A(d))`` with ``A(d) = sum_n p_n p_{n+d}`` for d = -n_max..n_max."""
    A = np.correlate(probs, probs, mode="full")
    d = np.arange(-(probs.size - 1), probs.size, dtype=np.float64)
    return d, A


def compensated_fidelity(state: StoredState, gamma_over_n: float) -> float:
    """Fidelity with the mean phase compensated, as a function of Gamma/N."""
    d, A = difference_distribution(state.probabilities)
    return float(A @ np.exp(-0.5 * d * d * gamma_over_n))


def contour_gamma_over_n(state: StoredState, level: float) -> float:
    """``Gamma/N`` at which the compensated fidelity falls to ``level``.

    The compensated fidelity decreases monotonically from 1 towards its
    plateau ``sum_n p_n^2``; levels at or below the plateau are unreachable.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie strictly between 0 and 1")
    plateau = float(np.sum(state.probabilities ** 2))
    if level <= plateau:
        raise FidelityUnderflowError(
            f"fidelity never drops below {plateau:.4g}; level {level} is unreachable")
    hi = 1.0
    while compensated_fidelity(state, hi) > level:
        hi *= 4.0
    return float(brentq(lambda g: compensated_fidelity(state, g) - level, 0.0, hi,
                        xtol=1e-15, rtol=1e-13))


def fidelity_analytic(state: StoredState, model: PhaseModel,
                      compensated: bool = False) -> FidelityResult:
    """Disorder-averaged fidelity from the closed double sum over (n, n')."""
    d, A = difference_distribution(state.probabilities)
    term = A * np.exp(-0.5 * d * d * model.Gamma / model.N)
    if not compensated:
        term = term * np.cos(d * model.gamma0)
    return FidelityResult(float(term.sum()), "analytic")


def fidelity_monte_carlo(state: StoredState, params: SystemParams,
                         protocol: Protocol, phase_mode: str = "linear",
                         samples: int = 10_000, seed: int = 0,
                         compensated: bool = False, block_size: int = BLOCK_SIZE,
                         workers=None) -> FidelityResult:
    """Average ``|<phi_in|phi_out>|^2`` over sampled disorder realizations.

    Phases are linear in photon number for both modes, so each realization
    reduces to one unit phase and a characteristic-function evaluation.
    """
    if samples < 1000:
        raise ValueError("Monte Carlo needs at least 1000 samples")
    if phase_mode not in ("exact", "linear"):
        raise ValueError(f"unknown phase mode {phase_mode!r}")
    if phase_mode == "linear" and params.Delta == 0:
        raise LinearizationError("linear phase mode needs a non-zero global detuning")
    if phase_mode == "exact" and protocol.factors.convention != "definition":
        warnings.warn("exact phases integrate the pulse profile; compensation and "
                      "analytic comparisons use fixed reference pulse factors",
                      stacklevel=2)
    model = build_phase_model(params, protocol)
    probs = np.ascontiguousarray(state.probabilities)
    shift = model.gamma0 if compensated else 0.0

    def run(block, size):
        det, cpl = sample_block(params, seed, block, size)
        if phase_mode == "exact":
            phi = unit_phases_exact(det, cpl, params, protocol)
        else:
            phi = unit_phases_linear(det, cpl, params, model)
        return _kernels.overlap_squared(probs, np.ascontiguousarray(phi - shift))

    overlaps = np.concatenate(map_blocks(run, samples, block_size, workers))
    mean = float(np.mean(overlaps))
    se = float(np.std(overlaps, ddof=1) / math.sqrt(samples))
    method = f"monte_carlo_{phase_mode}_phase"
    return FidelityResult(mean, method, se, samples)


def _coefficients(state: StoredState, max_m: int) -> np.ndarray:
    var = photon_stats(state, 2).variance
    if var <= 0.0:
        return np.array([1.0])
    d, A = difference_distribution(state.probabilities)
    half_sq = d * d / (2.0 * var)  # (Z - Z')^2 / 2
    c = np.array([float(A @ half_sq ** m) for m in range(max_m + 1)])
    c[0] = 1.0  # E[1]; the summed A(d) differs from 1 only by round-off
    return c


def series_coefficients(state: StoredState, max_m: int) -> np.ndarray:
    """``c_m = E[((Z - Z')^2 / 2)^m]`` for m = 0..max_m.

    Z and Z' are independent copies of the normalised photon-number deviation.
    With these coefficients ``sum_m c_m (-x)^m / m!`` is the Taylor series of
    the compensated fidelity in ``x = Gamma <dn^2> / N``.
    """
    if not 0 <= max_m <= MAX_SERIES_ORDER:
        raise ValueError(f"max_m must lie in 0..{MAX_SERIES_ORDER}")
    return _coefficients(state, max_m)


def fidelity_series(state: StoredState, x: float, max_m: int = 4) -> FidelityResult:
    """Truncated moment series; refuses when the next term exceeds 10% of the sum."""
    if x < 0:
        raise ValueError("x must be non-negative")
    if not 0 <= max_m <= MAX_SERIES_ORDER:
        raise ValueError(f"max_m must lie in 0..{MAX_SERIES_ORDER}")
    c = _coefficients(state, max_m + 1)
    if c.size == 1:  # zero variance: x carries no information, F = 1
        return FidelityResult(1.0, "series", truncation_error=0.0)
    terms = np.array([c[m] * (-x) ** m / math.factorial(m) for m in range(max_m + 2)])
    partial = float(terms[: max_m + 1].sum())
    next_term = float(abs(terms[max_m + 1]))
    if not np.isfinite(partial) or partial <= 0 or next_term > SERIES_REL_TOL * abs(partial):
        raise SeriesDivergenceError(
            f"series unreliable at x = {x:g}, max_m = {max_m}: partial sum {partial:.3g}, "
            f"next term {next_term:.3g}")
    return FidelityResult(partial, "series", truncation_error=next_term)


def fidelity_lower_bound(x: float) -> FidelityResult:
    if x < 0:
        raise ValueError("x must be non-negative")
    return FidelityResult(math.exp(-x), "lower_bound")


def fidelity_coherent_closed(alpha: complex, phase_error: float) -> FidelityResult:
    """Coherent state under a deterministic phase error, no disorder."""
    a2 = abs(alpha) ** 2
    return FidelityResult(math.exp(-2.0 * a2 * (1.0 - math.cos(phase_error))),
                          "coherent_closed_form")


@dataclass(frozen=True)
class TailExponent:
    slope: float
    intercept: float
    degenerate: bool


def tail_exponent(state: StoredState, x_range=(10.0, 100.0),
                  points: int = 30) -> TailExponent:
    """Log-log slope of the compensated fidelity against ``x = Gamma <dn^2>/N``."""
    lo, hi = float(x_range[0]), float(x_range[1])
    if not (1.0 <= lo < hi <= 1e3):
        raise ValueError("x_range must satisfy 1 <= lo < hi <= 1000")
    if points < 10:
        raise ValueError("need at least 10 points")
    var = photon_stats(state, 2).variance
    if var <= 0.0:
        return TailExponent(0.0, 0.0, True)
    xs = np.geomspace(lo, hi, points)
    f = np.array([compensated_fidelity(state, x / var) for x in xs])
    if np.any(f <= 1e-300):
        raise FidelityUnderflowError("fidelity underflows inside the fit range")
    slope, intercept = np.polyfit(np.log(xs), np.log(f), 1)
    degenerate = bool(np.ptp(np.log(f)) < 1e-12)
    return TailExponent(float(slope), float(intercept), degenerate)
