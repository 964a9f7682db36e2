"""Multi-cycle reliability of memory-based devices.

With ``d = n - n'`` the summand of every reliability depends on ``d`` only, so
each cycle's state enters through its difference distribution ``A_j(d)``.
The synchronizer form depends on ``d`` only through ``s = 1.d`` and collapses
to a convolution of the ``A_j``; the general form needs the full nested sum.
"""

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .berry_phase import PhaseModel
from .errors import SupportBudgetError
from .fidelity_engine import difference_distribution, fidelity_analytic
from .fock_states import StoredState

SUPPORT_BUDGET = 1_000_000
MODES = ("synchronizer", "repeater", "custom")


@dataclass(frozen=True, eq=False)
class CorrelationSpec:
    k: int
    mode: str = "repeater"
    rho: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "custom":
            if self.rho is None:
                raise ValueError("custom mode needs a correlation matrix rho")
            rho = np.array(self.rho, dtype=np.float64)
            if rho.shape != (self.k, self.k):
                raise ValueError(f"rho must be {self.k}x{self.k}")
            if not np.allclose(rho, rho.T, rtol=0, atol=1e-12):
                raise ValueError("rho must be symmetric")
            if not np.allclose(np.diag(rho), 1.0, rtol=0, atol=1e-12):
                raise ValueError("rho must have a unit diagonal")
            if rho.min() < 0 or rho.max() > 1:
                raise ValueError("rho entries must lie in [0, 1]")
            object.__setattr__(self, "rho", rho)

    def matrix(self) -> np.ndarray:
        if self.mode == "synchronizer":
            return np.ones((self.k, self.k))
        if self.mode == "repeater":
            return np.eye(self.k)
        return self.rho

    @classmethod
    def from_csv(cls, path) -> "CorrelationSpec":
        rho = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(rho.shape[0], "custom", rho)


def reliability_sync(states: Sequence[StoredState], model: PhaseModel,
                     compensated: bool = False,
                     budget: int = SUPPORT_BUDGET) -> float:
    """Single memory cycling through ``k`` states (all-ones correlation)."""
    if len(states) < 1:
        raise ValueError("need at least one state")
    length = sum(2 * s.n_max + 1 for s in states)
    if length > budget:
        raise SupportBudgetError(f"convolved support {length} exceeds budget {budget}")
    P = np.array([1.0])
    for s in states:
        _, A = difference_distribution(s.probabilities)
        P = np.convolve(P, A)
    lo = -sum(s.n_max for s in states)
    sums = np.arange(lo, lo + P.size, dtype=np.float64)
    term = P * np.exp(-0.5 * sums * sums * model.Gamma / model.N)
    if not compensated:
        term = term * np.cos(model.gamma0 * sums)
    return float(term.sum())


def reliability_repeater(state: StoredState, model: PhaseModel, k: int,
                         compensated: bool = False) -> float:
    """Chain of ``k`` independent memories: the single-cycle fidelity to the k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return fidelity_analytic(state, model, compensated).value ** k


def reliability_general(states: Sequence[StoredState], model: PhaseModel,
                        spec: CorrelationSpec, compensated: bool = False,
                        budget: int = SUPPORT_BUDGET) -> float:
    """Nested sum with quadratic form ``Gamma * rho`` across cycles."""
    if len(states) != spec.k:
        raise ValueError("number of states must equal spec.k")
    width = max(2 * s.n_max + 1 for s in states)
    if float(width) ** spec.k > budget:
        raise SupportBudgetError(
            f"nested support {width}^{spec.k} exceeds budget {budget}")
    dists = np.zeros((spec.k, width))
    offsets = np.empty(spec.k)
    for j, s in enumerate(states):
        d, A = difference_distribution(s.probabilities)
        dists[j, : A.size] = A
        offsets[j] = d[0]
    q = np.ascontiguousarray(spec.matrix() * (0.5 * model.Gamma / model.N))
    return float(_kernels.quadratic_form_sum(dists, offsets, float(model.gamma0),
                                             q, bool(compensated)))


@dataclass(frozen=True)
class OrderingCheck:
    label: str
    k: int
    gamma_over_n: float
    sync: float
    repeater: float

    @property
    def violated(self) -> bool:
        return self.sync > self.repeater + 1e-12


def check_sync_below_repeater(states: dict, ks: Sequence[int],
                              gamma_over_n_grid: Sequence[float]):
    """Evaluate the ordering R_S(k) <= R_R(k) on a grid (compensated); see write_counterexamples."""
    rows = []
    for label, state in states.items():
        for k in ks:
            for gn in gamma_over_n_grid:
                model = PhaseModel(0.0, 0.0, float(gn), 1)
                rows.append(OrderingCheck(
                    label, k, float(gn),
                    reliability_sync([state] * k, model, compensated=True),
                    reliability_repeater(state, model, k, compensated=True)))
    return rows


def write_counterexamples(rows, path) -> int:
    """Write every violated ordering check to CSV; returns their count."""
    bad = [r for r in rows if r.violated]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["state", "k", "gamma_over_N", "R_sync", "R_repeater", "excess"])
        for r in bad:
            writer.writerow([r.label, r.k, f"{r.gamma_over_n:.17g}", f"{r.sync:.17g}",
                             f"{r.repeater:.17g}", f"{r.sync - r.repeater:.17g}"])
    return len(bad)
