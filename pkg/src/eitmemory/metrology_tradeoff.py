"""Detuning metrology and the capacity / storage-time / driving-time trade-off.

Units: angular frequencies and times must be reciprocal (MHz with us, ...).

Two conventions exist for the coupling term of the trade-off:

``literal``  ``dDelta^2 tau_s^2 + Delta^2 dg^2 zeta^2 tau_d^2 / g^2``
``gamma``  ``dDelta^2 tau_s^2 + Delta^2 dg^2 zeta^2 tau_d^2 / (4 g^2)``, the
           storage-dominated limit of ``Gamma`` from the phase model.

They differ by a factor 4 in the coupling term; both are always available.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

from .berry_phase import Protocol
from .disorder_ensemble import SystemParams
from .errors import InfeasibleTradeoffError
from .pulse_profiles import PulseFactors

TRADEOFF_CONVENTIONS = ("literal", "gamma")
HIGH_FIDELITY_THRESHOLD = 10.0


class OutsideReliableRegionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MeasurementScenario:
    tau_s_de: float
    tau_d_de: float
    Delta_true: float
    alpha_theta: float

    def __post_init__(self):
        if not (self.tau_s_de > 0 and self.tau_d_de > 0):
            raise ValueError("detection-run times must be positive")

    @property
    def kappa_theta(self) -> float:
        return self.alpha_theta + 0.5


def mean_phase(params: SystemParams, protocol: Protocol) -> float:
    """Magnitude-convention Wigner rotation ``Delta (tau_s + kappa tau_d)``."""
    return params.Delta * (protocol.tau_s + protocol.factors.kappa_theta * protocol.tau_d)


def infer_detuning(measured_phase: float, tau_s: float, tau_d: float,
                   kappa_theta: float, mode: str = "berry") -> float:
    """Detuning read off a measured rotation.

    ``berry`` inverts the full relation; ``naive`` drops the pulse factor and
    treats the driving window as contributing half its length.
    """
    if mode == "berry":
        denom = tau_s + kappa_theta * tau_d
    elif mode == "naive":
        denom = tau_s + 0.5 * tau_d
    else:
        raise ValueError(f"unknown inference mode {mode!r}")
    if not denom > 0:
        raise ValueError("effective phase-accumulation time must be positive")
    return measured_phase / denom


def residual_detuning(scenario: MeasurementScenario) -> float:
    s = scenario
    return s.alpha_theta * s.tau_d_de * s.Delta_true / (s.tau_s_de + 0.5 * s.tau_d_de)


def measured_detuning(scenario: MeasurementScenario, mode: str = "naive") -> float:
    """Detuning a detection run would report under the given inference model."""
    s = scenario
    phase = s.Delta_true * (s.tau_s_de + s.kappa_theta * s.tau_d_de)
    return infer_detuning(phase, s.tau_s_de, s.tau_d_de, s.kappa_theta, mode)


def high_fidelity_margin(scenario: MeasurementScenario, tau_s: float,
                         variance: float) -> float:
    """``(tau_s_de / tau_d_de) / (Delta tau_s <dn^2>^(1/2))``; large means safe."""
    denom = abs(scenario.Delta_true) * tau_s * math.sqrt(variance)
    if denom == 0.0:
        return math.inf
    return (scenario.tau_s_de / scenario.tau_d_de) / denom


def capacity_from_variance(max_variance: float) -> float:
    """Capacity in nats, ``ln(2 sqrt(<dn^2>_max) + 1)``."""
    if max_variance < 0:
        raise ValueError("variance must be non-negative")
    return math.log(2.0 * math.sqrt(max_variance) + 1.0)


def variance_from_capacity(capacity: float) -> float:
    return (math.expm1(capacity) / 2.0) ** 2


@dataclass(frozen=True)
class TradeoffPoint:
    capacity: float
    tau_s: float
    tau_d: float
    params: SystemParams
    factors: PulseFactors
    fidelity_floor: Optional[float] = None

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError("capacity must be non-negative")
        if self.fidelity_floor is not None and not 0 <= self.fidelity_floor <= 1:
            raise ValueError("fidelity floor must lie in [0, 1]")


def _coefficients(params: SystemParams, factors: PulseFactors, convention: str):
    if convention not in TRADEOFF_CONVENTIONS:
        raise ValueError(f"convention must be one of {TRADEOFF_CONVENTIONS}")
    a = params.delta_Delta ** 2
    b = (params.Delta * params.delta_g * factors.zeta_theta / params.g) ** 2
    if convention == "gamma":
        b /= 4.0
    return a, b


def tradeoff_infidelity(point: TradeoffPoint, convention: str = "literal") -> float:
    a, b = _coefficients(point.params, point.factors, convention)
    value = ((a * point.tau_s ** 2 + b * point.tau_d ** 2)
             * math.expm1(point.capacity) ** 2 / (4.0 * point.params.N))
    if value > 1.0:
        warnings.warn(f"trade-off infidelity {value:.3g} > 1: outside the "
                      "highly reliable region", OutsideReliableRegionWarning, stacklevel=2)
    return value


def tradeoff_solve(target_fidelity: float, params: SystemParams,
                   factors: PulseFactors, fixed: dict,
                   convention: str = "literal") -> float:
    """Solve the trade-off for the one variable not in ``fixed``.

    ``fixed`` holds exactly two of ``capacity``, ``tau_s``, ``tau_d``.  Each
    variable enters through a single monotone term, so the inversion is in
    closed form.
    """
    if not 0 < target_fidelity < 1:
        raise ValueError("target fidelity must lie strictly between 0 and 1")
    names = {"capacity", "tau_s", "tau_d"}
    if len(fixed) != 2 or not set(fixed) <= names:
        raise ValueError("fix exactly two of capacity, tau_s, tau_d")
    (free,) = names - set(fixed)
    a, b = _coefficients(params, factors, convention)
    budget = 4.0 * params.N * (1.0 - target_fidelity)
    if free == "capacity":
        load = a * fixed["tau_s"] ** 2 + b * fixed["tau_d"] ** 2
        if load == 0.0:
            raise InfeasibleTradeoffError("no disorder: capacity is unbounded")
        return math.log1p(math.sqrt(budget / load))
    spread = math.expm1(fixed["capacity"]) ** 2
    if spread == 0.0:
        raise InfeasibleTradeoffError("zero capacity leaves the times unconstrained")
    room = budget / spread
    if free == "tau_s":
        rest, coef = room - b * fixed["tau_d"] ** 2, a
    else:
        rest, coef = room - a * fixed["tau_s"] ** 2, b
    if coef == 0.0:
        raise InfeasibleTradeoffError(f"{free} does not enter the trade-off here")
    if rest <= 0.0:
        raise InfeasibleTradeoffError(f"no positive {free} reaches the target fidelity")
    return math.sqrt(rest / coef)


def storage_product(target_fidelity: float, params: SystemParams) -> float:
    """``tau_s (e^C - 1)`` at fixed fidelity when only broadening acts."""
    if params.delta_Delta == 0:
        raise InfeasibleTradeoffError("no broadening: tau_s is unconstrained")
    return 2.0 * math.sqrt(params.N * (1.0 - target_fidelity)) / params.delta_Delta


def driving_product(target_fidelity: float, params: SystemParams,
                    factors: PulseFactors, convention: str = "literal") -> float:
    """``|Delta| tau_d (e^C - 1)`` at fixed fidelity when only coupling disorder acts."""
    if params.delta_g == 0:
        raise InfeasibleTradeoffError("no coupling disorder: tau_d is unconstrained")
    value = (2.0 * math.sqrt(params.N * (1.0 - target_fidelity)) * params.g
             / (params.delta_g * factors.zeta_theta))
    return 2.0 * value if convention == "gamma" else value
