"""Random Berry phase of a SIRO cycle: exact, first-order, and its moments.

Sign convention: phases carry the leading minus sign of the exact formula,
``gamma_n = -n * (weighted detuning) * integral sin^2 theta``.  The reported
``gamma0`` is therefore ``-Delta (tau_s + kappa tau_d)``; the measured Wigner
rotation (see :mod:`metrology_tradeoff`) is its magnitude.  Every fidelity
depends on ``gamma0`` only through a cosine.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .disorder_ensemble import DisorderRealization, SystemParams
from .errors import LinearizationError
from .pulse_profiles import PulseFactors, PulseProfile, gaussian_pulse, pulse_factors

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Protocol:
    """Symmetric SIRO cycle: drive tau_d/2, store tau_s, drive tau_d/2."""

    tau_s: float
    tau_d: float
    profile: PulseProfile
    factors: PulseFactors

    def __post_init__(self):
        if self.tau_s < 0:
            raise ValueError("tau_s must be non-negative")
        if not self.tau_d > 0:
            raise ValueError("tau_d must be positive")
        if abs(self.profile.tau_d - self.tau_d) > 1e-9 * self.tau_d:
            raise ValueError("profile window does not match tau_d")

    @property
    def tau(self) -> float:
        return self.tau_s + self.tau_d

    @property
    def long_storage(self) -> bool:
        """Whether the intended regime tau_s >> tau_d (10x) holds; informational."""
        return self.tau_s >= 10.0 * self.tau_d


def make_protocol(tau_s: float, tau_d: float, xi: float = 1000.0,
                  grid_points: int = 4001, convention: str = "definition") -> Protocol:
    profile = gaussian_pulse(xi, tau_d, grid_points)
    return Protocol(tau_s, tau_d, profile, pulse_factors(profile, convention))


@dataclass(frozen=True)
class PhaseModel:
    gamma0: float
    mu0: float
    Gamma: float
    N: int

    def to_dict(self):
        return {"gamma0": self.gamma0, "mu0": self.mu0, "Gamma": self.Gamma,
                "N": self.N, "Gamma_over_N": self.Gamma / self.N}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def flipped(self) -> "PhaseModel":
        return PhaseModel(-self.gamma0, -self.mu0, self.Gamma, self.N)


def build_phase_model(params: SystemParams, protocol: Protocol) -> PhaseModel:
    """Homogeneous phase, coupling sensitivity and phase-variance factor.

    ``Gamma`` is evaluated in the product form
    ``dDelta^2 (tau_s + kappa tau_d)^2 + (dg Delta zeta tau_d / (2 g))^2``,
    identical to ``(dDelta/Delta)^2 gamma0^2 + (dg/g)^2 mu0^2`` for Delta != 0
    and continuous through Delta = 0.
    """
    f = protocol.factors
    window = protocol.tau_s + f.kappa_theta * protocol.tau_d
    gamma0 = -params.Delta * window
    # storage contributes nothing to mu0: sin(2 * pi/2) = 0
    mu0 = -0.5 * params.Delta * f.zeta_theta * protocol.tau_d
    Gamma = ((params.delta_Delta * window) ** 2
             + (params.delta_g / params.g * mu0) ** 2)
    return PhaseModel(float(gamma0), float(mu0), float(Gamma), params.N)


def _drive_arrays(protocol: Protocol):
    prof = protocol.profile
    return prof.waveform, prof.quadrature_weights()


def unit_phases_exact(detunings, couplings, params: SystemParams,
                      protocol: Protocol) -> np.ndarray:
    """Exact n = 1 phases for a (realizations, atoms) block."""
    w, q = _drive_arrays(protocol)
    return _kernels.exact_unit_phases(
        np.ascontiguousarray(detunings, dtype=np.float64),
        np.ascontiguousarray(couplings, dtype=np.float64),
        params.sum_g2_ref, float(protocol.tau_s), float(protocol.tau_d), w, q)


def unit_phases_linear(detunings, couplings, params: SystemParams,
                       model: PhaseModel) -> np.ndarray:
    """First-order n = 1 phases ``gamma0 (1 + eps_Delta) + mu0 eps_g`` for a block."""
    if params.Delta == 0:
        raise LinearizationError("linear phase needs a non-zero global detuning")
    N = params.N
    eps_D = (detunings.sum(axis=-1) / N - params.Delta) / params.Delta
    eps_g = (couplings.sum(axis=-1) / N - params.g) / params.g
    return model.gamma0 * (1.0 + eps_D) + model.mu0 * eps_g


def berry_phase_exact(realization: DisorderRealization, protocol: Protocol,
                      n: int) -> float:
    if n < 0:
        raise ValueError("photon number must be non-negative")
    if n == 0:
        return 0.0
    phi = unit_phases_exact(realization.detunings[None, :],
                            realization.couplings[None, :],
                            realization.params, protocol)
    return n * float(phi[0])


def berry_phase_linear(realization: DisorderRealization, model: PhaseModel,
                       n: int) -> float:
    p = realization.params
    if p.Delta == 0:
        raise LinearizationError("linear phase needs a non-zero global detuning")
    return n * (model.gamma0 * (1.0 + realization.eps_Delta)
                + model.mu0 * realization.eps_g)
