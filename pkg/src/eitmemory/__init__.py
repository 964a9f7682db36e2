"""Disorder-induced dephasing of EIT quantum memories.

Random Berry phase from inhomogeneous detuning and coupling, the resulting
storage fidelity and multi-cycle reliability, detuning metrology and the
capacity / storage-time / driving-time trade-off.
"""

from .berry_phase import (PhaseModel, Protocol, berry_phase_exact,
                          berry_phase_linear, build_phase_model, make_protocol)
from .disorder_ensemble import (DisorderRealization, SystemParams,
                                collective_moments, sample_realization)
from .fidelity_engine import (FidelityResult, fidelity_analytic,
                              fidelity_coherent_closed, fidelity_lower_bound,
                              fidelity_monte_carlo, fidelity_series,
                              series_coefficients, tail_exponent)
from .fock_states import (PhotonStats, StoredState, admissibility_report,
                          make_cat, make_coherent, make_fock, make_uniform,
                          photon_stats)
from .metrology_tradeoff import (MeasurementScenario, TradeoffPoint,
                                 capacity_from_variance, high_fidelity_margin,
                                 infer_detuning, mean_phase, residual_detuning,
                                 tradeoff_infidelity, tradeoff_solve)
from .pulse_profiles import (PulseFactors, PulseProfile, adiabatic_margin,
                             gaussian_pulse, pulse_factors)
from .reliability_devices import (CorrelationSpec, reliability_general,
                                  reliability_repeater, reliability_sync)

__version__ = "0.1.0"
