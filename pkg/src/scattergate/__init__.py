"""Heralded spin-photon entangling gate: simulator and calibration toolkit."""

__version__ = "0.1.0"

from .core import (EmitterParams, JointDensity, ParameterError, PulseParams,
                   RotationPulse, ScatterAmplitudes, SpinDensity, validate)
from .scattering import (OverlapIntegrals, QuadratureError, SpectralProfile,
                         coefficients_at, overlap_integrals)
from .protocol import (ChannelConfig, GateOutcome, ProtocolError,
                       depolarizing_rotation, driving_dephasing_prob,
                       ideal_rotation, phase_damping,
                       pure_dephasing_injection, pure_dephasing_probability,
                       readout_error, run_gate, scatter_timebin,
                       spin_echo_factor)
from .metrics import (Contrasts, MetricError, Visibility, bell_fidelity,
                      bootstrap_concurrence, concurrence,
                      conditional_fidelity_formula, contrasts_from_state,
                      density_from_counts, fidelity_from_contrasts,
                      photon_visibility, success_probability)
from .calibration import (ConvergenceError, DataError, DephasingFit,
                          PhotonFlux, SaturationFit, extract_dephasing,
                          fit_saturation, mean_photon_number)
from .config import ConfigError, RunConfig, load_config, reference_config

__all__ = [name for name in dir() if not name.startswith("_")]
