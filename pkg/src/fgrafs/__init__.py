"""Filter-function pulse design in a Slepian basis."""

from ._backend import BACKEND
from .bands import OU, BandSpec, OneOverF, Tabulated, cutoff_frequency, derive_cnb
from .errors import FgrafsError, NumericalError, ValidationError
from .initcond import cd_initial, multiaxis_initial, solve_multiaxis
from .montecarlo import distance_stats, noisy_propagator, ou_trajectory
from .objective import gate, spectral_leakage
from .optimizer import OptimizerConfig, optimize_constrained, optimize_unconstrained
from .problem import PulseProblem
from .propagation import filter_functions, propagate, waveform_filter_functions
from .slepian import DpssBasis, generate_dpss
from .sweep import bandwidth_sweep, power_analysis
from .waveform import ControlWaveform, project_to_basis, truncated_basis

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BandSpec",
    "ControlWaveform",
    "DpssBasis",
    "FgrafsError",
    "NumericalError",
    "OU",
    "OneOverF",
    "OptimizerConfig",
    "PulseProblem",
    "Tabulated",
    "ValidationError",
    "bandwidth_sweep",
    "cd_initial",
    "cutoff_frequency",
    "derive_cnb",
    "distance_stats",
    "filter_functions",
    "gate",
    "generate_dpss",
    "multiaxis_initial",
    "noisy_propagator",
    "optimize_constrained",
    "optimize_unconstrained",
    "ou_trajectory",
    "power_analysis",
    "project_to_basis",
    "propagate",
    "solve_multiaxis",
    "spectral_leakage",
    "truncated_basis",
    "waveform_filter_functions",
]
