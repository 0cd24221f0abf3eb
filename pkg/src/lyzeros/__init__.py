"""Lee-Yang zeros of a trapped-ion phonon mode probed beyond the Lamb-Dicke regime."""

__version__ = "0.1.0"

from .coupling import CouplingProfile, coupling_profile, laguerre, optimize_eta
from .dynamics import DriveParams, SpinTrajectory, ZeroLocation, detuned_spin, find_zeros, spin_coherence
from .ensemble import CoherentEnsemble, FitSettings, fidelity, fit_ensemble, poisson_diag
from .errors import ConvergenceError, InvalidArgumentError, LYZError, TruncationError
from .noise import NoiseConfig, detuning_average, heating_deviance, heating_evolve, noisy_partition_grid
from .thermal import ComplexFieldGrid, FockDistribution, ThermalParams, gibbs_distribution, partition_grid, partition_value

__all__ = [
    "ComplexFieldGrid",
    "CoherentEnsemble",
    "ConvergenceError",
    "CouplingProfile",
    "DriveParams",
    "FitSettings",
    "FockDistribution",
    "InvalidArgumentError",
    "LYZError",
    "NoiseConfig",
    "SpinTrajectory",
    "ThermalParams",
    "TruncationError",
    "ZeroLocation",
    "coupling_profile",
    "detuned_spin",
    "detuning_average",
    "fidelity",
    "find_zeros",
    "fit_ensemble",
    "gibbs_distribution",
    "heating_deviance",
    "heating_evolve",
    "laguerre",
    "noisy_partition_grid",
    "optimize_eta",
    "partition_grid",
    "partition_value",
    "poisson_diag",
    "spin_coherence",
]
