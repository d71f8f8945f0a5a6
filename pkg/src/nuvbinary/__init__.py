"""Binary-input control of linear systems with a binary-enforcing NUV prior."""

from .estimator import BinaryInputEstimator
from .ikie import NuvState, SolveReport, ikie_solve, solve_with_s2_sweep
from .io import load_scenario, save_report, save_scenario
from .model import ConfigurationError, Levels, LtiModel, Scenario, Target, cost, simulate
from .nuvcell import characteristic, sweep_characteristic
from .oracle import brute_force, compare
from .smoother import InputPosterior, InputPrior, ObsSpec, SmootherError, smooth

__all__ = [
    "BinaryInputEstimator", "ConfigurationError", "InputPosterior", "InputPrior", "Levels",
    "LtiModel", "NuvState", "ObsSpec", "Scenario", "SmootherError", "SolveReport", "Target",
    "brute_force", "characteristic", "compare", "cost", "ikie_solve", "load_scenario",
    "save_report", "save_scenario", "simulate", "smooth", "solve_with_s2_sweep",
    "sweep_characteristic",
]
__version__ = "0.1.0"
