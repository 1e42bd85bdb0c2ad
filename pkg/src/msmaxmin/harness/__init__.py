from .experiments import ExperimentReport, TrialRow, VerificationResult, run_trial, run_verification, sweep
from .generators import GeneratorParams, gen_adversarial_flipflop, gen_random
from .io import dumps_horizon, load_horizon, loads_horizon, save_horizon

__all__ = [
    "ExperimentReport", "GeneratorParams", "TrialRow", "VerificationResult",
    "dumps_horizon", "gen_adversarial_flipflop", "gen_random", "load_horizon", "loads_horizon",
    "run_trial", "run_verification", "save_horizon", "sweep",
]
