"""Continuous-time q-learning for mean-field control with common noise."""

from .core import (
    Example,
    GaussianSummary,
    LogMeanSummary,
    LqPolicy,
    MixtureSummary,
    ModelConstants,
    NlqPolicy,
    Schedule,
    SchedulePiece,
    TimeGrid,
    phi_to_policy,
    psi_to_policy,
    rng_stream,
    schedule_eval,
)
from .funcs import FormulaVariant, dpp_audit, entropy, param_grads, true_params
from .harness import RunConfig, RunLog, eval_value, grid_study, run_alg1, run_alg2
from .estimators import ActorCriticQLearning, OptimalQLearning

__all__ = [
    "Example", "GaussianSummary", "LogMeanSummary", "LqPolicy", "MixtureSummary",
    "ModelConstants", "NlqPolicy", "Schedule", "SchedulePiece", "TimeGrid",
    "phi_to_policy", "psi_to_policy", "rng_stream", "schedule_eval",
    "FormulaVariant", "dpp_audit", "entropy", "param_grads", "true_params",
    "RunConfig", "RunLog", "eval_value", "grid_study", "run_alg1", "run_alg2",
    "ActorCriticQLearning", "OptimalQLearning",
]

__version__ = "0.1.0"
