from .estimators import grad_first, grad_first_per_rollout, grad_zeroth, log_prob
from .evaluate import SatisfactionReport, eval_satisfaction
from .optim import Adam, Sgd, make_optimizer
from .policy import ConstantPolicy, MlpPolicy, Policy, build_policy, flatten, n_params, unflatten
from .rollout import (
    DiscreteRun,
    RolloutError,
    RolloutRecord,
    Task,
    TrainConfig,
    discrete_rollout,
    rollout,
)
from .train import DivergenceError, TrainResult, load_snapshot, log_csv, save_snapshot, train

__all__ = [
    "grad_first",
    "grad_first_per_rollout",
    "grad_zeroth",
    "log_prob",
    "SatisfactionReport",
    "eval_satisfaction",
    "Adam",
    "Sgd",
    "make_optimizer",
    "ConstantPolicy",
    "MlpPolicy",
    "Policy",
    "build_policy",
    "flatten",
    "n_params",
    "unflatten",
    "DiscreteRun",
    "RolloutError",
    "RolloutRecord",
    "Task",
    "TrainConfig",
    "discrete_rollout",
    "rollout",
    "DivergenceError",
    "TrainResult",
    "load_snapshot",
    "log_csv",
    "save_snapshot",
    "train",
]
