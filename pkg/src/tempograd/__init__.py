"""Differentiable LTL rewards: soft product of an environment and an LDBA."""
from .automata import Ldba, emit_dot, emit_hoa, parse_hoa, run_lasso, translate_fragment
from .envs import CartPole, Parking, PointMass, make_env
from .ltl import AtomicProp, LassoTrace, eval_lasso, parse_ap, parse_ltl, to_text
from .product import ProductLayer, RewardParams, step_discrete, step_product
from .trainer import Task, TrainConfig, eval_satisfaction, train

__version__ = "0.1.0"
