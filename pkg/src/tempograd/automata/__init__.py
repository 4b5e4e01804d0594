from .guard import Guard
from .hoa import HoaError, emit_hoa, parse_hoa
from .ldba import Ldba, advance_configs, configs_accept, emit_dot, isomorphic, make_ldba, run_lasso, validate_ldba
from .translate import FragmentError, translate_fragment

__all__ = [
    "Guard",
    "Ldba",
    "make_ldba",
    "validate_ldba",
    "run_lasso",
    "advance_configs",
    "configs_accept",
    "emit_dot",
    "isomorphic",
    "translate_fragment",
    "FragmentError",
    "parse_hoa",
    "emit_hoa",
    "HoaError",
]
