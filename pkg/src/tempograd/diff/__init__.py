"""Reverse-mode differentiation on an append-only tape."""
from .tape import DiffValue, Tape, backward, value_of
from .check import GradCheckReport, grad_check
from . import ops

__all__ = ["DiffValue", "Tape", "backward", "value_of", "grad_check", "GradCheckReport", "ops"]
