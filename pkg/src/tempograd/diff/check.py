"""Finite-difference verification of tape gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tape import DiffValue, Tape


@dataclass
class GradCheckReport:
    ad: np.ndarray
    fd: np.ndarray
    rel_err: np.ndarray
    tolerance: float
    flags: list = field(default_factory=list)

    @property
    def max_err(self) -> float:
        return float(np.max(self.rel_err)) if self.rel_err.size else 0.0

    @property
    def passed(self) -> bool:
        return bool(np.all(self.rel_err < self.tolerance))

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        extra = f" [{', '.join(self.flags)}]" if self.flags else ""
        return f"grad_check {verdict}: max rel err {self.max_err:.3e} (tol {self.tolerance:g}){extra}"


# a power of two near 1e-5: x +- step and the division are exact for most x
DEFAULT_STEP = 2.0 ** -17


def grad_check(f, point, step: float = DEFAULT_STEP, tolerance: float = 1e-6) -> GradCheckReport:
    """Compare reverse-mode gradient of scalar ``f`` with central differences.

    ``f`` receives either a :class:`DiffValue` or a plain array of the same
    shape as ``point``.  Error per coordinate is ``|ad - fd| / max(1, |fd|)``.
    """
    x0 = np.array(point, dtype=float)
    tape = Tape()
    x = tape.var(x0)
    y = f(x)
    if not isinstance(y, DiffValue):
        ad = np.zeros_like(x0)
    else:
        ad = tape.backward(y, [x])[0]
    fd = np.zeros_like(x0)
    flat = fd.reshape(-1)
    for i in range(x0.size):
        xp = x0.copy().reshape(-1)
        xm = x0.copy().reshape(-1)
        xp[i] += step
        xm[i] -= step
        flat[i] = (float(f(xp.reshape(x0.shape))) - float(f(xm.reshape(x0.shape)))) / (2 * step)
    rel = np.abs(ad - fd) / np.maximum(1.0, np.abs(fd))
    flags = []
    if tape.min_kink < step:
        flags.append("kink proximity")
    return GradCheckReport(ad=ad, fd=fd, rel_err=rel.reshape(-1), tolerance=tolerance, flags=flags)
