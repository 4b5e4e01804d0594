"""Satisfaction estimates on the hard-label product."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .policy import Policy
from .rollout import Task, TrainConfig, discrete_rollout

REVISIT_TOL = 1e-9


@dataclass
class SatisfactionReport:
    psat: float
    per_episode: list
    exact: list  # True where the verdict came from a detected lasso
    mean_return: float

    @property
    def approximate(self) -> bool:
        return not all(self.exact)


def _find_lasso(env_states: np.ndarray, qs: list, tol: float):
    """First (j, k) with product state at step k equal to the one at j < k."""
    seen: dict = {}
    for k, q in enumerate(qs):
        prev = seen.get(q)
        if prev:
            close = np.max(np.abs(env_states[prev] - env_states[k]), axis=1) <= tol
            if close.any():
                return prev[int(np.argmax(close))], k
        seen.setdefault(q, []).append(k)
    return None


def eval_satisfaction(task: Task, policy: Policy, params, cfg: TrainConfig, n_episodes: int = 1,
                      rng=None, max_steps: int | None = None, tol: float = REVISIT_TOL) -> SatisfactionReport:
    """Monte Carlo satisfaction probability under the policy's mean action.

    Each episode runs the discrete product.  When a product state repeats
    (within ``tol``), the run is ultimately periodic and the Büchi verdict is
    exact: accepted iff the cycle visits an accepting state.  Otherwise the
    episode scores the fraction of the last H/2 steps spent in accepting
    states and is marked approximate.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    H = cfg.horizon or task.env.spec.horizon
    steps = max_steps or 4 * H
    run = discrete_rollout(task, policy, params, cfg, rng, n_episodes, steps=steps)
    a = task.ldba
    scores, exact = [], []
    for i in range(n_episodes):
        qs = [q[i] for q in run.states]
        lasso = _find_lasso(run.env_states[:, i, :], qs, tol)
        if lasso is not None:
            j, k = lasso
            scores.append(1.0 if any(q in a.accepting for q in qs[j:k]) else 0.0)
            exact.append(True)
        else:
            tail = qs[len(qs) - H // 2:]
            scores.append(float(np.mean([q in a.accepting for q in tail])))
            exact.append(False)
    return SatisfactionReport(
        psat=float(np.mean(scores)),
        per_episode=scores,
        exact=exact,
        mean_return=float(np.mean(run.returns)),
    )
