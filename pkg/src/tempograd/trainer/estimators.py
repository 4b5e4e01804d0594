"""First-order (pathwise) and zeroth-order (score function) gradient estimates."""
from __future__ import annotations

import math

import numpy as np

from ..diff import Tape, ops
from ..diff.tape import DiffValue, value_of
from .policy import MlpPolicy, Policy, policy_heads
from ..product import greedy_eps_discrete
from .rollout import Task, TrainConfig, hard_labels, rollout

LOG_2PI = math.log(2 * math.pi)


def _vars(tape: Tape, params: dict) -> dict:
    return {k: tape.var(v) for k, v in params.items()}


def grad_first(task: Task, policy: Policy, params: dict, cfg: TrainConfig, rng, n=None, sigma: float = 0.0):
    """Mean over ``n`` rollouts of the exact return gradient.

    With ``sigma > 0`` each step's action is perturbed by reparameterized
    Gaussian noise of that scale.  Returns ``(grad dict, returns)``.
    """
    n = n or cfg.n_rollouts
    H = cfg.horizon or task.env.spec.horizon
    tape = Tape()
    pv = _vars(tape, params)
    noise = None
    if sigma > 0:
        noise = rng.standard_normal((H, n, _action_dim(task, policy))) * sigma
    G, _ = rollout(task, policy, pv, cfg, rng, n, noise=noise)
    J = ops.div(ops.sum(G), float(n))
    return _backward(tape, J, pv), np.asarray(value_of(G), dtype=float)


def grad_first_per_rollout(task: Task, policy: Policy, params: dict, cfg: TrainConfig, rng, n: int, sigma: float = 0.0):
    """Individual per-rollout gradients (each rollout gets its own copy of
    the parameters on one shared tape).  ``params`` hold either one setting
    (shape (adim,)) or one per rollout (shape (n, adim)).
    Returns ``(grads (n, adim), returns)``."""
    if isinstance(policy, MlpPolicy) or not all(np.ndim(v) in (1, 2) for v in params.values()):
        raise ValueError("per-rollout gradients need a constant policy")
    H = cfg.horizon or task.env.spec.horizon
    tape = Tape()
    pv = {}
    for k, v in params.items():
        v = np.asarray(v, dtype=float)
        if v.ndim == 2 and v.shape[0] != n:
            raise ValueError(f"{k}: expected {n} rows, got {v.shape[0]}")
        pv[k] = tape.var(np.broadcast_to(v, (n, v.shape[-1])).copy())
    noise = None
    if sigma > 0:
        noise = rng.standard_normal((H, n, _action_dim(task, policy))) * sigma
    G, _ = rollout(task, policy, pv, cfg, rng, n, noise=noise)
    return _backward(tape, ops.sum(G), pv), np.asarray(value_of(G), dtype=float)


def _backward(tape: Tape, y, pv: dict) -> dict:
    # a return that never touched the parameters is a plain number
    if not isinstance(y, DiffValue):
        return {k: np.zeros_like(v.value) for k, v in pv.items()}
    return dict(zip(pv, tape.backward(y, list(pv.values()))))


def _action_dim(task, policy):
    return task.env.spec.action_dim


def log_prob(policy: Policy, params, states, beliefs, actions, eps_idx=None):
    """Sum of Gaussian log densities (plus eps-target log probabilities)."""
    mean, head = policy_heads(policy, params, states, beliefs)
    log_std = policy.log_std(params)
    std = ops.exp(log_std)
    total = None
    for i, m in enumerate(mean):
        z = ops.div(ops.sub(actions[..., i], m), ops.take(std, i))
        lp = ops.sub(ops.mul(-0.5, ops.mul(z, z)), ops.add(ops.take(log_std, i), 0.5 * LOG_2PI))
        total = lp if total is None else ops.add(total, lp)
    if eps_idx is not None and head is not None:
        onehot = np.zeros(np.shape(value_of(head)))
        np.put_along_axis(onehot, eps_idx[..., None], 1.0, axis=-1)
        total = ops.add(total, ops.log(ops.add(ops.dot(head, onehot), 1e-12)))
    return total


def grad_zeroth(task: Task, policy: Policy, params: dict, cfg: TrainConfig, rng, n=None, baseline=None):
    """Score-function estimate ``mean_i (G_i - b) sum_t grad log pi(a_t|s_t)``.

    ``b`` is the batch mean return when ``baseline`` (default from ``cfg``)
    is on and 0 otherwise.  Returns ``(grad dict, returns)``.
    """
    n = n or cfg.n_rollouts
    H = cfg.horizon or task.env.spec.horizon
    baseline = cfg.baseline if baseline is None else baseline
    adim = _action_dim(task, policy)
    std = np.exp(np.asarray(value_of(policy.log_std(params)), dtype=float))
    noise = rng.standard_normal((H, n, adim)) * std
    has_head = task.ldba.has_eps and getattr(policy, "eps_head", False)
    eps_u = rng.uniform(size=(H, n)) if has_head else None
    _, rec = rollout(task, policy, params, cfg, rng, n, noise=noise, record=True, eps_sample=eps_u)
    G = rec.returns
    if cfg.reward == "discrete":
        G = _discrete_returns(task, rec, cfg, sampled_eps=has_head)
    w = G - (G.mean() if baseline else 0.0)
    if not np.any(w):
        return {k: np.zeros_like(v) for k, v in params.items()}, G
    # re-evaluate log-likelihoods of the recorded actions on a fresh tape
    tape = Tape()
    pv = _vars(tape, params)
    flat_states = tuple(rec.states[:-1, :, j].reshape(-1) for j in range(rec.states.shape[-1]))
    flat_q = rec.beliefs[:-1].reshape(H * n, -1)
    flat_a = rec.actions.reshape(H * n, adim)
    eps_idx = None
    if has_head:
        eps_idx = np.argmax(rec.eps, axis=-1).reshape(-1)
    lp = log_prob(policy, pv, flat_states, flat_q, flat_a, eps_idx)
    weights = np.broadcast_to(w[None, :], (H, n)).reshape(-1) / n
    surrogate = ops.dot(lp, weights) if np.ndim(value_of(lp)) else ops.mul(lp, float(weights.sum()))
    grads = tape.backward(surrogate, [pv[k] for k in params])
    return dict(zip(params, grads)), G


def _discrete_returns(task: Task, rec, cfg: TrainConfig, sampled_eps: bool = False):
    """Hard-label product return along recorded environment trajectories."""
    a = task.ldba
    pr = cfg.params
    n = rec.states.shape[1]
    feats = task.env.spec.features
    out = np.zeros(n)
    for i in range(n):
        q = a.initial
        G, disc = 0.0, 1.0
        for t in range(rec.horizon):
            s = tuple(np.array([rec.states[t, i, j]]) for j in range(len(feats)))
            label = hard_labels(task, task.env.signals(s), 1)[0]
            if a.eps_edges[q]:
                j = int(np.argmax(rec.eps[t, i])) if sampled_eps else greedy_eps_discrete(a, q, label)
                if j is not None and j in a.eps_edges[q]:
                    q = j
            q = a.step(q, label)
            acc = q in a.accepting
            G += disc * ((1.0 - pr.beta) if acc else 0.0)
            disc *= pr.beta if acc else pr.gamma
        out[i] = G
    return out
