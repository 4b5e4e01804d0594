"""Policies over product states ``(s, q)``.

Parameters live in an ordered dict of numpy arrays; ``forward`` takes the same
dict with entries optionally replaced by tape variables, so one code path
serves plain evaluation, backprop and score-function gradients.
"""
from __future__ import annotations

import math

import numpy as np

from ..diff import ops
from ..diff.tape import value_of


class Policy:
    kind = "base"

    def init_params(self, rng: np.random.Generator) -> dict:
        raise NotImplementedError

    def mean_action(self, params, state, q):
        """List of per-dimension mean actions, each shaped like the batch."""
        raise NotImplementedError

    def eps_action(self, params, state, q):
        """Softmax over automaton states, or ``None`` without an eps head."""
        return None

    def log_std(self, params):
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind}


class ConstantPolicy(Policy):
    """Open-loop action ``theta`` (the parking study's braking deceleration)."""

    kind = "constant"

    def __init__(self, init, sigma: float = 0.5):
        self.init = np.atleast_1d(np.array(init, dtype=float))
        self.sigma = float(sigma)

    def init_params(self, rng=None):
        return {"theta": self.init.copy()}

    def mean_action(self, params, state, q):
        theta = params["theta"]
        batch = np.shape(value_of(state[0]))
        return [ops.add(ops.take(theta, (Ellipsis, i)), np.zeros(batch)) for i in range(len(self.init))]

    def log_std(self, params):
        return np.full(len(self.init), math.log(self.sigma))

    def describe(self):
        return {"kind": self.kind, "init": self.init.tolist(), "sigma": self.sigma}


class MlpPolicy(Policy):
    """tanh MLP on ``[state features, belief]`` with a tanh-squashed action
    head, an optional softmax eps head and a state-independent log std."""

    kind = "mlp"

    def __init__(self, obs_dim, n_states, low, high, hidden=(64, 64), eps_head=False, sigma=0.5, obs_scale=None):
        self.obs_dim = int(obs_dim)
        self.n_states = int(n_states)
        self.low = np.array(low, dtype=float)
        self.high = np.array(high, dtype=float)
        self.hidden = tuple(int(h) for h in hidden)
        self.eps_head = bool(eps_head)
        self.sigma = float(sigma)
        self.obs_scale = np.ones(self.obs_dim) if obs_scale is None else np.array(obs_scale, dtype=float)

    @property
    def action_dim(self):
        return len(self.low)

    def init_params(self, rng):
        sizes = (self.obs_dim + self.n_states,) + self.hidden
        p = {}
        for i in range(len(self.hidden)):
            fan_in = sizes[i]
            p[f"W{i}"] = rng.normal(0.0, 1.0 / math.sqrt(fan_in), (sizes[i + 1], fan_in))
            p[f"b{i}"] = np.zeros(sizes[i + 1])
        # small output layer keeps initial actions near the centre of the box
        p["Wa"] = rng.normal(0.0, 0.01, (self.action_dim, sizes[-1]))
        p["ba"] = np.zeros(self.action_dim)
        if self.eps_head:
            p["We"] = rng.normal(0.0, 0.01, (self.n_states, sizes[-1]))
            p["be"] = np.zeros(self.n_states)
        p["log_std"] = np.full(self.action_dim, math.log(self.sigma))
        return p

    def _features(self, params, state, q):
        feats = [ops.div(f, s) for f, s in zip(state, self.obs_scale)]
        x = ops.stack(feats, axis=-1)
        h = _concat(x, q)
        for i in range(len(self.hidden)):
            h = ops.tanh(ops.add(ops.matvec(params[f"W{i}"], h), params[f"b{i}"]))
        return h

    def _heads(self, params, state, q):
        h = self._features(params, state, q)
        centre = (self.high + self.low) / 2
        half = (self.high - self.low) / 2
        u = ops.add(ops.mul(ops.tanh(ops.add(ops.matvec(params["Wa"], h), params["ba"])), half), centre)
        eps = None
        if self.eps_head:
            eps = ops.softmax(ops.add(ops.matvec(params["We"], h), params["be"]), axis=-1)
        return u, eps

    def mean_action(self, params, state, q):
        u, _ = self._heads(params, state, q)
        return [ops.take(u, (Ellipsis, i)) for i in range(self.action_dim)]

    def heads(self, params, state, q):
        """Mean actions and eps distribution from one forward pass."""
        u, eps = self._heads(params, state, q)
        return [ops.take(u, (Ellipsis, i)) for i in range(self.action_dim)], eps

    def eps_action(self, params, state, q):
        return self._heads(params, state, q)[1]

    def log_std(self, params):
        return params["log_std"]

    def describe(self):
        return {
            "kind": self.kind,
            "obs_dim": self.obs_dim,
            "n_states": self.n_states,
            "low": self.low.tolist(),
            "high": self.high.tolist(),
            "hidden": list(self.hidden),
            "eps_head": self.eps_head,
            "sigma": self.sigma,
            "obs_scale": self.obs_scale.tolist(),
        }


def _concat(x, q):
    """Concatenate along the last axis via two placement matrices."""
    xv, qv = value_of(x), value_of(q)
    nx, nq = np.shape(xv)[-1], np.shape(qv)[-1]
    px = np.zeros((nx + nq, nx))
    px[np.arange(nx), np.arange(nx)] = 1.0
    pq = np.zeros((nx + nq, nq))
    pq[nx + np.arange(nq), np.arange(nq)] = 1.0
    if np.ndim(qv) < np.ndim(xv):
        q = ops.add(q, np.zeros(np.shape(xv)[:-1] + (nq,)))
    return ops.add(ops.matvec(px, x), ops.matvec(pq, q))


def policy_heads(policy: Policy, params, state, q):
    if isinstance(policy, MlpPolicy):
        return policy.heads(params, state, q)
    return policy.mean_action(params, state, q), policy.eps_action(params, state, q)


def build_policy(desc: dict) -> Policy:
    kind = desc.get("kind")
    if kind == "constant":
        return ConstantPolicy(desc["init"], desc.get("sigma", 0.5))
    if kind == "mlp":
        return MlpPolicy(
            desc["obs_dim"],
            desc["n_states"],
            desc["low"],
            desc["high"],
            desc.get("hidden", (64, 64)),
            desc.get("eps_head", False),
            desc.get("sigma", 0.5),
            desc.get("obs_scale"),
        )
    raise ValueError(f"unknown policy kind {kind!r}")


def n_params(params: dict) -> int:
    return int(sum(np.size(v) for v in params.values()))


def flatten(params: dict) -> np.ndarray:
    return np.concatenate([np.ravel(value_of(v)) for v in params.values()]) if params else np.zeros(0)


def unflatten(template: dict, flat) -> dict:
    out = {}
    i = 0
    for k, v in template.items():
        n = np.size(v)
        out[k] = np.array(flat[i:i + n], dtype=float).reshape(np.shape(v))
        i += n
    if i != len(flat):
        raise ValueError(f"parameter vector has {len(flat)} entries, expected {i}")
    return out
