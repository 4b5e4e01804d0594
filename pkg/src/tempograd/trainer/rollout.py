"""Episode loops on the soft and the discrete product."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..automata import Ldba, translate_fragment
from ..diff import ops
from ..diff.tape import value_of
from ..envs import Env
from ..ltl import AtomicProp, atoms, parse_ap, parse_ltl
from ..product import ProductLayer, RewardParams, greedy_eps_discrete, layer_for
from .policy import Policy, policy_heads


class RolloutError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    gamma: float = 0.999
    tau: object = 1.0
    horizon: int | None = None
    iterations: int = 200
    n_rollouts: int = 10
    lr: float = 0.05
    optimizer: str = "sgd"
    seed: int = 0
    estimator: str = "first"
    sigma: float = 0.5
    first_noise: float = 0.0
    baseline: bool = True
    reward: str = "soft"

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.estimator not in ("first", "zeroth"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.reward not in ("soft", "discrete"):
            raise ValueError(f"unknown reward type {self.reward!r}")
        for k in ("n_rollouts", "lr", "sigma"):
            if getattr(self, k) <= 0:
                raise ValueError(f"{k} must be positive")
        if self.first_noise < 0:
            raise ValueError("first_noise must be non-negative")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")

    @property
    def params(self) -> RewardParams:
        return RewardParams(self.gamma)


@dataclass
class Task:
    """An environment paired with an automaton and the AP definitions."""

    env: Env
    ldba: Ldba
    aps: list
    layer: ProductLayer = field(init=False)

    def __post_init__(self):
        self.layer = layer_for(self.ldba, self.aps)
        unbound = sorted({a.signal for a in self.aps} - set(self.env.spec.signals))
        if unbound:
            raise KeyError(f"formula uses signals the environment does not provide: {unbound}")

    @classmethod
    def from_formula(cls, env: Env, text: str) -> "Task":
        f = parse_ltl(text)
        return cls(env, translate_fragment(f), atoms(f))

    @classmethod
    def from_ldba(cls, env: Env, a: Ldba) -> "Task":
        return cls(env, a, [parse_ap(n) for n in a.ap_set])


@dataclass
class RolloutRecord:
    states: np.ndarray  # (H+1, N, state_dim)
    beliefs: np.ndarray  # (H+1, N, |Q|)
    actions: np.ndarray  # (H, N, action_dim)
    eps: np.ndarray | None  # (H, N, |Q|)
    rewards: np.ndarray  # (H, N)
    discounts: np.ndarray  # (H, N)
    returns: np.ndarray  # (N,)
    horizon: int


def _values(xs):
    return np.stack([np.asarray(value_of(x), dtype=float) for x in xs], axis=-1)


def rollout(task: Task, policy: Policy, params, cfg: TrainConfig, rng, n: int,
            noise=None, record: bool = False, eps_sample=None):
    """Soft-product episode batch (Algorithm 1 inner loop).

    ``params`` may hold tape variables, in which case the returns are tape
    values.  ``noise`` (H, N, action_dim) is added to the mean action.  ``eps_sample`` (H, N) of uniforms switches the eps head
    to sampled one-hot targets.  Returns ``(G, record or None)``.
    """
    env, layer = task.env, task.layer
    H = cfg.horizon or env.spec.horizon
    pr = cfg.params
    has_eps = task.ldba.has_eps
    s = env.initial(n, rng)
    q = layer.initial_belief((n,))
    G = np.zeros(n)
    disc = np.ones(n)
    rec = {"s": [], "q": [], "a": [], "e": [], "r": [], "d": []} if record else None
    for t in range(H):
        if record:
            rec["s"].append(_values(s))
            rec["q"].append(np.asarray(value_of(q)))
        mean, head = policy_heads(policy, params, s, q)
        if noise is not None:
            mean = [ops.add(m, noise[t, :, i]) for i, m in enumerate(mean)]
        p = layer.ap_probs(env.signals(s), cfg.tau)
        pe = layer.edge_probs(p)
        e = None
        if has_eps:
            if head is None:
                e = layer.greedy_eps(p, pe=pe)
            elif eps_sample is not None:
                e = _sample_onehot(value_of(head), eps_sample[t])
            else:
                e = head
            q = layer.step_eps(q, e)
        q = layer.step_label(q, p, pe)
        s = env.step(s, mean)
        r, d = layer.reward_discount(q, pr)
        G = ops.add(G, ops.mul(disc, r))
        disc = ops.mul(disc, d)
        if not np.all(np.isfinite(value_of(G))) or not all(np.all(np.isfinite(value_of(x))) for x in s):
            raise RolloutError(f"non-finite value at step {t}")
        if record:
            rec["a"].append(_values(mean))
            rec["e"].append(None if e is None else np.asarray(value_of(e)))
            rec["r"].append(np.asarray(value_of(r)))
            rec["d"].append(np.asarray(value_of(d)))
    if not record:
        return G, None
    rec["s"].append(_values(s))
    rec["q"].append(np.asarray(value_of(q)))
    out = RolloutRecord(
        states=np.array(rec["s"]),
        beliefs=np.array(rec["q"]),
        actions=np.array(rec["a"]),
        eps=None if not has_eps else np.array(rec["e"]),
        rewards=np.array(rec["r"]),
        discounts=np.array(rec["d"]),
        returns=np.array(value_of(G), dtype=float),
        horizon=H,
    )
    return G, out


def _sample_onehot(probs, u):
    cdf = np.cumsum(probs, axis=-1)
    idx = np.minimum((cdf < u[:, None]).sum(axis=-1), probs.shape[-1] - 1)
    out = np.zeros_like(probs)
    out[np.arange(len(idx)), idx] = 1.0
    return out


# ------------------------------------------------------------------ discrete product

@dataclass
class DiscreteRun:
    labels: list
    states: list  # automaton state before each step, then the final one
    returns: np.ndarray
    env_states: np.ndarray


def hard_labels(task: Task, signals: dict, n: int) -> list:
    margins = []
    for ap in task.layer.aps:
        v = np.asarray(value_of(signals[ap.signal]), dtype=float)
        g = v - ap.threshold if ap.comparator == ">" else ap.threshold - v
        margins.append(np.broadcast_to(g, (n,)) > 0)
    names = task.layer.a.ap_set
    return [frozenset(nm for nm, m in zip(names, col) if m) for col in zip(*margins)] if margins else [frozenset()] * n


def discrete_eps_choice(task: Task, policy: Policy, head, q: int, label: frozenset, i: int):
    a = task.ldba
    if not a.eps_edges[q]:
        return None
    if head is None:
        return greedy_eps_discrete(a, q, label)
    return int(np.argmax(np.asarray(value_of(head))[i]))


def discrete_rollout(task: Task, policy: Policy, params, cfg: TrainConfig, rng, n: int, steps: int | None = None):
    """Hard-label product runs with the policy's mean action.

    Returns per-episode automaton state sequences, label sequences, env
    state arrays (steps+1, N, d) and discrete returns over the horizon.
    """
    env, a = task.env, task.ldba
    H = cfg.horizon or env.spec.horizon
    steps = H if steps is None else steps
    pr = cfg.params
    s = env.initial(n, rng)
    qs = [a.initial] * n
    q_hist = [list(qs)]
    lab_hist = []
    s_hist = [_values(s)]
    G = np.zeros(n)
    disc = np.ones(n)
    for t in range(steps):
        onehot = np.zeros((n, a.n_states))
        onehot[np.arange(n), qs] = 1.0
        mean, head = policy_heads(policy, params, s, onehot)
        labels = hard_labels(task, env.signals(s), n)
        new = []
        for i in range(n):
            q = qs[i]
            j = discrete_eps_choice(task, policy, head, q, labels[i], i)
            if j is not None and j in a.eps_edges[q]:
                q = j
            new.append(a.step(q, labels[i]))
        qs = new
        s = env.step(s, [np.asarray(value_of(m), dtype=float) for m in mean])
        if t < H:
            acc = np.array([q in a.accepting for q in qs])
            r = np.where(acc, 1.0 - pr.beta, 0.0)
            d = np.where(acc, pr.beta, pr.gamma)
            G = G + disc * r
            disc = disc * d
        lab_hist.append(labels)
        q_hist.append(list(qs))
        s_hist.append(_values(s))
    return DiscreteRun(labels=lab_hist, states=q_hist, returns=G, env_states=np.array(s_hist))
