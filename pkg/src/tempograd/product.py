"""Discrete and soft-label products of an environment with an LDBA.

The soft path replaces the one-hot automaton state by a belief vector ``q``:
atomic propositions hold with probability ``sigmoid(g(s) / tau)``, edge guards
are evaluated by Shannon expansion under AP independence, and beliefs move by
a state-dependent stochastic matrix.  All functions work on a leading batch
axis and accept either plain arrays or tape values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iproduct

import numpy as np

from .automata.guard import Guard
from .automata.ldba import Ldba
from .diff import ops
from .diff.tape import DiffValue, value_of
from .ltl import AtomicProp

RENORM_TOL = 1e-9
# exponent of the guard probability used by the greedy eps policy
GREEDY_POWER = 16
MASS_TOL = 1e-6


class BeliefError(ValueError):
    pass


class UnboundSignal(KeyError):
    pass


@dataclass(frozen=True)
class RewardParams:
    gamma: float = 0.999

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")

    @property
    def beta(self) -> float:
        return 1.0 - math.sqrt(1.0 - self.gamma)


# ------------------------------------------------------------------ labels

def ap_margin(ap: AtomicProp, signals: dict):
    if ap.signal not in signals:
        raise UnboundSignal(f"signal {ap.signal!r} of AP {ap.name!r} is not provided by the environment")
    v = signals[ap.signal]
    if ap.comparator == ">":
        return ops.sub(v, ap.threshold)
    return ops.sub(ap.threshold, v)


def pr_ap(ap: AtomicProp, signals: dict, tau: float = 1.0):
    """Soft label probability h(g(s) / tau)."""
    if tau <= 0:
        raise ValueError("temperature must be positive")
    return ops.sigmoid(ops.div(ap_margin(ap, signals), tau))


def tau_for(tau, name: str) -> float:
    """``tau`` is a float or a dict of per-AP overrides with ``"*"`` as default."""
    if isinstance(tau, dict):
        return float(tau.get(name, tau.get("*", 1.0)))
    return float(tau)


def hard_label(aps, signals: dict) -> frozenset:
    """Names of the atoms with g(s) > 0 (unbatched signals)."""
    return frozenset(a.name for a in aps if float(value_of(ap_margin(a, signals))) > 0)


def guard_cubes(g: Guard, order) -> list[dict]:
    """Disjoint cubes ``{name: bool}`` whose union is ``g`` (Shannon expansion)."""
    support = [n for n in order if n in g.support()]
    extra = sorted(g.support() - set(order))
    if extra:
        raise KeyError(f"AP not in automaton AP set: {extra}")

    def expand(h: Guard, i: int, fixed: dict):
        if h.op == "t":
            return [dict(fixed)]
        if h.op == "f":
            return []
        while support[i] not in h.support():
            i += 1
        n = support[i]
        return expand(h.restrict(n, True), i + 1, {**fixed, n: True}) + expand(
            h.restrict(n, False), i + 1, {**fixed, n: False}
        )

    return expand(g, 0, {})


def pr_guard(g: Guard, ap_probs: dict):
    """Probability that an independent random label satisfies ``g``;
    ``ap_probs`` maps AP name -> probability (array or tape value)."""
    total = None
    for cube in guard_cubes(g, list(ap_probs)):
        term = None
        for n, v in cube.items():
            f = ap_probs[n] if v else ops.sub(1.0, ap_probs[n])
            term = f if term is None else ops.mul(term, f)
        term = 1.0 if term is None else term
        total = term if total is None else ops.add(total, term)
    return 0.0 if total is None else total


# ------------------------------------------------------------------ compiled layer

class ProductLayer:
    """Matrices for one automaton, shared by all rollouts.

    Edges are flattened to a list; each edge's guard is a set of disjoint
    cubes.  A cube's probability is ``prod_k (A[c,k] * p_k + B[c,k])`` with
    ``(A, B) = (1, 0)`` for a positive literal, ``(-1, 1)`` for a negative
    one and ``(0, 1)`` for an absent AP.
    """

    def __init__(self, a: Ldba, aps):
        self.a = a
        by_name = {x.name: x for x in aps}
        missing = [n for n in a.ap_set if n not in by_name]
        if missing:
            raise KeyError(f"no AtomicProp definition for {missing}")
        self.aps = [by_name[n] for n in a.ap_set]
        n, k = a.n_states, len(a.ap_set)
        src, dst, cube_rows, cube_edge = [], [], [], []
        for q in range(n):
            for g, t in a.edges[q]:
                e = len(src)
                src.append(q)
                dst.append(t)
                for cube in guard_cubes(g, a.ap_set):
                    cube_rows.append(cube)
                    cube_edge.append(e)
        self.src = np.array(src, dtype=int)
        self.dst = np.array(dst, dtype=int)
        n_edges, n_cubes = len(src), len(cube_rows)
        self.A = np.zeros((n_cubes, k))
        self.B = np.ones((n_cubes, k))
        for c, cube in enumerate(cube_rows):
            for name, v in cube.items():
                j = a.ap_set.index(name)
                self.A[c, j], self.B[c, j] = (1.0, 0.0) if v else (-1.0, 1.0)
        # only columns some cube depends on need multiplying
        self.active = [j for j in range(k) if np.any(self.A[:, j] != 0)]
        self.cube_to_edge = np.zeros((n_edges, n_cubes))
        self.cube_to_edge[cube_edge, np.arange(n_cubes)] = 1.0
        self.incidence = np.zeros((n, n_edges))
        self.incidence[self.dst, np.arange(n_edges)] = 1.0
        self.eps = np.zeros((n, n))
        for q in range(n):
            for t in a.eps_edges[q]:
                self.eps[q, t] = 1.0
        self.accepting = np.zeros(n)
        self.accepting[sorted(a.accepting)] = 1.0
        self.signal_names = sorted({x.signal for x in self.aps})
        self.sign = np.zeros((k, len(self.signal_names)))
        self.offset = np.zeros(k)
        for j, x in enumerate(self.aps):
            c = self.signal_names.index(x.signal)
            self.sign[j, c] = 1.0 if x.comparator == ">" else -1.0
            self.offset[j] = -x.threshold if x.comparator == ">" else x.threshold

    # -- labels
    def margins(self, signals: dict):
        """g(s) for every AP, shape (..., |AP|), as one affine map of the signals."""
        for name in self.signal_names:
            if name not in signals:
                raise UnboundSignal(f"signal {name!r} is not provided by the environment")
        sig = ops.stack([signals[n] for n in self.signal_names], axis=-1)
        return ops.add(ops.matvec(self.sign, sig), self.offset)

    def ap_probs(self, signals: dict, tau=1.0, hard: bool = False):
        """Stacked AP probabilities, shape (..., |AP|)."""
        if not self.aps:
            return np.zeros((0,))
        g = self.margins(signals)
        if hard:
            return (np.asarray(value_of(g)) > 0).astype(float)
        inv = np.array([1.0 / tau_for(tau, x.name) for x in self.aps])
        if np.any(inv <= 0) or not np.all(np.isfinite(inv)):
            raise ValueError("temperature must be positive")
        return ops.sigmoid(ops.mul(g, inv))

    def edge_probs(self, p):
        """Per-edge guard probabilities, shape (..., |E|)."""
        pv = value_of(p)
        batch = np.shape(pv)[:-1]
        if not self.active:
            cube = np.ones(batch + (self.A.shape[0],))
        else:
            act = self.active
            pa = ops.take(p, (Ellipsis, None, act))
            cube = ops.prod(ops.add(ops.mul(pa, self.A[:, act]), self.B[:, act]), axis=-1)
        return ops.matvec(self.cube_to_edge, cube)

    # -- belief updates
    def step_label(self, q, p, pe=None):
        if pe is None:
            pe = self.edge_probs(p)
        flow = ops.mul(ops.take(q, (Ellipsis, self.src)), pe)
        return check_belief(ops.matvec(self.incidence, flow))

    def step_eps(self, q, e):
        moved = ops.mul(ops.matvec(self.eps.T, q), e)
        blocked = ops.sub(ops.sum(e, axis=-1, keepdims=True), ops.matvec(self.eps, e))
        return check_belief(ops.add(moved, ops.mul(q, blocked)))

    def reward_discount(self, q, params: RewardParams):
        m_b = ops.dot(q, self.accepting)
        m_rest = ops.dot(q, 1.0 - self.accepting)
        beta = params.beta
        return ops.mul(1.0 - beta, m_b), ops.add(ops.mul(beta, m_b), ops.mul(params.gamma, m_rest))

    def initial_belief(self, batch=()):
        q = np.zeros(tuple(batch) + (self.a.n_states,))
        q[..., self.a.initial] = 1.0
        return q

    def greedy_eps(self, p, power: int = None, pe=None):
        """Soft jump attempt for policies without an eps head.

        Target ``j`` gets ``Pr(self-loop guard of j)**power``; leftover mass
        attempts the initial state, which is never an eps target, so it stays.
        The power keeps jumps away from label thresholds, where jumped mass
        would likely be rejected on the very next label; it is exact (0 or 1)
        for hard labels."""
        power = GREEDY_POWER if power is None else power
        n = self.a.n_states
        targets = self.a.eps_targets()
        pv = value_of(p)
        batch = np.shape(pv)[:-1]
        if not targets:
            e = np.zeros(batch + (n,))
            e[..., self.a.initial] = 1.0
            return e
        if pe is None:
            pe = self.edge_probs(p)
        cols = []
        for j in targets:
            loops = [i for i in range(len(self.src)) if self.src[i] == j and self.dst[i] == j]
            if loops:
                cols.append(ops.power(ops.take(pe, (Ellipsis, loops[0])), power))
            else:
                cols.append(np.zeros(batch))
        want = ops.stack(cols, axis=-1)
        scale = ops.maximum(1.0, ops.sum(want, axis=-1, keepdims=True))
        want = ops.div(want, scale)
        place = np.zeros((n, len(targets)))
        place[targets, np.arange(len(targets))] = 1.0
        rest = np.zeros(n)
        rest[self.a.initial] = 1.0
        return ops.add(ops.matvec(place, want), ops.mul(ops.sub(1.0, ops.sum(want, axis=-1, keepdims=True)), rest))


_layers: dict = {}


def layer_for(a: Ldba, aps) -> ProductLayer:
    key = (id(a), tuple(sorted((x.name, x.signal, x.comparator, x.threshold) for x in aps)))
    hit = _layers.get(key)
    if hit is None or hit.a is not a:
        hit = ProductLayer(a, aps)
        _layers[key] = hit
    return hit


def check_belief(q):
    """Raise on mass deviation above 1e-6; renormalize above 1e-9."""
    qv = value_of(q)
    mass = np.sum(qv, axis=-1, keepdims=True)
    dev = np.abs(mass - 1.0)
    if np.any(dev > MASS_TOL):
        raise BeliefError(f"belief mass deviates from 1 by {float(np.max(dev)):.3e}")
    if np.any(qv < -MASS_TOL):
        raise BeliefError("negative belief entry")
    if np.any(dev > RENORM_TOL):
        return ops.div(q, ops.sum(q, axis=-1, keepdims=True))
    return q


# ------------------------------------------------------------------ functional API

def step_label(layer: ProductLayer, signals: dict, q, tau=1.0, hard=False):
    check_belief(q)
    return layer.step_label(q, layer.ap_probs(signals, tau, hard))


def step_eps(layer: ProductLayer, q, e):
    check_belief(q)
    ev = value_of(e)
    if np.any(np.abs(np.sum(ev, axis=-1) - 1.0) > MASS_TOL) or np.any(ev < -MASS_TOL):
        raise BeliefError("eps action is not a probability vector")
    return layer.step_eps(q, e)


def step_product(env, layer: ProductLayer, state, q, action, e, tau=1.0, hard=False):
    """One soft product step: eps move, label move on the pre-step state, env step."""
    q1 = step_eps(layer, q, e)
    q2 = step_label(layer, env.signals(state), q1, tau, hard)
    return env.step(state, action), q2


def step_discrete(env, a: Ldba, aps, state, q: int, action, eps_choice=None):
    """Hard-label product step on an unbatched state."""
    if eps_choice is not None and eps_choice in a.eps_edges[q]:
        q = eps_choice
    label = hard_label(aps, env.signals(state))
    return env.step(state, action), a.step(q, label)


def greedy_eps_discrete(a: Ldba, q: int, label: frozenset):
    """Jump to the first epsilon target whose self-loop guard holds now."""
    for t in sorted(a.eps_edges[q]):
        if a.step(t, label) == t:
            return t
    return None


def reward_discount(layer: ProductLayer, q, params: RewardParams):
    return layer.reward_discount(q, params)


def discrete_reward(a: Ldba, q: int, params: RewardParams):
    if q in a.accepting:
        return 1.0 - params.beta, params.beta
    return 0.0, params.gamma


def label_distribution(p, names):
    """Independent-AP label probabilities (for small AP sets; testing aid)."""
    pv = np.asarray(value_of(p))
    out = {}
    for bits in iproduct((False, True), repeat=len(names)):
        pr = np.ones(pv.shape[:-1])
        for j, b in enumerate(bits):
            pr = pr * (pv[..., j] if b else 1 - pv[..., j])
        out[frozenset(n for n, b in zip(names, bits) if b)] = pr
    return out
