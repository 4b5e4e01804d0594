"""Compositional LTL -> LDBA translation for a conjunctive fragment.

Accepted top-level conjuncts (``b`` propositional):

* ``b``                      holds at the first position
* ``G b``                    safety
* ``G F b``                  repetition
* ``F G b``                  persistence (the only source of epsilon edges)
* ``b1 U b2``                until
* ``F(b1 & F(b2 & ...))``    sequencing, including plain ``F b``

The product tracks one phase per co-safety conjunct, a single flag for the
persistence jump, and the repetition monitors plus a round-robin counter.
Repetition monitors are only tracked once every other obligation is settled;
any state from which acceptance is impossible collapses into one sink.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..ltl import LtlFormula, atoms, is_propositional, to_text
from . import guard as G
from .ldba import Ldba, make_ldba, validate_ldba

DEFAULT_AP_LIMIT = 16


class FragmentError(ValueError):
    """Formula outside the supported fragment; ``subformula`` is the culprit."""

    def __init__(self, message: str, subformula: LtlFormula | None = None):
        text = f"{message}: {to_text(subformula)}" if subformula is not None else message
        super().__init__(text)
        self.subformula = subformula


def to_guard(f: LtlFormula) -> G.Guard:
    k = f.kind
    if k == "true":
        return G.TRUE
    if k == "false":
        return G.FALSE
    if k == "ap":
        return G.ap(f.ap.name)
    if k == "not":
        return G.neg(to_guard(f.children[0]))
    if k == "and":
        return G.conj(to_guard(c) for c in f.children)
    if k == "or":
        return G.disj(to_guard(c) for c in f.children)
    raise FragmentError("temporal operator inside a propositional position", f)


def _conjuncts(f: LtlFormula):
    if f.kind == "and":
        return _conjuncts(f.children[0]) + _conjuncts(f.children[1])
    return [f]


def _sequence(f: LtlFormula) -> list[G.Guard]:
    """``F(b1 & F(b2 & ...))`` -> [b1, b2, ...]."""
    props, rest = [], []
    for c in _conjuncts(f.children[0]):
        (props if is_propositional(c) else rest).append(c)
    head = G.conj(to_guard(p) for p in props)
    if not rest:
        return [head]
    if len(rest) == 1 and rest[0].kind == "eventually":
        return [head] + _sequence(rest[0])
    raise FragmentError("unsupported nesting inside eventually", f)


@dataclass
class _Parts:
    init: G.Guard = G.TRUE
    safety: G.Guard = G.TRUE
    persist: G.Guard | None = None
    untils: tuple = ()
    seqs: tuple = ()
    reps: tuple = ()


def _classify(f: LtlFormula) -> _Parts:
    parts = _Parts()
    untils, seqs, reps, persist = [], [], [], []
    for c in _conjuncts(f):
        if c.kind == "true":
            continue
        if is_propositional(c):
            parts.init = G.conj([parts.init, to_guard(c)])
        elif c.kind == "always":
            inner = c.children[0]
            if is_propositional(inner):
                parts.safety = G.conj([parts.safety, to_guard(inner)])
            elif inner.kind == "eventually" and is_propositional(inner.children[0]):
                reps.append(to_guard(inner.children[0]))
            else:
                raise FragmentError("formula outside fragment", c)
        elif c.kind == "eventually":
            inner = c.children[0]
            if inner.kind == "always" and is_propositional(inner.children[0]):
                persist.append(to_guard(inner.children[0]))
            else:
                seqs.append(tuple(_sequence(c)))
        elif c.kind == "until" and all(is_propositional(x) for x in c.children):
            untils.append((to_guard(c.children[0]), to_guard(c.children[1])))
        else:
            raise FragmentError("formula outside fragment", c)
    parts.untils = tuple(untils)
    parts.seqs = tuple(seqs)
    parts.reps = tuple(reps)
    # FG a & FG b == FG (a & b): one jump settles every persistence conjunct
    parts.persist = G.conj(persist) if persist else None
    return parts


SINK = "sink"


class _Product:
    def __init__(self, parts: _Parts):
        self.p = parts
        self.has_init = parts.init.op != "t"

    def initial(self):
        phases = (0 if self.has_init else 1,) + (0,) * len(self.p.untils) + (0,) * len(self.p.seqs)
        return self._normalize(phases, False, (), 0)

    def ready(self, phases, jumped):
        if self.has_init and phases[0] == 0:
            return False
        k = 1
        for _ in self.p.untils:
            if phases[k] != 1:
                return False
            k += 1
        for seq in self.p.seqs:
            if phases[k] != len(seq):
                return False
            k += 1
        return self.p.persist is None or jumped

    def _normalize(self, phases, jumped, reps, ctr):
        if not self.ready(phases, jumped):
            return (phases, jumped, (False,) * len(self.p.reps), 0)
        return (phases, jumped, reps or (False,) * len(self.p.reps), ctr)

    def accepting(self, state):
        if state == SINK:
            return False
        phases, jumped, reps, ctr = state
        if not self.ready(phases, jumped):
            return False
        return not reps or (ctr == 0 and reps[0])

    def relevant(self, state):
        """Guards whose truth decides the successor of ``state``."""
        if state == SINK:
            return []
        phases, jumped, reps, ctr = state
        out = [self.p.safety]
        if jumped and self.p.persist is not None:
            out.append(self.p.persist)
        if self.has_init and phases[0] == 0:
            out.append(self.p.init)
        k = 1
        for b1, b2 in self.p.untils:
            if phases[k] == 0:
                out += [b1, b2]
            k += 1
        for seq in self.p.seqs:
            out += list(seq[phases[k]:])
            k += 1
        out += list(self.p.reps)
        return out

    def successor(self, state, label):
        if state == SINK:
            return SINK
        phases, jumped, reps, ctr = state
        if not self.p.safety.holds(label):
            return SINK
        if jumped and not self.p.persist.holds(label):
            return SINK
        new = list(phases)
        if self.has_init and phases[0] == 0:
            if not self.p.init.holds(label):
                return SINK
            new[0] = 1
        k = 1
        for b1, b2 in self.p.untils:
            if phases[k] == 0:
                if b2.holds(label):
                    new[k] = 1
                elif not b1.holds(label):
                    return SINK
            k += 1
        for seq in self.p.seqs:
            j = phases[k]
            while j < len(seq) and seq[j].holds(label):
                j += 1
            new[k] = j
            k += 1
        new = tuple(new)
        if self.ready(phases, jumped) and reps:
            if reps[ctr]:
                ctr = (ctr + 1) % len(reps)
        else:
            ctr = 0
        new_reps = tuple(b.holds(label) for b in self.p.reps)
        return self._normalize(new, jumped, new_reps, ctr)

    def eps_successor(self, state):
        if state == SINK or self.p.persist is None:
            return None
        phases, jumped, reps, ctr = state
        if jumped:
            return None
        return self._normalize(phases, True, (), 0)

    def describe(self, state):
        if state == SINK:
            return "sink"
        phases, jumped, reps, ctr = state
        bits = []
        k = 1
        if self.has_init:
            bits.append("init" if phases[0] == 0 else "")
        for i, _ in enumerate(self.p.untils):
            bits.append(f"u{i}={phases[k]}")
            k += 1
        for i, _ in enumerate(self.p.seqs):
            bits.append(f"s{i}={phases[k]}")
            k += 1
        if self.p.persist is not None:
            bits.append("FG" if jumped else "wait")
        if reps:
            bits.append("r=" + "".join("1" if r else "0" for r in reps) + f"/{ctr}")
        return " ".join(b for b in bits if b) or "q"


def translate_fragment(f: LtlFormula, ap_limit: int = DEFAULT_AP_LIMIT) -> Ldba:
    """Build an LDBA for ``f``; raises :class:`FragmentError` outside the fragment."""
    ap_names = [a.name for a in atoms(f)]
    if len(ap_names) > ap_limit:
        raise FragmentError(f"{len(ap_names)} atomic propositions exceed the limit of {ap_limit}")
    prod = _Product(_classify(f))

    index: dict = {}
    order = []
    raw_edges: dict = {}
    eps: dict = {}
    start = prod.initial()
    queue = deque([start])
    index[start] = 0
    order.append(start)
    sink_seen = False
    while queue:
        st = queue.popleft()
        if st == SINK:
            continue
        support = sorted(set().union(*(g.support() for g in prod.relevant(st))), key=ap_names.index)
        by_target: dict = {}
        for l in G.labels(support):
            by_target.setdefault(prod.successor(st, l), []).append(l)
        raw_edges[st] = (support, by_target)
        nexts = list(by_target)
        e = prod.eps_successor(st)
        if e is not None:
            eps[st] = e
            nexts.append(e)
        for t in nexts:
            if t == SINK:
                sink_seen = True
                continue
            if t not in index:
                index[t] = len(order)
                order.append(t)
                queue.append(t)
    if sink_seen:
        index[SINK] = len(order)
        order.append(SINK)

    edges = []
    for st in order:
        if st == SINK:
            edges.append([(G.TRUE, index[SINK])])
            continue
        support, by_target = raw_edges[st]
        row = []
        for t in sorted(by_target, key=lambda x: index[x]):
            members = set(by_target[t])
            row.append((G.from_truth_function(support, lambda l, m=members: l in m), index[t]))
        edges.append(row)
    eps_edges = [[index[eps[st]]] if st in eps else [] for st in order]
    accepting = [index[st] for st in order if prod.accepting(st)]
    a = make_ldba(
        len(order),
        0,
        ap_names,
        edges,
        eps_edges,
        accepting,
        names=[prod.describe(st) for st in order],
        name=to_text(f),
    )
    problems = validate_ldba(a)
    if problems:
        raise AssertionError(f"translator produced an invalid LDBA: {problems}")
    return a
