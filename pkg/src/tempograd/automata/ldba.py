"""Limit-deterministic Büchi automata with guarded edges and epsilon jumps."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..ltl import LassoTrace
from .guard import Guard, labels


@dataclass(frozen=True, eq=False)
class Ldba:
    """Automaton over label sets of ``ap_set``.

    States are ``0 .. n-1``.  ``edges[q]`` lists ``(guard, target)`` pairs whose
    guards partition the alphabet; ``eps_edges[q]`` holds epsilon targets.
    Instances compare by identity; use :func:`isomorphic` for structure.
    """

    n_states: int
    initial: int
    ap_set: tuple
    edges: tuple
    eps_edges: tuple
    accepting: frozenset
    initial_component: frozenset
    names: tuple = ()
    name: str = ""
    _succ: dict = field(default_factory=dict, repr=False)

    def step(self, q: int, label) -> int:
        key = (q, label if isinstance(label, frozenset) else frozenset(label))
        t = self._succ.get(key)
        if t is None:
            for g, target in self.edges[q]:
                if g.holds(key[1]):
                    t = target
                    break
            else:
                raise ValueError(f"no edge of state {q} accepts label {sorted(key[1])}")
            self._succ[key] = t
        return t

    @property
    def has_eps(self) -> bool:
        return any(self.eps_edges)

    @property
    def accepting_component(self) -> frozenset:
        return frozenset(range(self.n_states)) - self.initial_component

    def eps_targets(self) -> list[int]:
        return sorted({t for ts in self.eps_edges for t in ts})

    def rejecting_sinks(self) -> frozenset:
        out = set()
        for q in range(self.n_states):
            if q in self.accepting or self.eps_edges[q]:
                continue
            if all(t == q for _, t in self.edges[q]):
                out.add(q)
        return frozenset(out)

    def reachable(self) -> list[int]:
        seen = [self.initial]
        todo = [self.initial]
        while todo:
            q = todo.pop()
            for t in [t for _, t in self.edges[q]] + sorted(self.eps_edges[q]):
                if t not in seen:
                    seen.append(t)
                    todo.append(t)
        return sorted(seen)

    def label_transitions(self, q: int) -> int:
        """Number of labels over ``ap_set`` that some edge of ``q`` accepts."""
        return sum(1 for l in labels(self.ap_set) if any(g.holds(l) for g, _ in self.edges[q]))

    def stats(self) -> dict:
        reach = self.reachable()
        sinks = self.rejecting_sinks()
        return {
            "states": len(reach),
            "non_sink_states": sum(1 for q in reach if q not in sinks),
            "edges": sum(len(self.edges[q]) for q in reach),
            "eps_edges": sum(len(self.eps_edges[q]) for q in reach),
            "accepting": sum(1 for q in reach if q in self.accepting),
            "aps": len(self.ap_set),
        }


def derive_initial_component(n_states: int, edges, eps_edges) -> frozenset:
    """Q_I := states not reachable from any epsilon target (empty without epsilons)."""
    frontier = [t for ts in eps_edges for t in ts]
    if not frontier:
        return frozenset()
    acc = set(frontier)
    while frontier:
        q = frontier.pop()
        for _, t in edges[q]:
            if t not in acc:
                acc.add(t)
                frontier.append(t)
    return frozenset(range(n_states)) - acc


def make_ldba(n_states, initial, ap_set, edges, eps_edges=None, accepting=(), initial_component=None, names=(), name=""):
    edges = tuple(tuple((g, int(t)) for g, t in es) for es in edges)
    if eps_edges is None:
        eps_edges = [()] * n_states
    eps_edges = tuple(frozenset(int(t) for t in ts) for ts in eps_edges)
    if initial_component is None:
        initial_component = derive_initial_component(n_states, edges, eps_edges)
    return Ldba(
        n_states=n_states,
        initial=int(initial),
        ap_set=tuple(ap_set),
        edges=edges,
        eps_edges=eps_edges,
        accepting=frozenset(int(q) for q in accepting),
        initial_component=frozenset(initial_component),
        names=tuple(names),
        name=name,
    )


def validate_ldba(a: Ldba) -> list[str]:
    """List of invariant violations; empty iff ``a`` is a well-formed LDBA."""
    out = []
    n = a.n_states
    aps = set(a.ap_set)
    if not 0 <= a.initial < n:
        out.append(f"initial state {a.initial} out of range")
    if len(a.edges) != n or len(a.eps_edges) != n:
        out.append("edge tables do not match the state count")
        return out
    q_i = a.initial_component
    q_a = frozenset(range(n)) - q_i
    for q in range(n):
        support = set()
        for g, t in a.edges[q]:
            if not 0 <= t < n:
                out.append(f"edge target {t} of state {q} out of range")
            unknown = g.support() - aps
            if unknown:
                out.append(f"unknown AP in guard of state {q}: {sorted(unknown)}")
            support |= g.support() & aps
            if q in q_a and t in q_i:
                out.append(f"edge from Q_A state {q} back to Q_I state {t}")
        names = sorted(support)
        overlap = gap = None
        for l in labels(names):
            hits = sum(1 for g, _ in a.edges[q] if g.holds(l))
            if hits > 1 and overlap is None:
                overlap = l
            if hits == 0 and gap is None:
                gap = l
        if overlap is not None:
            out.append(f"guards not disjoint in state {q} (label {sorted(overlap)})")
        if gap is not None:
            out.append(f"guards not exhaustive in state {q} (label {sorted(gap)})")
        for t in a.eps_edges[q]:
            if q in q_a:
                out.append(f"eps edge in Q_A (state {q} -> {t})")
            if not 0 <= t < n:
                out.append(f"eps target {t} of state {q} out of range")
            elif t in q_i:
                out.append(f"eps edge targets Q_I (state {q} -> {t})")
    for q in sorted(a.accepting):
        if q in q_i:
            out.append(f"accepting state {q} in Q_I")
    return out


# ---------------------------------------------------------------- runs on lassos

def _loop_accepts(a: Ldba, q: int, pos: int, cycle: Sequence[frozenset]) -> bool:
    """Deterministic (jump-free) run from ``q`` at cycle position ``pos``."""
    seen: dict = {}
    trail = []
    while (q, pos) not in seen:
        seen[(q, pos)] = len(trail)
        trail.append(q)
        q = a.step(q, cycle[pos])
        pos = (pos + 1) % len(cycle)
    return any(s in a.accepting for s in trail[seen[(q, pos)]:])


def _cycle_accepts(a: Ldba, q: int, jumped: bool, cycle: Sequence[frozenset]) -> bool:
    if _loop_accepts(a, q, 0, cycle):
        return True
    if jumped:
        return False
    pos = 0
    seen = set()
    while (q, pos) not in seen:
        seen.add((q, pos))
        for t in a.eps_edges[q]:
            if _loop_accepts(a, t, pos, cycle):
                return True
        q = a.step(q, cycle[pos])
        pos = (pos + 1) % len(cycle)
    return False


def advance_configs(a: Ldba, configs, label: frozenset) -> frozenset:
    """One prefix letter for every ``(state, jumped)`` configuration, with an
    optional epsilon jump taken just before the letter."""
    nxt = set()
    for q, jumped in configs:
        nxt.add((a.step(q, label), jumped))
        if not jumped:
            for t in a.eps_edges[q]:
                nxt.add((a.step(t, label), True))
    return frozenset(nxt)


def configs_accept(a: Ldba, configs, cycle: Sequence[frozenset]) -> bool:
    return any(_cycle_accepts(a, q, j, cycle) for q, j in sorted(configs))


def run_lasso(a: Ldba, trace: LassoTrace, eps_policy="search") -> bool:
    """Büchi acceptance of ``trace``.

    ``eps_policy="search"`` tries every position for the (at most one) epsilon
    jump.  Otherwise it is a sequence whose entry ``t`` is the jump target to
    attempt before reading label ``t`` (``None`` for no jump); attempts along
    missing epsilon edges are ignored.
    """
    keep = frozenset(a.ap_set)
    prefix = [l & keep for l in trace.prefix]
    cycle = [l & keep for l in trace.cycle]
    if eps_policy == "search":
        configs = frozenset({(a.initial, False)})
        for l in prefix:
            configs = advance_configs(a, configs, l)
        return configs_accept(a, configs, cycle)

    choices = list(eps_policy)
    p, c = len(prefix), len(cycle)
    q = a.initial
    for t in range(max(len(choices), p)):
        target = choices[t] if t < len(choices) else None
        if target is not None and target in a.eps_edges[q]:
            q = target
        q = a.step(q, prefix[t] if t < p else cycle[(t - p) % c])
    t = max(len(choices), p)
    return _loop_accepts(a, q, (t - p) % c, cycle)


# ---------------------------------------------------------------- rendering

def emit_dot(a: Ldba, name: str = "ldba") -> str:
    sinks = a.rejecting_sinks()
    lines = [f'digraph "{name}" {{', "  rankdir=LR;", '  node [shape=circle, fontname="Helvetica"];']
    lines.append('  __start [shape=point, label=""];')
    for q in range(a.n_states):
        attrs = [f'label="{a.names[q] if a.names else q}"']
        if q in a.accepting:
            attrs.append("shape=doublecircle")
        if q in sinks:
            attrs.append('style=filled, fillcolor="grey80", color="grey50"')
        lines.append(f"  {q} [{', '.join(attrs)}];")
    lines.append(f"  __start -> {a.initial};")
    for q in range(a.n_states):
        for g, t in a.edges[q]:
            text = str(g).replace('"', '\\"')
            lines.append(f'  {q} -> {t} [label="{text}"];')
        for t in sorted(a.eps_edges[q]):
            lines.append(f'  {q} -> {t} [label="ε", style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def isomorphic(a: Ldba, b: Ldba) -> bool:
    """Structural equality up to state renumbering (guards compared semantically)."""
    from .guard import equivalent

    if a.n_states != b.n_states or set(a.ap_set) != set(b.ap_set):
        return False
    # both automata are deterministic on labels, so the bijection is fixed by a
    # joint walk from the initial states (epsilon targets visited in sorted order)
    mapping = {a.initial: b.initial}
    todo = [a.initial]
    alphabet = list(labels(sorted(a.ap_set)))
    while todo:
        qa = todo.pop()
        qb = mapping[qa]
        if (qa in a.accepting) != (qb in b.accepting):
            return False
        if (qa in a.initial_component) != (qb in b.initial_component):
            return False
        if len(a.eps_edges[qa]) != len(b.eps_edges[qb]):
            return False
        pairs = [(a.step(qa, l), b.step(qb, l)) for l in alphabet]
        ea, eb = sorted(a.eps_edges[qa]), sorted(b.eps_edges[qb])
        pairs += list(zip(ea, eb))
        for ta, tb in pairs:
            if ta in mapping:
                if mapping[ta] != tb:
                    return False
            else:
                if tb in mapping.values():
                    return False
                mapping[ta] = tb
                todo.append(ta)
    if len(mapping) != len(set(a.reachable())):
        return False
    return True
