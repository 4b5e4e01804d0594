"""Propositional edge guards over AP names."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Sequence


@dataclass(frozen=True)
class Guard:
    """Boolean formula over AP names.

    ``op`` is one of ``t``, ``f``, ``ap``, ``not``, ``and``, ``or``; ``args``
    holds child guards (or the AP name for ``ap``).
    """

    op: str
    args: tuple = ()

    def holds(self, label) -> bool:
        op = self.op
        if op == "t":
            return True
        if op == "f":
            return False
        if op == "ap":
            return self.args[0] in label
        if op == "not":
            return not self.args[0].holds(label)
        if op == "and":
            return all(a.holds(label) for a in self.args)
        return any(a.holds(label) for a in self.args)

    def support(self) -> frozenset:
        if self.op == "ap":
            return frozenset(self.args)
        out = frozenset()
        if self.op in ("not", "and", "or"):
            for a in self.args:
                out |= a.support()
        return out

    def restrict(self, name: str, value: bool) -> "Guard":
        """Cofactor with ``name`` fixed, simplified."""
        op = self.op
        if op in ("t", "f"):
            return self
        if op == "ap":
            if self.args[0] == name:
                return TRUE if value else FALSE
            return self
        if op == "not":
            return neg(self.args[0].restrict(name, value))
        parts = [a.restrict(name, value) for a in self.args]
        return conj(parts) if op == "and" else disj(parts)

    def __str__(self):
        return self.render(lambda n: f'"{n}"', "true", "false")

    def render(self, atom: Callable[[str], str], t: str, f: str) -> str:
        op = self.op
        if op == "t":
            return t
        if op == "f":
            return f
        if op == "ap":
            return atom(self.args[0])
        if op == "not":
            inner = self.args[0].render(atom, t, f)
            return "!" + (inner if self.args[0].op in ("ap", "t", "f", "not") else f"({inner})")
        sym = " & " if op == "and" else " | "
        parts = []
        for a in self.args:
            s = a.render(atom, t, f)
            parts.append(f"({s})" if a.op in ("and", "or") and a.op != op else s)
        return sym.join(parts)


TRUE = Guard("t")
FALSE = Guard("f")


def ap(name: str) -> Guard:
    return Guard("ap", (name,))


def neg(g: Guard) -> Guard:
    if g.op == "t":
        return FALSE
    if g.op == "f":
        return TRUE
    if g.op == "not":
        return g.args[0]
    return Guard("not", (g,))


def conj(parts: Iterable[Guard]) -> Guard:
    flat = []
    for p in parts:
        if p.op == "f":
            return FALSE
        if p.op == "t":
            continue
        flat.extend(p.args if p.op == "and" else (p,))
    flat = list(dict.fromkeys(flat))
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else Guard("and", tuple(flat))


def disj(parts: Iterable[Guard]) -> Guard:
    flat = []
    for p in parts:
        if p.op == "t":
            return TRUE
        if p.op == "f":
            continue
        flat.extend(p.args if p.op == "or" else (p,))
    flat = list(dict.fromkeys(flat))
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Guard("or", tuple(flat))


def labels(names: Sequence[str]):
    """All 2^n label sets over ``names``, as frozensets."""
    for bits in product((False, True), repeat=len(names)):
        yield frozenset(n for n, b in zip(names, bits) if b)


def from_truth_function(names: Sequence[str], fn: Callable[[frozenset], bool]) -> Guard:
    """Compact guard equivalent to ``fn`` over ``names`` (Shannon decomposition,
    skipping variables the function does not depend on)."""
    memo: dict = {}

    def build(i: int, fixed: frozenset, table: tuple) -> Guard:
        # table: truth values for all completions of the remaining variables
        if all(table):
            return TRUE
        if not any(table):
            return FALSE
        key = (i, table)
        if key in memo:
            return memo[key]
        half = len(table) // 2
        lo, hi = table[:half], table[half:]
        if lo == hi:
            g = build(i + 1, fixed, lo)
        else:
            v = ap(names[i])
            g_hi = build(i + 1, fixed, hi)
            g_lo = build(i + 1, fixed, lo)
            if g_lo.op == "f":
                g = conj([v, g_hi])
            elif g_hi.op == "f":
                g = conj([neg(v), g_lo])
            elif g_hi.op == "t":
                g = disj([v, g_lo])
            elif g_lo.op == "t":
                g = disj([neg(v), g_hi])
            else:
                g = disj([conj([v, g_hi]), conj([neg(v), g_lo])])
        memo[key] = g
        return g

    # truth table with names[0] as the most significant variable
    n = len(names)
    table = []
    for bits in product((False, True), repeat=n):
        table.append(bool(fn(frozenset(nm for nm, b in zip(names, bits) if b))))
    return build(0, frozenset(), tuple(table))


def equivalent(a: Guard, b: Guard) -> bool:
    names = sorted(a.support() | b.support())
    return all(a.holds(l) == b.holds(l) for l in labels(names))
