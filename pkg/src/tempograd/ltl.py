"""LTL formulas over comparison atoms: parsing, printing, NNF and lasso semantics.

Concrete syntax::

    phi := "sig>num" | "sig<num" | true | false | ( phi )
         | ! phi | X phi | F phi | G phi
         | phi U phi | phi R phi | phi & phi | phi | phi

Unary operators bind tightest, then ``U``/``R`` (right associative), then
``&``, then ``|``.  Operator letters may be glued together, so ``GF"a>0"``
reads as ``G F "a>0"``.  ``R`` (release) only exists so that NNF output can be
printed and read back; it is not meant for hand-written specifications.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "AtomicProp",
    "LtlFormula",
    "LassoTrace",
    "LtlSyntaxError",
    "parse_ltl",
    "parse_ap",
    "to_text",
    "to_nnf",
    "eval_lasso",
    "closure",
    "is_propositional",
    "atoms",
    "TRUE",
    "FALSE",
]

_AP_RE = re.compile(
    r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*([<>])\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*$"
)


class LtlSyntaxError(ValueError):
    """Raised for malformed formula text; ``pos`` is a 0-based column."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


@dataclass(frozen=True)
class AtomicProp:
    """Atom ``signal > threshold`` or ``signal < threshold``, named by its text."""

    name: str
    signal: str
    comparator: str
    threshold: float

    def margin(self, value):
        """Signed distance g(s): positive exactly when the atom holds."""
        if self.comparator == ">":
            return value - self.threshold
        return self.threshold - value

    def holds(self, value) -> bool:
        return bool(self.margin(value) > 0)


def parse_ap(text: str) -> AtomicProp:
    m = _AP_RE.match(text)
    if m is None:
        raise ValueError(f"malformed atomic proposition {text!r}; expected <ident><'>'|'<'><number>")
    signal, cmp, num = m.groups()
    return AtomicProp(name=text, signal=signal, comparator=cmp, threshold=float(num))


_ARITY = {
    "true": 0,
    "false": 0,
    "ap": 0,
    "not": 1,
    "next": 1,
    "eventually": 1,
    "always": 1,
    "and": 2,
    "or": 2,
    "until": 2,
    "release": 2,
}


@dataclass(frozen=True)
class LtlFormula:
    kind: str
    children: tuple = ()
    ap: AtomicProp | None = None

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown formula kind {self.kind!r}")
        if len(self.children) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {_ARITY[self.kind]} operand(s), got {len(self.children)}")
        if (self.kind == "ap") != (self.ap is not None):
            raise ValueError("ap payload required exactly for kind 'ap'")

    def __str__(self):
        return to_text(self)

    # small constructors keep test code and the translator readable
    @staticmethod
    def atom(text: str) -> "LtlFormula":
        return LtlFormula("ap", ap=parse_ap(text))

    def __and__(self, other):
        return LtlFormula("and", (self, other))

    def __or__(self, other):
        return LtlFormula("or", (self, other))

    def __invert__(self):
        return LtlFormula("not", (self,))


TRUE = LtlFormula("true")
FALSE = LtlFormula("false")


def always(f):
    return LtlFormula("always", (f,))


def eventually(f):
    return LtlFormula("eventually", (f,))


def nxt(f):
    return LtlFormula("next", (f,))


def until(a, b):
    return LtlFormula("until", (a, b))


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(r'\s*(?:(?P<str>"[^"]*")|(?P<kw>true|false)\b|(?P<op>[!&|()GFXUR]))')


def _tokenize(text: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos] == '"':
                raise LtlSyntaxError("unterminated quoted proposition", pos)
            raise LtlSyntaxError(f"unknown operator or symbol {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.aps: dict[str, AtomicProp] = {}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind == "str":
            raise LtlSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> LtlFormula:
        f = self.parse_or()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise LtlSyntaxError(f"unexpected {val!r}", pos)
        return f

    def parse_or(self):
        left = self.parse_and()
        while self.peek()[1] == "|" and self.peek()[0] == "op":
            self.take()
            left = LtlFormula("or", (left, self.parse_and()))
        return left

    def parse_and(self):
        left = self.parse_binary_temporal()
        while self.peek()[1] == "&" and self.peek()[0] == "op":
            self.take()
            left = LtlFormula("and", (left, self.parse_binary_temporal()))
        return left

    def parse_binary_temporal(self):
        left = self.parse_unary()
        kind, val, _ = self.peek()
        if kind == "op" and val in ("U", "R"):
            self.take()
            right = self.parse_binary_temporal()
            return LtlFormula("until" if val == "U" else "release", (left, right))
        return left

    def parse_unary(self):
        kind, val, pos = self.peek()
        if kind == "op" and val in "!GFX":
            self.take()
            child = self.parse_unary()
            name = {"!": "not", "G": "always", "F": "eventually", "X": "next"}[val]
            return LtlFormula(name, (child,))
        return self.parse_atom()

    def parse_atom(self):
        kind, val, pos = self.take()
        if kind == "str":
            body = val[1:-1]
            if body not in self.aps:
                try:
                    self.aps[body] = parse_ap(body)
                except ValueError as exc:
                    raise LtlSyntaxError(str(exc), pos) from None
            return LtlFormula("ap", ap=self.aps[body])
        if kind == "kw":
            return TRUE if val == "true" else FALSE
        if kind == "op" and val == "(":
            f = self.parse_or()
            self.expect(")")
            return f
        if kind == "eof":
            raise LtlSyntaxError("unexpected end of input", pos)
        raise LtlSyntaxError(f"unexpected {val!r}", pos)


def parse_ltl(text: str) -> LtlFormula:
    """Parse formula text; identical quoted atoms share one AtomicProp."""
    return _Parser(text).parse()


_PREFIX = {"not": "!", "always": "G", "eventually": "F", "next": "X"}
_INFIX = {"and": "&", "or": "|", "until": "U", "release": "R"}


def to_text(f: LtlFormula) -> str:
    """Print in the parser's syntax; binary nodes are always parenthesised."""
    if f.kind == "true":
        return "true"
    if f.kind == "false":
        return "false"
    if f.kind == "ap":
        return f'"{f.ap.name}"'
    if f.kind in _PREFIX:
        return _PREFIX[f.kind] + to_text(f.children[0])
    a, b = f.children
    return f"({to_text(a)} {_INFIX[f.kind]} {to_text(b)})"


# ---------------------------------------------------------------- structure

def closure(f: LtlFormula) -> list[LtlFormula]:
    """Distinct subformulas in post-order (children before parents)."""
    seen: dict[LtlFormula, None] = {}

    def visit(g):
        if g in seen:
            return
        for c in g.children:
            visit(c)
        seen[g] = None

    visit(f)
    return list(seen)


def atoms(f: LtlFormula) -> list[AtomicProp]:
    out: dict[str, AtomicProp] = {}
    for g in closure(f):
        if g.kind == "ap":
            out.setdefault(g.ap.name, g.ap)
    return list(out.values())


def is_propositional(f: LtlFormula) -> bool:
    return all(g.kind in ("true", "false", "ap", "not", "and", "or") for g in closure(f))


def to_nnf(f: LtlFormula) -> LtlFormula:
    """Push negations down to the atoms (release covers negated until)."""
    return _nnf(f, False)


def _nnf(f: LtlFormula, neg: bool) -> LtlFormula:
    k = f.kind
    if k == "true":
        return FALSE if neg else TRUE
    if k == "false":
        return TRUE if neg else FALSE
    if k == "ap":
        return LtlFormula("not", (f,)) if neg else f
    if k == "not":
        return _nnf(f.children[0], not neg)
    if k == "next":
        return LtlFormula("next", (_nnf(f.children[0], neg),))
    if k in ("eventually", "always"):
        dual = {"eventually": "always", "always": "eventually"}[k]
        return LtlFormula(dual if neg else k, (_nnf(f.children[0], neg),))
    a, b = (_nnf(c, neg) for c in f.children)
    if k in ("and", "or"):
        return LtlFormula({"and": "or", "or": "and"}[k] if neg else k, (a, b))
    dual = {"until": "release", "release": "until"}[k]
    return LtlFormula(dual if neg else k, (a, b))


# ---------------------------------------------------------------- semantics

@dataclass(frozen=True)
class LassoTrace:
    """The ultimately periodic word prefix . cycle^omega of label sets."""

    prefix: tuple
    cycle: tuple

    def __init__(self, prefix: Iterable = (), cycle: Iterable = ()):
        object.__setattr__(self, "prefix", tuple(frozenset(l) for l in prefix))
        object.__setattr__(self, "cycle", tuple(frozenset(l) for l in cycle))
        if not self.cycle:
            raise ValueError("lasso cycle must be nonempty")

    def __len__(self):
        return len(self.prefix) + len(self.cycle)

    def successor(self, i: int) -> int:
        return i + 1 if i + 1 < len(self) else len(self.prefix)

    def label(self, i: int) -> frozenset:
        p = len(self.prefix)
        return self.prefix[i] if i < p else self.cycle[(i - p) % len(self.cycle)]

    def letters(self) -> set:
        out = set()
        for l in self.prefix + self.cycle:
            out |= l
        return out


def truth_step(sub: Sequence[LtlFormula], label: frozenset, nxt_vec: dict) -> dict:
    """Truth of every subformula at a position, from its label and the truth
    vector at the successor position (expansion laws of the temporal operators)."""
    cur: dict[LtlFormula, bool] = {}
    for g in sub:
        k = g.kind
        if k == "true":
            v = True
        elif k == "false":
            v = False
        elif k == "ap":
            v = g.ap.name in label
        elif k == "not":
            v = not cur[g.children[0]]
        elif k == "and":
            v = cur[g.children[0]] and cur[g.children[1]]
        elif k == "or":
            v = cur[g.children[0]] or cur[g.children[1]]
        elif k == "next":
            v = nxt_vec[g.children[0]]
        elif k == "until":
            v = cur[g.children[1]] or (cur[g.children[0]] and nxt_vec[g])
        elif k == "release":
            v = cur[g.children[1]] and (cur[g.children[0]] or nxt_vec[g])
        elif k == "eventually":
            v = cur[g.children[0]] or nxt_vec[g]
        else:  # always
            v = cur[g.children[0]] and nxt_vec[g]
        cur[g] = v
    return cur


def cycle_truth(sub: Sequence[LtlFormula], cycle: Sequence[frozenset]) -> list[dict]:
    """Truth vectors at each position of cycle^omega."""
    n = len(cycle)
    table: list[dict] = [dict() for _ in range(n)]
    for g in sub:
        k = g.kind
        if k in ("until", "eventually", "release", "always"):
            least = k in ("until", "eventually")
            vals = [not least] * n
            # lookahead of 2n positions reaches the fixpoint on a cycle of length n
            for _ in range(2 * n + 1):
                changed = False
                for i in reversed(range(n)):
                    nxt_v = vals[(i + 1) % n]
                    if k == "until":
                        v = table[i][g.children[1]] or (table[i][g.children[0]] and nxt_v)
                    elif k == "eventually":
                        v = table[i][g.children[0]] or nxt_v
                    elif k == "release":
                        v = table[i][g.children[1]] and (table[i][g.children[0]] or nxt_v)
                    else:
                        v = table[i][g.children[0]] and nxt_v
                    if v != vals[i]:
                        vals[i] = v
                        changed = True
                if not changed:
                    break
            for i in range(n):
                table[i][g] = vals[i]
        else:
            for i in range(n):
                label = cycle[i]
                if k == "true":
                    v = True
                elif k == "false":
                    v = False
                elif k == "ap":
                    v = g.ap.name in label
                elif k == "not":
                    v = not table[i][g.children[0]]
                elif k == "and":
                    v = table[i][g.children[0]] and table[i][g.children[1]]
                elif k == "or":
                    v = table[i][g.children[0]] or table[i][g.children[1]]
                else:  # next
                    v = table[(i + 1) % n][g.children[0]]
                table[i][g] = v
    return table


def eval_lasso(f: LtlFormula, trace: LassoTrace) -> bool:
    """Does prefix . cycle^omega satisfy ``f``?"""
    if not trace.cycle:
        raise ValueError("lasso cycle must be nonempty")
    sub = closure(f)
    vec = cycle_truth(sub, trace.cycle)[0]
    for label in reversed(trace.prefix):
        vec = truth_step(sub, label, vec)
    return vec[f]
