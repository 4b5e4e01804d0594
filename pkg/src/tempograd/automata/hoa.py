"""Reader and writer for the HOA v1 subset used for LDBA interchange.

Supported: ``HOA: v1``, ``name``, ``States``, ``Start`` (one state), ``AP``,
``acc-name: Buchi``, ``Acceptance: 1 Inf(0)``, ``properties`` and any other
header that is simply skipped, and a body of explicitly labelled edges with
state-based acceptance marks ``{0}``.  Epsilon edges are written with the
reserved alias ``[@eps]``.  States missing labels are completed with a
rejecting sink.
"""
from __future__ import annotations

import re

from . import guard as G
from .ldba import Ldba, make_ldba

EPS_TOKEN = "@eps"


class HoaError(ValueError):
    pass


# ---------------------------------------------------------------- writing

def emit_hoa(a: Ldba) -> str:
    idx = {n: i for i, n in enumerate(a.ap_set)}
    lines = ["HOA: v1"]
    if a.name:
        lines.append(f"name: {_quote(a.name)}")
    lines.append(f"States: {a.n_states}")
    lines.append(f"Start: {a.initial}")
    lines.append("AP: " + " ".join([str(len(a.ap_set))] + [_quote(n) for n in a.ap_set]))
    lines.append("acc-name: Buchi")
    lines.append("Acceptance: 1 Inf(0)")
    lines.append("properties: trans-labels explicit-labels state-acc")
    lines.append("--BODY--")
    for q in range(a.n_states):
        head = f"State: {q}"
        if a.names:
            head += f" {_quote(a.names[q])}"
        if q in a.accepting:
            head += " {0}"
        lines.append(head)
        for g, t in a.edges[q]:
            lines.append(f"[{g.render(lambda n: str(idx[n]), 't', 'f')}] {t}")
        for t in sorted(a.eps_edges[q]):
            lines.append(f"[{EPS_TOKEN}] {t}")
    lines.append("--END--")
    return "\n".join(lines) + "\n"


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


# ---------------------------------------------------------------- reading

_TOK = re.compile(
    r'\s*(?:(?P<str>"(?:[^"\\]|\\.)*")|(?P<sep>--BODY--|--END--|--ABORT--)'
    r"|(?P<hdr>[A-Za-z@][A-Za-z0-9_-]*:)|(?P<int>\d+)|(?P<alias>@[A-Za-z0-9_-]+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_-]*)|(?P<sym>[\[\]{}()!&|]))"
)


def _tokens(text: str):
    out = []
    pos = 0
    text = re.sub(r"/\*.*?\*/", " ", text, flags=re.S)
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOK.match(text, pos)
        if m is None:
            raise HoaError(f"unexpected character {text[pos:pos + 10].strip()!r} at offset {pos}")
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "str":
            val = re.sub(r"\\(.)", r"\1", val[1:-1])
        out.append((kind, val))
        pos = m.end()
    out.append(("eof", ""))
    return out


class _Reader:
    def __init__(self, text):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        k, v = self.toks[self.i]
        if (kind and k != kind) or (value is not None and v != value):
            want = value or kind
            raise HoaError(f"expected {want!r}, found {v or k!r}")
        self.i += 1
        return v

    # label expressions: or > and > not > atom
    def label(self, n_ap):
        parts = [self.label_and(n_ap)]
        while self.peek() == ("sym", "|"):
            self.take()
            parts.append(self.label_and(n_ap))
        return G.disj(parts)

    def label_and(self, n_ap):
        parts = [self.label_not(n_ap)]
        while self.peek() == ("sym", "&"):
            self.take()
            parts.append(self.label_not(n_ap))
        return G.conj(parts)

    def label_not(self, n_ap):
        if self.peek() == ("sym", "!"):
            self.take()
            return G.neg(self.label_not(n_ap))
        k, v = self.peek()
        if k == "sym" and v == "(":
            self.take()
            g = self.label(n_ap)
            self.take("sym", ")")
            return g
        if k == "int":
            self.take()
            i = int(v)
            if i >= len(n_ap):
                raise HoaError(f"unknown AP index {i} in guard")
            return G.ap(n_ap[i])
        if k == "ident" and v in ("t", "f"):
            self.take()
            return G.TRUE if v == "t" else G.FALSE
        if k == "alias":
            raise HoaError(f"unsupported alias {v} inside a label expression")
        raise HoaError(f"bad label expression near {v!r}")


def parse_hoa(text: str) -> Ldba:
    r = _Reader(text)
    r.take("hdr", "HOA:")
    if r.take("ident") != "v1":
        raise HoaError("only HOA v1 is supported")
    n_states = None
    start = []
    aps: list[str] = []
    name = ""
    acceptance = None
    while r.peek()[0] == "hdr":
        hdr = r.take()
        if hdr == "States:":
            n_states = int(r.take("int"))
        elif hdr == "Start:":
            start.append(int(r.take("int")))
            if r.peek() == ("sym", "&"):
                raise HoaError("alternating start states are not supported")
        elif hdr == "AP:":
            count = int(r.take("int"))
            aps = [r.take("str") for _ in range(count)]
            if len(set(aps)) != len(aps):
                raise HoaError("duplicate AP names")
        elif hdr == "name:":
            name = r.take("str")
        elif hdr == "Acceptance:":
            acceptance = [r.take("int")]
            while r.peek()[0] not in ("hdr", "sep", "eof"):
                acceptance.append(r.take())
        elif hdr == "acc-name:":
            acc_name = r.take("ident")
            if acc_name != "Buchi":
                raise HoaError(f"unsupported acceptance {acc_name!r}; only Buchi")
            while r.peek()[0] in ("int", "ident"):
                r.take()
        else:
            # properties, tool, Alias, ... carry nothing we need
            while r.peek()[0] not in ("hdr", "sep", "eof"):
                r.take()
    if acceptance is None or "".join(acceptance) not in ("1Inf(0)",):
        raise HoaError(f"unsupported acceptance {' '.join(acceptance or ['<missing>'])!r}; expected '1 Inf(0)'")
    if n_states is None:
        raise HoaError("missing States: header")
    if len(start) != 1:
        raise HoaError("exactly one Start: state is required")
    r.take("sep", "--BODY--")

    edges = [[] for _ in range(n_states)]
    eps = [[] for _ in range(n_states)]
    names = [""] * n_states
    accepting = set()
    while r.peek() == ("hdr", "State:"):
        r.take()
        if r.peek() == ("sym", "["):
            raise HoaError("state labels are not supported")
        q = int(r.take("int"))
        if q >= n_states:
            raise HoaError(f"state {q} out of range")
        if r.peek()[0] == "str":
            names[q] = r.take()
        if r.peek() == ("sym", "{"):
            r.take()
            while r.peek() != ("sym", "}"):
                if r.take("int") != "0":
                    raise HoaError("unsupported acceptance set index")
                accepting.add(q)
            r.take()
        while r.peek() == ("sym", "["):
            r.take()
            if r.peek()[0] == "alias":
                alias = r.take()
                if alias != EPS_TOKEN:
                    raise HoaError(f"unsupported alias {alias}")
                r.take("sym", "]")
                t = int(r.take("int"))
                eps[q].append(t)
            else:
                g = r.label(aps)
                r.take("sym", "]")
                t = int(r.take("int"))
                edges[q].append((g, t))
            if r.peek() == ("sym", "{"):
                raise HoaError("unsupported acceptance: transition-based marks")
            if r.peek() == ("sym", "&"):
                raise HoaError("alternating edges are not supported")
        if r.peek()[0] == "int":
            raise HoaError(f"implicit labels are not supported (state {q})")
    r.take("sep", "--END--")

    for q in range(n_states):
        for _, t in edges[q]:
            if t >= n_states:
                raise HoaError(f"edge target {t} out of range")
        names_q = sorted(set().union(*(g.support() for g, _ in edges[q])))
        missing = []
        for l in G.labels(names_q):
            hits = sum(1 for g, _ in edges[q] if g.holds(l))
            if hits > 1:
                raise HoaError(f"nondeterministic non-eps labels in state {q}")
            if hits == 0:
                missing.append(l)
        if missing:
            edges[q] = edges[q] + [("missing", None)]
    if any(t is None for es in edges for _, t in es):
        sink = n_states
        n_states += 1
        names.append("sink" if any(names) else "")
        for q in range(sink):
            if edges[q] and edges[q][-1][0] == "missing":
                covered = [g for g, _ in edges[q][:-1]]
                edges[q][-1] = (G.neg(G.disj(covered)), sink)
        edges.append([(G.TRUE, sink)])
        eps.append([])
    return make_ldba(
        n_states,
        start[0],
        aps,
        edges,
        eps,
        accepting,
        names=names if any(names) else (),
        name=name,
    )
