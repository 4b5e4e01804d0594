import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempograd.envs import Parking
from tempograd.ltl import (
    AtomicProp,
    LassoTrace,
    LtlFormula,
    LtlSyntaxError,
    atoms,
    eval_lasso,
    parse_ap,
    parse_ltl,
    to_nnf,
    to_text,
)

from conftest import PHI_P

A, B, C = (LtlFormula.atom(t) for t in ('a>0', 'b>0', 'c>0'))


def L(*names):
    return frozenset(names)


# ---------------------------------------------------------------- parsing

def test_parse_always_ap():
    f = parse_ltl('G"torso_height>-11.0"')
    assert f.kind == "always"
    ap = f.children[0].ap
    assert ap == AtomicProp("torso_height>-11.0", "torso_height", ">", -11.0)


def test_parse_single_ap():
    f = parse_ltl('"x>0"')
    assert f.kind == "ap" and f.ap.signal == "x" and f.ap.threshold == 0.0


def test_parse_nested_eventually():
    f = parse_ltl('F("a>1" & F"b<2")')
    assert f.kind == "eventually"
    inner = f.children[0]
    assert inner.kind == "and"
    assert inner.children[0].kind == "ap"
    assert inner.children[1].kind == "eventually"
    assert parse_ltl(to_text(f)) == f


def test_precedence_and_associativity():
    # unary > U > & > |, U right-associative
    f = parse_ltl('"a>0" | "b>0" & "c>0"')
    assert f.kind == "or" and f.children[1].kind == "and"
    g = parse_ltl('"a>0" U "b>0" U "c>0"')
    assert g.kind == "until" and g.children[1].kind == "until"
    h = parse_ltl('!"a>0" U "b>0"')
    assert h.kind == "until" and h.children[0].kind == "not"


def test_duplicate_aps_unified():
    f = parse_ltl('F"a>1" & G("a>1" | "b<2")')
    assert [x.name for x in atoms(f)] == ["a>1", "b<2"]


def test_ap_margin_signs():
    gt, lt = parse_ap("v>2"), parse_ap("v<2")
    assert gt.margin(5.0) == 3.0 and lt.margin(5.0) == -3.0
    assert gt.holds(2.5) and not gt.holds(2.0)


@pytest.mark.parametrize(
    "text,pos",
    [('G("a>0"', 7), ('"a>0" &', 7), ('G"a>0" $ "b>0"', 7), ('"a>0" "b>0"', 6)],
)
def test_syntax_error_position(text, pos):
    with pytest.raises(LtlSyntaxError) as e:
        parse_ltl(text)
    assert e.value.pos == pos


def test_malformed_ap():
    with pytest.raises(ValueError, match="malformed atomic proposition"):
        parse_ltl('G"speed=3"')
    with pytest.raises(ValueError):
        parse_ltl('F"x>abc"')


def test_unknown_operator():
    with pytest.raises(LtlSyntaxError):
        parse_ltl('W"a>0"')


def test_arity_checked():
    with pytest.raises(ValueError):
        LtlFormula("until", (A,))


# ---------------------------------------------------------------- generated formulas

def formulas(names=("a>0", "b>0", "c>0"), max_leaves=8):
    leaf = st.sampled_from([LtlFormula.atom(n) for n in names] + [LtlFormula("true")])

    def extend(sub):
        return st.one_of(
            st.builds(lambda x: LtlFormula("not", (x,)), sub),
            st.builds(lambda x: LtlFormula("next", (x,)), sub),
            st.builds(lambda x: LtlFormula("eventually", (x,)), sub),
            st.builds(lambda x: LtlFormula("always", (x,)), sub),
            st.builds(lambda x, y: LtlFormula("and", (x, y)), sub, sub),
            st.builds(lambda x, y: LtlFormula("or", (x, y)), sub, sub),
            st.builds(lambda x, y: LtlFormula("until", (x, y)), sub, sub),
        )

    return st.recursive(leaf, extend, max_leaves=max_leaves)


def lassos(names=("a>0", "b>0", "c>0")):
    label = st.frozensets(st.sampled_from(names))
    return st.builds(LassoTrace, st.lists(label, max_size=4), st.lists(label, min_size=1, max_size=3))


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_round_trip(f):
    assert parse_ltl(to_text(f)) == f


def _nnf_ok(g):
    if g.kind == "not":
        return g.children[0].kind == "ap"
    return all(_nnf_ok(c) for c in g.children)


@settings(max_examples=500, deadline=None)
@given(formulas(), lassos())
def test_nnf_preserves_semantics(f, t):
    g = to_nnf(f)
    assert _nnf_ok(g)
    assert eval_lasso(f, t) == eval_lasso(g, t)


@settings(max_examples=200, deadline=None)
@given(formulas(), lassos(), st.integers(1, 3))
def test_cycle_rotation_invariance(f, t, k):
    # prefix.(c0..cn)^w == prefix.c0..ck-1 . (ck..cn c0..ck-1)^w
    k = k % len(t.cycle)
    rotated = LassoTrace(t.prefix + t.cycle[:k], t.cycle[k:] + t.cycle[:k])
    assert eval_lasso(f, t) == eval_lasso(f, rotated)


@settings(max_examples=200, deadline=None)
@given(formulas(), lassos())
def test_cycle_unrolling_invariance(f, t):
    doubled = LassoTrace(t.prefix, t.cycle + t.cycle)
    assert eval_lasso(f, t) == eval_lasso(f, doubled)


# ---------------------------------------------------------------- normal form

def test_nnf_examples():
    p = LtlFormula.atom("p>0")
    q = LtlFormula.atom("q>0")
    assert to_nnf(~LtlFormula("eventually", (p,))) == LtlFormula("always", (~p,))
    assert to_nnf(~~p) == p
    assert to_nnf(~LtlFormula("until", (p, q))) == LtlFormula("release", (~p, ~q))


def test_nnf_until_duality_random(rng):
    p = LtlFormula.atom("p>0")
    q = LtlFormula.atom("q>0")
    f = ~LtlFormula("until", (p, q))
    g = to_nnf(f)
    names = ["p>0", "q>0"]
    for _ in range(1000):
        pre = [frozenset(n for n in names if rng.random() < 0.5) for _ in range(rng.integers(0, 5))]
        cyc = [frozenset(n for n in names if rng.random() < 0.5) for _ in range(rng.integers(1, 4))]
        t = LassoTrace(pre, cyc)
        assert eval_lasso(f, t) == eval_lasso(g, t)


# ---------------------------------------------------------------- lasso semantics

def test_always_on_constant_trace():
    assert eval_lasso(LtlFormula("always", (A,)), LassoTrace([], [L("a>0")]))


def test_gf_finitely_often():
    gf = LtlFormula("always", (LtlFormula("eventually", (A,)),))
    assert not eval_lasso(gf, LassoTrace([L("a>0")], [L()]))
    assert eval_lasso(gf, LassoTrace([], [L(), L("a>0")]))


def test_until_and_next():
    u = LtlFormula("until", (A, B))
    assert eval_lasso(u, LassoTrace([L("a>0"), L("a>0")], [L("b>0")]))
    assert not eval_lasso(u, LassoTrace([L("a>0"), L()], [L("b>0")]))
    assert not eval_lasso(u, LassoTrace([], [L("a>0")]))  # b never comes
    x = LtlFormula("next", (A,))
    assert eval_lasso(x, LassoTrace([L()], [L("a>0")]))
    assert not eval_lasso(x, LassoTrace([L("a>0")], [L()]))


def test_empty_cycle_rejected():
    with pytest.raises(ValueError):
        LassoTrace([L()], [])


def _parking_trace(a):
    env = Parking()
    aps = atoms(parse_ltl(PHI_P))
    s = env.initial(1)
    word = []
    for _ in range(400):
        x = float(s[0][0])
        word.append(frozenset(ap.name for ap in aps if ap.holds(x)))
        s = env.step(s, [np.array([a])])
    # the car is at rest long before step 400, so the last label repeats forever
    return LassoTrace(word[:-1], word[-1:])


def test_parking_stop_in_park_satisfies():
    # a = 4 stops at 12.5 m in the continuous ideal
    assert eval_lasso(parse_ltl(PHI_P), _parking_trace(4.0))


def test_parking_grass_violates():
    assert not eval_lasso(parse_ltl(PHI_P), _parking_trace(2.0))
    assert not eval_lasso(parse_ltl(PHI_P), _parking_trace(7.0))
