import numpy as np
import pytest

from tempograd.automata import make_ldba, translate_fragment
from tempograd.automata import guard as G
from tempograd.envs import Parking
from tempograd.ltl import atoms, parse_ap, parse_ltl
from tempograd.product import (
    BeliefError,
    ProductLayer,
    RewardParams,
    UnboundSignal,
    discrete_reward,
    greedy_eps_discrete,
    hard_label,
    pr_ap,
    pr_guard,
    reward_discount,
    step_discrete,
    step_eps,
    step_label,
    step_product,
)

from conftest import PHI_P, SignalEnv, bundled_automata

AP_A = parse_ap("a>0")


def loop1():
    return make_ldba(1, 0, ("a>0",), [[(G.TRUE, 0)]], accepting=(0,))


def two_state():
    # q0 -a-> q1, q0 -!a-> q0, q1 absorbing
    a = G.ap("a>0")
    return make_ldba(2, 0, ("a>0",), [[(a, 1), (G.neg(a), 0)], [(G.TRUE, 1)]], accepting=(1,))


def three_state_eps():
    t = G.TRUE
    return make_ldba(3, 0, ("a>0",), [[(t, 0)], [(t, 1)], [(t, 2)]], [(2,), (), ()], accepting=(2,))


def parking():
    f = parse_ltl(PHI_P)
    return translate_fragment(f), atoms(f)


# ---------------------------------------------------------------- labels

def test_pr_ap_midpoint():
    assert pr_ap(AP_A, {"a": 0.0}) == 0.5


def test_pr_ap_parking_value():
    p = pr_ap(parse_ap("x>10"), {"x": 15.0}, tau=1.0)
    assert abs(p - 1 / (1 + np.exp(-5))) < 1e-15
    assert abs(p - 0.993307) < 1e-6


def test_pr_ap_saturation():
    assert pr_ap(AP_A, {"a": 100.0}) == 1.0
    assert pr_ap(parse_ap("a<0"), {"a": 100.0}) == 0.0


def test_pr_ap_unbound_signal():
    with pytest.raises(UnboundSignal):
        pr_ap(parse_ap("z>0"), {"x": 1.0})


def test_pr_guard_examples():
    a, b = G.ap("a"), G.ap("b")
    assert pr_guard(G.conj([a, b]), {"a": 0.5, "b": 0.5}) == 0.25
    assert abs(pr_guard(G.disj([a, b]), {"a": 0.9, "b": 0.2}) - 0.92) < 1e-15
    assert pr_guard(G.TRUE, {"a": 0.3}) == 1.0
    assert pr_guard(G.FALSE, {"a": 0.3}) == 0.0


def test_pr_guard_unknown_ap():
    with pytest.raises(KeyError):
        pr_guard(G.ap("z"), {"a": 0.5})


def test_pr_guard_matches_label_enumeration(rng):
    names = ["a", "b", "c"]
    for _ in range(100):
        p = dict(zip(names, rng.uniform(size=3)))
        truth = {l: rng.random() < 0.5 for l in G.labels(names)}
        g = G.from_truth_function(names, lambda l: truth[l])
        want = 0.0
        for l, ok in truth.items():
            if ok:
                want += np.prod([p[n] if n in l else 1 - p[n] for n in names])
        assert abs(pr_guard(g, p) - want) < 1e-12


def test_hard_label():
    aps = [parse_ap("x>10"), parse_ap("x<20")]
    assert hard_label(aps, {"x": 15.0}) == {"x>10", "x<20"}
    assert hard_label(aps, {"x": 10.0}) == {"x<20"}


# ---------------------------------------------------------------- belief updates

def test_step_label_identity_loop():
    lay = ProductLayer(loop1(), [AP_A])
    q = np.array([1.0])
    np.testing.assert_array_equal(step_label(lay, {"a": 0.3}, q), q)


def test_step_label_two_state():
    lay = ProductLayer(two_state(), [AP_A])
    np.testing.assert_allclose(lay.step_label(np.array([1.0, 0.0]), np.array([0.7])), [0.3, 0.7], atol=1e-15)
    np.testing.assert_allclose(lay.step_label(np.array([0.5, 0.5]), np.array([1.0])), [0.0, 1.0], atol=1e-15)


def test_step_eps_no_edges():
    lay = ProductLayer(two_state(), [AP_A])
    q = np.array([0.4, 0.6])
    np.testing.assert_allclose(step_eps(lay, q, np.array([0.2, 0.8])), q, atol=1e-15)


def test_step_eps_examples():
    lay = ProductLayer(three_state_eps(), [AP_A])
    q = np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(step_eps(lay, q, np.array([0.0, 0.0, 1.0])), [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(step_eps(lay, q, np.array([0.5, 0.0, 0.5])), [0.5, 0, 0.5], atol=1e-15)


def test_step_eps_rejects_bad_action():
    lay = ProductLayer(three_state_eps(), [AP_A])
    with pytest.raises(BeliefError):
        step_eps(lay, np.array([1.0, 0, 0]), np.array([0.5, 0.0, 0.0]))


def test_belief_error_and_renormalization():
    lay = ProductLayer(two_state(), [AP_A])
    with pytest.raises(BeliefError):
        step_label(lay, {"a": 0.0}, np.array([0.5, 0.4]))
    # a deviation in (1e-9, 1e-6] is renormalized silently
    q = lay.step_label(np.array([0.5, 0.5 + 1e-7]), np.array([0.2]))
    assert abs(q.sum() - 1) < 1e-15


def test_batched_step_label(rng):
    lay = ProductLayer(two_state(), [AP_A])
    q = rng.dirichlet([1, 1], size=5)
    p = rng.uniform(size=(5, 1))
    out = lay.step_label(q, p)
    for i in range(5):
        np.testing.assert_allclose(out[i], lay.step_label(q[i], p[i]), atol=1e-15)


# ---------------------------------------------------------------- product steps

def test_product_true_loop_is_env_step():
    env = SignalEnv(("a",))
    lay = ProductLayer(loop1(), [AP_A])
    s = (np.array([0.2]),)
    s2, q2 = step_product(env, lay, s, np.array([[1.0]]), [np.array([0.5])], np.array([[1.0]]))
    np.testing.assert_array_equal(s2[0], [0.7])
    np.testing.assert_array_equal(q2, [[1.0]])


def test_parking_eps_jump_raises_accepting_mass():
    a, aps = parking()
    env = Parking()
    lay = ProductLayer(a, aps)
    (tgt,) = a.eps_targets()
    s = (np.array([15.0]), np.array([10.0]))
    q = lay.initial_belief((1,))
    acc_before = float(q[0, list(a.accepting)].sum())
    e = np.zeros((1, a.n_states))
    e[0, tgt] = 1.0
    s, q = step_product(env, lay, s, q, [np.array([0.0])], e, tau=0.1)
    acc_mid = float(q[0, list(a.accepting)].sum())
    assert acc_mid > acc_before
    # next step (x=16) keeps it, no further jump attempted
    e0 = np.zeros((1, a.n_states))
    e0[0, a.initial] = 1.0
    s, q = step_product(env, lay, s, q, [np.array([0.0])], e0, tau=0.1)
    assert float(q[0, list(a.accepting)].sum()) >= acc_mid - 1e-12
    assert acc_mid > 0.99


def test_step_discrete_grass_trap():
    a, aps = parking()
    env = Parking()
    s = (np.array(25.0), np.array(10.0))
    _, q = step_discrete(env, a, aps, s, a.initial, [np.array(0.0)])
    assert q in a.rejecting_sinks()


def test_step_discrete_true_loop_and_bad_eps():
    env = SignalEnv(("a",))
    s = (np.array(0.5),)
    _, q = step_discrete(env, loop1(), [AP_A], s, 0, [np.array(0.0)])
    assert q == 0
    a = three_state_eps()
    _, q = step_discrete(env, a, [AP_A], s, 0, [np.array(0.0)], eps_choice=1)
    assert q == 0  # 1 is not an eps target: stay
    _, q = step_discrete(env, a, [AP_A], s, 0, [np.array(0.0)], eps_choice=2)
    assert q == 2


def test_greedy_eps_discrete_parking():
    a, aps = parking()
    (tgt,) = a.eps_targets()
    inside = hard_label(aps, {"x": 15.0})
    assert greedy_eps_discrete(a, a.initial, inside) == tgt
    assert greedy_eps_discrete(a, a.initial, hard_label(aps, {"x": 5.0})) is None


def test_greedy_eps_soft_matches_hard_labels():
    a, aps = parking()
    lay = ProductLayer(a, aps)
    for x in (5.0, 15.0, 25.0, 35.0, 45.0):
        p = lay.ap_probs({"x": np.array([x]), "v": np.array([1.0])}, hard=True)
        e = lay.greedy_eps(p)
        label = hard_label(aps, {"x": x})
        t = greedy_eps_discrete(a, a.initial, label)
        want = np.zeros(a.n_states)
        want[a.initial if t is None else t] = 1.0
        np.testing.assert_array_equal(e[0], want)


def test_hard_equivalence_small(rng):
    """Hard labels + one-hot belief + one-hot e reproduce step_discrete."""
    env = SignalEnv()
    for text, a, aps in bundled_automata()[:10]:
        lay = ProductLayer(a, aps)
        for _ in range(100):
            s = tuple(rng.uniform(-1, 1, 1) for _ in range(3))
            q = int(rng.integers(a.n_states))
            j = int(rng.integers(a.n_states))
            qv = np.zeros((1, a.n_states))
            qv[0, q] = 1
            ev = np.zeros((1, a.n_states))
            ev[0, j] = 1
            act = [np.zeros(1)] * 3
            _, q_soft = step_product(env, lay, s, qv, act, ev, hard=True)
            _, q_hard = step_discrete(env, a, aps, tuple(x[0] for x in s), q, act, eps_choice=j)
            want = np.zeros(a.n_states)
            want[q_hard] = 1
            np.testing.assert_array_equal(q_soft[0], want, err_msg=text)


# ---------------------------------------------------------------- reward / discount

def test_reward_discount_examples():
    lay = ProductLayer(two_state(), [AP_A])
    rp = RewardParams(gamma=0.99)
    assert abs(rp.beta - 0.9) < 1e-12
    r, d = reward_discount(lay, np.array([0.0, 1.0]), rp)
    assert abs(r - 0.1) < 1e-12 and abs(d - 0.9) < 1e-12
    r, d = reward_discount(lay, np.array([1.0, 0.0]), rp)
    assert r == 0 and abs(d - 0.99) < 1e-15
    r, d = reward_discount(lay, np.array([0.5, 0.5]), rp)
    assert abs(r - 0.05) < 1e-12 and abs(d - 0.945) < 1e-12


def test_discrete_reward_matches_one_hot():
    a = two_state()
    lay = ProductLayer(a, [AP_A])
    rp = RewardParams(0.999)
    for q in range(2):
        qv = np.eye(2)[q]
        r, d = reward_discount(lay, qv, rp)
        rd, dd = discrete_reward(a, q, rp)
        assert (float(r), float(d)) == (rd, dd)


def test_beta_limit():
    # (1 - gamma) / (1 - beta) -> 0
    ratios = [(1 - g) / (1 - RewardParams(g).beta) for g in (0.9, 0.99, 0.999, 0.9999)]
    assert all(x > y for x, y in zip(ratios, ratios[1:]))
    assert ratios[-1] < 0.011


def test_reward_params_range():
    with pytest.raises(ValueError):
        RewardParams(1.0)
