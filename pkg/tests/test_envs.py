import math

import numpy as np
import pytest

from tempograd.diff import grad_check, ops
from tempograd.envs import CartPole, Parking, PointMass, make_env
from tempograd.ltl import LassoTrace, atoms, eval_lasso, parse_ltl

from conftest import PHI_P


def run(env, s, action, steps):
    for _ in range(steps):
        s = env.step(s, action)
    return s


# ---------------------------------------------------------------- parking

def test_parking_no_braking():
    env = Parking()
    x, v = env.step((0.0, 10.0), [0.0])
    assert v == 10.0 and x == 1.0


def test_parking_stop_event():
    env = Parking()
    _, v = env.step((0.0, 0.05), [1.0])
    assert v == 0.0


def test_parking_action_clamped():
    env = Parking()
    assert env.step((0.0, 10.0), [20.0])[1] == env.step((0.0, 10.0), [10.0])[1]
    assert env.step((0.0, 10.0), [-3.0])[1] == 10.0


def test_parking_stop_position_a4():
    x, v = run(Parking(), Parking().initial(1), [np.array([4.0])], 200)
    assert v[0] == 0 and 12 <= x[0] <= 13


def _parking_verdict(a):
    env = Parking()
    aps = atoms(parse_ltl(PHI_P))
    s = env.initial(1)
    xs = []
    for _ in range(env.horizon):
        xs.append(float(s[0][0]))
        s = env.step(s, [np.array([a])])
    word = [frozenset(ap.name for ap in aps if ap.holds(x)) for x in xs]
    return xs, eval_lasso(parse_ltl(PHI_P), LassoTrace(word[:-1], word[-1:]))


def test_parking_reach_band():
    for a in np.arange(2.6, 4.9 + 1e-9, 0.05):
        xs, ok = _parking_verdict(a)
        assert 10 < xs[-1] < 20, a
        assert not any(20 < x < 30 for x in xs), a
        assert ok, a


def test_parking_violation_band_low():
    for a in np.arange(0.0, 2.3 + 1e-9, 0.05):
        assert not _parking_verdict(a)[1], a


def test_parking_violation_band_high():
    # stated band [5.2, 10]; the explicit position update overshoots the
    # continuous stop v0^2 / 2a by about v0 dt / 2, so 5.2 still parks at 10.12 m
    bad = [float(round(a, 2)) for a in np.arange(5.2, 10 + 1e-9, 0.05) if _parking_verdict(a)[1]]
    assert bad == []


# ---------------------------------------------------------------- point mass

def test_pointmass_fixed_point():
    s = (np.zeros(1),) * 4
    out = PointMass().step(s, [np.zeros(1), np.zeros(1)])
    assert all(float(v[0]) == 0 for v in out)


def test_pointmass_one_step():
    x, y, vx, vy = PointMass().step((0.0, 0.0, 0.0, 0.0), [1.0, 0.0])
    assert abs(vx - 0.1) < 1e-15 and abs(x - 0.01) < 1e-15 and y == 0 and vy == 0


def _plain_pointmass(state, forces, dt=0.1, drag=0.1, lim=1.0):
    x, y, vx, vy = state
    out = []
    for fx, fy in forces:
        fx = min(max(fx, -lim), lim)
        fy = min(max(fy, -lim), lim)
        vx = vx + (fx - drag * vx) * dt
        vy = vy + (fy - drag * vy) * dt
        x = x + vx * dt
        y = y + vy * dt
        out.append((x, y, vx, vy))
    return out


def test_pointmass_matches_plain_simulator(rng):
    env = PointMass()
    forces = rng.uniform(-1.5, 1.5, size=(100, 2))
    s0 = tuple(float(v) for v in rng.uniform(-0.1, 0.1, 4))
    want = _plain_pointmass(s0, [tuple(map(float, f)) for f in forces])
    s = s0
    for t in range(100):
        s = env.step(s, [forces[t, 0], forces[t, 1]])
        assert tuple(float(v) for v in s) == want[t]


# ---------------------------------------------------------------- cart-pole

def test_cartpole_down_is_fixed():
    env = CartPole()
    s = (0.0, 0.0, 0.0, 0.0)
    assert tuple(map(float, run(env, s, [0.0], 100))) == (0.0, 0.0, 0.0, 0.0)


def test_cartpole_up_equilibrium():
    env = CartPole()
    s = run(env, (0.0, 0.0, math.pi, 0.0), [0.0], 100)
    # sin(pi) is 1.2e-16 in floating point, so only near-equilibrium is observable
    assert abs(float(s[2]) - math.pi) < 1e-9 and abs(float(s[3])) < 1e-9


def test_cartpole_energy_drift():
    env = CartPole()
    s = (0.0, 0.0, 0.3, 0.0)
    e0 = env.energy(s)
    worst = 0.0
    for _ in range(500):
        s = env.step(s, [0.0])
        worst = max(worst, abs(env.energy(s) - e0) / abs(e0))
    assert worst < 0.01


def test_cartpole_pole_z():
    env = CartPole()
    sig = env.signals((0.0, 0.0, 0.0, 0.0))
    assert sig["pole_z"] == -1.0 and sig["cos_theta"] == 1.0
    sig = env.signals((0.0, 0.0, math.pi, 0.0))
    assert abs(sig["pole_z"] - 1.0) < 1e-12


def test_cartpole_signals_cover_formula_aps():
    from conftest import PHI_CARTPOLE

    names = {ap.signal for ap in atoms(parse_ltl(PHI_CARTPOLE))}
    assert names <= set(CartPole().spec.signals)


# ---------------------------------------------------------------- differentiability

def _functional(env, steps, make_state):
    w = np.linspace(0.5, 1.5, env.spec.state_dim)

    def f(z):
        s, act = make_state(z)
        for _ in range(steps):
            s = env.step(s, act)
        return ops.sum(ops.mul(ops.stack(list(s)), w))

    return f


@pytest.mark.parametrize(
    "env,point",
    [
        (Parking(), [3.0, 0.0, 10.0]),
        (PointMass(), [0.4, -0.7, 0.05, -0.02, 0.1, 0.0]),
        (CartPole(), [5.0, 0.0, 0.1, 0.3, -0.2]),
    ],
    ids=["parking", "pointmass", "cartpole"],
)
def test_ten_step_functional_fd(env, point):
    k = env.spec.action_dim

    def make_state(z):
        act = [z[i] for i in range(k)]
        s = tuple(z[k + i] for i in range(env.spec.state_dim))
        return s, act

    rep = grad_check(_functional(env, 10, make_state), point, tolerance=1e-4)
    assert rep.passed, str(rep)
    assert "kink proximity" not in rep.flags


def test_determinism():
    for name in ("pointmass", "cartpole"):
        env = make_env(name)
        a = env.initial(4, np.random.default_rng(3))
        b = env.initial(4, np.random.default_rng(3))
        act = [np.full(4, 0.3)] * env.spec.action_dim
        sa, sb = run(env, a, act, 50), run(env, b, act, 50)
        assert all(np.array_equal(x, y) for x, y in zip(sa, sb))


def test_unknown_env():
    with pytest.raises(KeyError):
        make_env("hopper")
