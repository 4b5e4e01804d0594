"""Small differentiable environments.

States are tuples of per-feature values, each of shape ``(batch,)`` (or
scalars).  Actions are sequences with one entry per action dimension.  Steps
are written with :mod:`tempograd.diff.ops`, so they run on plain arrays or on
tape values alike.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import ClassVar

import numpy as np

from .diff import ops


@dataclass(frozen=True)
class EnvSpec:
    name: str
    features: tuple
    action_dim: int
    action_low: tuple
    action_high: tuple
    dt: float
    horizon: int
    signals: tuple

    @property
    def state_dim(self):
        return len(self.features)


class Env:
    spec: EnvSpec
    # soft-label temperature used when a config does not set one
    default_tau: ClassVar[float] = 1.0

    @property
    def dt(self):
        return self.spec.dt

    def initial(self, n: int, rng: np.random.Generator):
        raise NotImplementedError

    def step(self, s, action):
        raise NotImplementedError

    def signals(self, s) -> dict:
        return dict(zip(self.spec.features, s))

    def clip_action(self, action):
        return [ops.clamp(a, lo, hi) for a, lo, hi in zip(action, self.spec.action_low, self.spec.action_high)]


@dataclass
class Parking(Env):
    """Braking car on a line.  x in meters, v in m/s, a = deceleration."""

    default_tau: ClassVar[float] = 0.1

    dt: float = 0.1
    horizon: int = 200
    x0: float = 0.0
    v0: float = 10.0
    max_decel: float = 10.0
    spec: EnvSpec = field(init=False)

    def __post_init__(self):
        self.spec = EnvSpec("parking", ("x", "v"), 1, (0.0,), (self.max_decel,), self.dt, self.horizon, ("x", "v"))

    def initial(self, n, rng=None):
        return (np.full(n, self.x0), np.full(n, self.v0))

    def step(self, s, action):
        x, v = s
        a = ops.clamp(action[0], 0.0, self.max_decel)
        v_new = ops.relu(ops.sub(v, ops.mul(a, self.dt)))
        x_new = ops.add(x, ops.mul(v, self.dt))
        return (x_new, v_new)


@dataclass
class PointMass(Env):
    """Planar point with linear drag, semi-implicit Euler."""

    default_tau: ClassVar[float] = 0.2

    dt: float = 0.1
    horizon: int = 100
    drag: float = 0.1
    force_limit: float = 1.0
    init_box: float = 0.1
    spec: EnvSpec = field(init=False)

    def __post_init__(self):
        lim = self.force_limit
        feats = ("x", "y", "vx", "vy")
        self.spec = EnvSpec("pointmass", feats, 2, (-lim, -lim), (lim, lim), self.dt, self.horizon, feats)

    def initial(self, n, rng):
        b = self.init_box
        return (rng.uniform(-b, b, n), rng.uniform(-b, b, n), np.zeros(n), np.zeros(n))

    def step(self, s, action):
        x, y, vx, vy = s
        fx, fy = self.clip_action(action)
        vx2 = ops.add(vx, ops.mul(ops.sub(fx, ops.mul(self.drag, vx)), self.dt))
        vy2 = ops.add(vy, ops.mul(ops.sub(fy, ops.mul(self.drag, vy)), self.dt))
        return (ops.add(x, ops.mul(vx2, self.dt)), ops.add(y, ops.mul(vy2, self.dt)), vx2, vy2)


@dataclass
class CartPole(Env):
    """Frictionless cart-pole; theta = 0 hangs straight down."""

    default_tau: ClassVar[float] = 0.1

    dt: float = 0.02
    horizon: int = 500
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    gravity: float = 9.81
    force_limit: float = 20.0
    init_box: float = 0.05
    spec: EnvSpec = field(init=False)

    def __post_init__(self):
        lim = self.force_limit
        self.spec = EnvSpec(
            "cartpole",
            ("x", "x_dot", "theta", "theta_dot"),
            1,
            (-lim,),
            (lim,),
            self.dt,
            self.horizon,
            ("position_x", "velocity_x", "cos_theta", "sin_theta", "omega", "pole_z"),
        )

    def initial(self, n, rng):
        b = self.init_box
        return tuple(rng.uniform(-b, b, n) for _ in range(4))

    def accelerations(self, s, force):
        x, xd, th, thd = s
        m, l, g = self.pole_mass, self.half_length, self.gravity
        total = self.cart_mass + m
        sin, cos = ops.sin(th), ops.cos(th)
        # pole centre of mass at (x + l sin(theta), -l cos(theta))
        temp = ops.div(ops.add(force, ops.mul(m * l, ops.mul(ops.mul(thd, thd), sin))), total)
        denom = ops.mul(l, ops.sub(4.0 / 3.0, ops.div(ops.mul(m, ops.mul(cos, cos)), total)))
        thdd = ops.neg(ops.div(ops.add(ops.mul(g, sin), ops.mul(cos, temp)), denom))
        xdd = ops.sub(temp, ops.div(ops.mul(m * l, ops.mul(thdd, cos)), total))
        return xdd, thdd

    def step(self, s, action):
        x, xd, th, thd = s
        (force,) = self.clip_action(action)
        xdd, thdd = self.accelerations(s, force)
        xd2 = ops.add(xd, ops.mul(xdd, self.dt))
        thd2 = ops.add(thd, ops.mul(thdd, self.dt))
        return (ops.add(x, ops.mul(xd2, self.dt)), xd2, ops.add(th, ops.mul(thd2, self.dt)), thd2)

    def signals(self, s):
        x, xd, th, thd = s
        cos = ops.cos(th)
        return {
            "position_x": x,
            "velocity_x": xd,
            "cos_theta": cos,
            "sin_theta": ops.sin(th),
            "omega": thd,
            "pole_z": ops.mul(-2.0 * self.half_length, cos),
        }

    def energy(self, s):
        """Total mechanical energy (plain arrays)."""
        x, xd, th, thd = (np.asarray(v, dtype=float) for v in s)
        m, l, g = self.pole_mass, self.half_length, self.gravity
        total = self.cart_mass + m
        kin = 0.5 * total * xd**2 + m * l * np.cos(th) * xd * thd + 0.5 * m * l**2 * (4.0 / 3.0) * thd**2
        return kin - m * g * l * np.cos(th)


ENVS = {"parking": Parking, "pointmass": PointMass, "cartpole": CartPole}


def make_env(name: str, **overrides) -> Env:
    if name not in ENVS:
        raise KeyError(f"unknown environment {name!r}; choose from {sorted(ENVS)}")
    return ENVS[name](**overrides)


def env_params(env: Env) -> dict:
    return {k: getattr(env, k) for k in env.__dataclass_fields__ if k != "spec"}


def with_params(env: Env, **kw) -> Env:
    return replace(env, **kw)
