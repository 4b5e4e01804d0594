"""Differentiable primitives.

Every function accepts plain numbers/arrays or :class:`DiffValue` operands.
With no tape operand the result is a plain numpy value, so the same model
code runs both as a cheap forward pass and as a recorded computation.
"""
from __future__ import annotations

import numpy as np

from .tape import DiffValue, Tape, value_of

SIGMOID_SATURATION = 36.0


def _tape(*xs) -> Tape | None:
    for x in xs:
        if isinstance(x, DiffValue):
            return x.tape
    return None


def _arr(x):
    return np.asarray(value_of(x), dtype=float)


def unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (reverses numpy broadcasting)."""
    g = np.asarray(g)
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _binary(op, fn, a, b):
    try:
        return fn(a, b)
    except ValueError:
        raise ValueError(f"{op}: shape mismatch {np.shape(a)} vs {np.shape(b)}") from None


def var(tape: Tape, value):
    return tape.var(value)


def const(value):
    return np.array(value, dtype=float)


# ------------------------------------------------------------- arithmetic

def add(a, b):
    av, bv = _arr(a), _arr(b)
    out = _binary("add", np.add, av, bv)
    t = _tape(a, b)
    if t is None:
        return out
    sa, sb = av.shape, bv.shape
    return t.record("add", out, ((a, lambda g: unbroadcast(g, sa)), (b, lambda g: unbroadcast(g, sb))))


def sub(a, b):
    av, bv = _arr(a), _arr(b)
    out = _binary("sub", np.subtract, av, bv)
    t = _tape(a, b)
    if t is None:
        return out
    sa, sb = av.shape, bv.shape
    return t.record("sub", out, ((a, lambda g: unbroadcast(g, sa)), (b, lambda g: unbroadcast(-g, sb))))


def mul(a, b):
    av, bv = _arr(a), _arr(b)
    out = _binary("mul", np.multiply, av, bv)
    t = _tape(a, b)
    if t is None:
        return out
    return t.record(
        "mul", out,
        ((a, lambda g: unbroadcast(g * bv, av.shape)), (b, lambda g: unbroadcast(g * av, bv.shape))),
    )


def div(a, b):
    av, bv = _arr(a), _arr(b)
    if np.any(bv == 0):
        raise ZeroDivisionError("div: division by zero")
    out = _binary("div", np.divide, av, bv)
    t = _tape(a, b)
    if t is None:
        return out
    return t.record(
        "div", out,
        (
            (a, lambda g: unbroadcast(g / bv, av.shape)),
            (b, lambda g: unbroadcast(-g * out / bv, bv.shape)),
        ),
    )


def neg(a):
    out = -_arr(a)
    t = _tape(a)
    if t is None:
        return out
    return t.record("neg", out, ((a, lambda g: -g),))


# ------------------------------------------------------------- elementwise

def exp(a):
    out = np.exp(_arr(a))
    t = _tape(a)
    if t is None:
        return out
    return t.record("exp", out, ((a, lambda g: g * out),))


def log(a):
    av = _arr(a)
    if np.any(av <= 0):
        raise ValueError("log: argument must be positive")
    out = np.log(av)
    t = _tape(a)
    if t is None:
        return out
    return t.record("log", out, ((a, lambda g: g / av),))


def tanh(a):
    out = np.tanh(_arr(a))
    t = _tape(a)
    if t is None:
        return out
    return t.record("tanh", out, ((a, lambda g: g * (1.0 - out * out)),))


def sin(a):
    av = _arr(a)
    out = np.sin(av)
    t = _tape(a)
    if t is None:
        return out
    return t.record("sin", out, ((a, lambda g: g * np.cos(av)),))


def cos(a):
    av = _arr(a)
    out = np.cos(av)
    t = _tape(a)
    if t is None:
        return out
    return t.record("cos", out, ((a, lambda g: -g * np.sin(av)),))


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(np.clip(z, -SIGMOID_SATURATION, SIGMOID_SATURATION)))
    s = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    # beyond the saturation point the result is exactly 0 or 1
    s = np.where(z > SIGMOID_SATURATION, 1.0, s)
    s = np.where(z < -SIGMOID_SATURATION, 0.0, s)
    return s


def sigmoid(a):
    out = _sigmoid(_arr(a))
    t = _tape(a)
    if t is None:
        return out
    return t.record("sigmoid", out, ((a, lambda g: g * out * (1.0 - out)),))


def relu(a):
    av = _arr(a)
    out = np.where(av > 0, av, 0.0)
    t = _tape(a)
    if t is None:
        return out
    t.note_kink(av)
    mask = (av > 0).astype(float)
    return t.record("relu", out, ((a, lambda g: g * mask),))


def minimum(a, b):
    av, bv = _arr(a), _arr(b)
    first = _binary("min", np.less_equal, av, bv)
    out = np.where(first, av, bv)
    t = _tape(a, b)
    if t is None:
        return out
    t.note_kink(av - bv)
    return t.record(
        "min", out,
        (
            (a, lambda g: unbroadcast(g * first, av.shape)),
            (b, lambda g: unbroadcast(g * ~first, bv.shape)),
        ),
    )


def maximum(a, b):
    av, bv = _arr(a), _arr(b)
    first = _binary("max", np.greater_equal, av, bv)
    out = np.where(first, av, bv)
    t = _tape(a, b)
    if t is None:
        return out
    t.note_kink(av - bv)
    return t.record(
        "max", out,
        (
            (a, lambda g: unbroadcast(g * first, av.shape)),
            (b, lambda g: unbroadcast(g * ~first, bv.shape)),
        ),
    )


def clamp(a, lo, hi):
    """Clip to ``[lo, hi]``; gradient 1 inside (bounds included), 0 outside."""
    av = _arr(a)
    out = np.clip(av, lo, hi)
    t = _tape(a)
    if t is None:
        return out
    t.note_kink(np.minimum(np.abs(av - lo), np.abs(av - hi)))
    inside = ((av >= lo) & (av <= hi)).astype(float)
    return t.record("clamp", out, ((a, lambda g: g * inside),))


# ------------------------------------------------------------- reductions / linear algebra

def sum(a, axis=None, keepdims=False):
    av = _arr(a)
    out = np.sum(av, axis=axis, keepdims=keepdims)
    t = _tape(a)
    if t is None:
        return out
    shape = av.shape

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, shape)

    return t.record("sum", out, ((a, vjp),))


def prod(a, axis=-1):
    """Product along ``axis``; the gradient uses exclusive prefix/suffix
    products, so exact zeros are handled."""
    av = _arr(a)
    out = np.prod(av, axis=axis)
    t = _tape(a)
    if t is None:
        return out
    x = np.moveaxis(av, axis, -1)
    ones = np.ones(x.shape[:-1] + (1,))
    left = np.cumprod(np.concatenate([ones, x[..., :-1]], axis=-1), axis=-1)
    right = np.cumprod(np.concatenate([ones, x[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    partial = np.moveaxis(left * right, -1, axis)

    def vjp(g):
        return np.expand_dims(g, axis) * partial

    return t.record("prod", out, ((a, vjp),))


def power(a, k: int):
    """``a ** k`` for a non-negative integer ``k``."""
    k = int(k)
    if k < 0:
        raise ValueError("power: exponent must be a non-negative integer")
    av = _arr(a)
    out = av**k
    t = _tape(a)
    if t is None:
        return out
    d = k * av ** (k - 1) if k > 0 else np.zeros_like(av)
    return t.record("power", out, ((a, lambda g: g * d),))


def dot(a, b):
    """Inner product over the last axis (batched over leading axes)."""
    av, bv = _arr(a), _arr(b)
    if av.shape[-1:] != bv.shape[-1:]:
        raise ValueError(f"dot: shape mismatch {av.shape} vs {bv.shape}")
    out = np.sum(_binary("dot", np.multiply, av, bv), axis=-1)
    t = _tape(a, b)
    if t is None:
        return out
    return t.record(
        "dot", out,
        (
            (a, lambda g: unbroadcast(np.expand_dims(g, -1) * bv, av.shape)),
            (b, lambda g: unbroadcast(np.expand_dims(g, -1) * av, bv.shape)),
        ),
    )


def matvec(w, x):
    """``w`` of shape (m, n) applied to the last axis of ``x`` (..., n) -> (..., m)."""
    wv, xv = _arr(w), _arr(x)
    if wv.ndim != 2 or xv.shape[-1:] != (wv.shape[1],):
        raise ValueError(f"matvec: shape mismatch {wv.shape} vs {xv.shape}")
    out = xv @ wv.T
    t = _tape(w, x)
    if t is None:
        return out
    m, n = wv.shape

    def vjp_w(g):
        return g.reshape(-1, m).T @ xv.reshape(-1, n)

    return t.record("matvec", out, ((w, vjp_w), (x, lambda g: g @ wv)))


def softmax(a, axis=-1):
    av = _arr(a)
    z = np.exp(av - np.max(av, axis=axis, keepdims=True))
    out = z / np.sum(z, axis=axis, keepdims=True)
    t = _tape(a)
    if t is None:
        return out
    return t.record(
        "softmax", out,
        ((a, lambda g: out * (g - np.sum(g * out, axis=axis, keepdims=True))),),
    )


# ------------------------------------------------------------- structure

def stack(xs, axis=-1):
    vals = [_arr(x) for x in xs]
    out = np.stack(vals, axis=axis)
    t = _tape(*xs)
    if t is None:
        return out
    pairs = []
    for i, x in enumerate(xs):
        shape = vals[i].shape
        pairs.append((x, lambda g, i=i, shape=shape: unbroadcast(np.take(g, i, axis=axis), shape)))
    return t.record("stack", out, pairs)


def take(a, idx, axis=None):
    """``a[idx]`` (``axis=None``) or ``np.take(a, idx, axis)``."""
    av = _arr(a)
    out = av[idx] if axis is None else np.take(av, idx, axis=axis)
    t = _tape(a)
    if t is None:
        return np.array(out, dtype=float)

    fancy = any(isinstance(i, (list, np.ndarray)) for i in (idx if isinstance(idx, tuple) else (idx,)))

    def vjp(g):
        z = np.zeros_like(av)
        if axis is None and not fancy:
            z[idx] = g
        elif axis is None:
            np.add.at(z, idx, g)
        else:
            sl = [slice(None)] * av.ndim
            sl[axis] = idx
            np.add.at(z, tuple(sl), g)
        return z

    return t.record("take", np.array(out, dtype=float), ((a, vjp),))


def where(cond, a, b):
    """Select with a constant boolean mask."""
    cond = np.asarray(cond, dtype=bool)
    av, bv = _arr(a), _arr(b)
    out = np.where(cond, av, bv)
    t = _tape(a, b)
    if t is None:
        return out
    return t.record(
        "where", out,
        (
            (a, lambda g: unbroadcast(g * cond, av.shape)),
            (b, lambda g: unbroadcast(g * ~cond, bv.shape)),
        ),
    )
