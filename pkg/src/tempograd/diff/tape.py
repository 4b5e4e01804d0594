"""Append-only reverse-mode tape over numpy values.

Every node stores its value, the indices of the nodes it was computed from and
one vector-Jacobian closure per parent.  Values may be scalars or arrays; a
leading batch axis lets several independent rollouts share one tape.
"""
from __future__ import annotations

import math

import numpy as np


class Tape:
    def __init__(self):
        self.values: list = []
        self.parents: list = []
        self.vjps: list = []
        self.ops: list = []
        # smallest distance of any relu/min/max/clamp operand to its kink
        self.min_kink = math.inf

    def __len__(self):
        return len(self.values)

    def var(self, value) -> "DiffValue":
        return self._push("var", np.array(value, dtype=float), (), ())

    def const(self, value) -> "DiffValue":
        return self._push("const", np.array(value, dtype=float), (), ())

    def _push(self, op, value, parents, vjps) -> "DiffValue":
        self.values.append(value)
        self.parents.append(parents)
        self.vjps.append(vjps)
        self.ops.append(op)
        return DiffValue(self, len(self.values) - 1, value)

    def record(self, op: str, value, operands) -> "DiffValue":
        """Add a node; ``operands`` is a sequence of ``(input, vjp)`` pairs and
        inputs that are not on this tape are treated as constants."""
        parents = []
        vjps = []
        for x, fn in operands:
            if isinstance(x, DiffValue):
                if x.tape is not self:
                    raise ValueError("operands belong to different tapes")
                parents.append(x.index)
                vjps.append(fn)
        return self._push(op, value, tuple(parents), tuple(vjps))

    def note_kink(self, distance):
        d = float(np.min(np.abs(distance))) if np.size(distance) else math.inf
        if d < self.min_kink:
            self.min_kink = d

    def _sweep(self, y, checked):
        grads: list = [None] * (y.index + 1)
        grads[y.index] = np.ones_like(y.value)
        parents, vjps, ops = self.parents, self.vjps, self.ops
        for i in range(y.index, -1, -1):
            g = grads[i]
            if g is None or not parents[i]:
                continue
            for p, fn in zip(parents[i], vjps[i]):
                contrib = fn(g)
                if checked and not np.all(np.isfinite(contrib)):
                    raise FloatingPointError(
                        f"non-finite gradient at node {i} ({ops[i]}) flowing into node {p} ({ops[p]})"
                    )
                if grads[p] is None:
                    grads[p] = contrib
                else:
                    grads[p] = grads[p] + contrib
        return grads

    def backward(self, y: "DiffValue", wrt) -> list:
        """Gradients of scalar ``y`` with respect to each node in ``wrt``."""
        if y.tape is not self:
            raise ValueError("output is not on this tape")
        if np.size(y.value) != 1:
            raise ValueError(f"backward needs a scalar output, got shape {np.shape(y.value)}")
        grads = self._sweep(y, checked=False)
        if any(g is not None and not np.all(np.isfinite(g)) for g in (grads[x.index] for x in wrt if x.index < len(grads))):
            # redo with per-edge checks to name the node that produced it
            grads = self._sweep(y, checked=True)
        out = []
        for x in wrt:
            g = grads[x.index] if x.index < len(grads) else None
            out.append(np.zeros_like(x.value) if g is None else np.broadcast_to(g, np.shape(x.value)).copy())
        return out


class DiffValue:
    """Handle to one tape node; ``value`` caches the forward result."""

    __slots__ = ("tape", "index", "value")
    __array_priority__ = 1000

    def __init__(self, tape: Tape, index: int, value):
        self.tape = tape
        self.index = index
        self.value = value

    @property
    def shape(self):
        return np.shape(self.value)

    def __len__(self):
        return len(self.value)

    def __repr__(self):
        return f"DiffValue(node={self.index}, value={self.value!r})"

    def __float__(self):
        return float(self.value)

    def __add__(self, o):
        from . import ops
        return ops.add(self, o)

    def __radd__(self, o):
        from . import ops
        return ops.add(o, self)

    def __sub__(self, o):
        from . import ops
        return ops.sub(self, o)

    def __rsub__(self, o):
        from . import ops
        return ops.sub(o, self)

    def __mul__(self, o):
        from . import ops
        return ops.mul(self, o)

    def __rmul__(self, o):
        from . import ops
        return ops.mul(o, self)

    def __truediv__(self, o):
        from . import ops
        return ops.div(self, o)

    def __rtruediv__(self, o):
        from . import ops
        return ops.div(o, self)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __getitem__(self, idx):
        from . import ops
        return ops.take(self, idx)


def value_of(x):
    return x.value if isinstance(x, DiffValue) else x


def backward(y: DiffValue, wrt) -> list:
    return y.tape.backward(y, wrt)
