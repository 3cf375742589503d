"""Reverse-mode automatic differentiation on dense float64 arrays.

A DiffValue wraps a numpy array together with a gradient buffer and a
backward rule; every operation builds a fresh node, so the graph is
rebuilt on each forward pass (define-by-run).  The op set is the minimum
needed for MLPs with batch normalization and kernel-based losses:
broadcast arithmetic, activations, reductions, matmul, pairwise squared
distances, and Adam.

Broadcasting is deliberately restricted to the two cases the networks
use: scalar against tensor, and row vector against matrix.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "DiffValue",
    "AdamState",
    "BatchNormState",
    "matmul",
    "pairwise_sq_dists",
    "batchnorm",
    "adam_step",
    "zero_grads",
    "take_rows",
]


def _is_scalar_shape(shape: tuple) -> bool:
    return int(np.prod(shape, dtype=np.int64)) == 1


def _is_rowvec_vs_matrix(small: tuple, big: tuple) -> bool:
    # (d,) or (1, d) broadcast over (n, d)
    if len(big) != 2:
        return False
    if small == (big[1],) or small == (1, big[1]):
        return True
    return False


def _broadcast_shape(sa: tuple, sb: tuple) -> tuple:
    if sa == sb:
        return sa
    if _is_scalar_shape(sa):
        return sb
    if _is_scalar_shape(sb):
        return sa
    if _is_rowvec_vs_matrix(sa, sb):
        return sb
    if _is_rowvec_vs_matrix(sb, sa):
        return sa
    raise ShapeError(f"shapes {sa} and {sb} are not broadcast-compatible "
                     "(only scalar<->tensor and row-vector<->matrix supported)")


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient over the axes that broadcasting expanded."""
    if g.shape == shape:
        return g
    if _is_scalar_shape(shape):
        return np.sum(g).reshape(shape)
    # row vector over matrix: sum out axis 0
    return np.sum(g, axis=0).reshape(shape)


class DiffValue:
    """A node in the computation graph: float64 value plus accumulated grad.

    Gradients are zero-initialized and accumulate across backward() calls;
    callers zero parameter grads between optimizer steps.
    """

    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, _parents=(), _vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self._parents = tuple(_parents)
        self._vjp = _vjp

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    def __repr__(self) -> str:
        return f"DiffValue(shape={self.shape})"

    # -- broadcast arithmetic -------------------------------------------

    @staticmethod
    def _coerce(other) -> "DiffValue":
        if isinstance(other, DiffValue):
            return other
        return DiffValue(np.asarray(other, dtype=np.float64))

    def __add__(self, other):
        b = self._coerce(other)
        _broadcast_shape(self.shape, b.shape)
        sa, sb = self.shape, b.shape
        return DiffValue(
            self.value + b.value,
            (self, b),
            lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
        )

    __radd__ = __add__

    def __sub__(self, other):
        b = self._coerce(other)
        _broadcast_shape(self.shape, b.shape)
        sa, sb = self.shape, b.shape
        return DiffValue(
            self.value - b.value,
            (self, b),
            lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)),
        )

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        b = self._coerce(other)
        _broadcast_shape(self.shape, b.shape)
        sa, sb = self.shape, b.shape
        av, bv = self.value, b.value
        return DiffValue(
            av * bv,
            (self, b),
            lambda g: (_unbroadcast(g * bv, sa), _unbroadcast(g * av, sb)),
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def __truediv__(self, other):
        if isinstance(other, DiffValue):
            return self * other.reciprocal()
        return self * (1.0 / float(other))

    # -- elementwise unary ops ------------------------------------------

    def relu(self):
        mask = self.value > 0  # subgradient 0 at 0
        return DiffValue(np.where(mask, self.value, 0.0), (self,),
                         lambda g: (np.where(mask, g, 0.0),))

    def sigmoid(self):
        x = self.value
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return DiffValue(out, (self,), lambda g: (g * out * (1.0 - out),))

    def tanh(self):
        out = np.tanh(self.value)
        return DiffValue(out, (self,), lambda g: (g * (1.0 - out * out),))

    def sqrt(self):
        if np.any(self.value < 0):
            raise DomainError("sqrt of negative input")
        out = np.sqrt(self.value)
        return DiffValue(out, (self,), lambda g: (g * (0.5 / out),))

    def reciprocal(self):
        v = self.value
        out = 1.0 / v
        return DiffValue(out, (self,), lambda g: (-g * out * out,))

    def log(self):
        if np.any(self.value <= 0):
            raise DomainError("log of non-positive input")
        v = self.value
        return DiffValue(np.log(v), (self,), lambda g: (g / v,))

    def square(self):
        v = self.value
        return DiffValue(v * v, (self,), lambda g: (2.0 * v * g,))

    # -- reductions ------------------------------------------------------

    def sum(self, axis=None):
        shape = self.shape
        if axis is not None and not (-len(shape) <= axis < len(shape)):
            raise ShapeError(f"axis {axis} invalid for shape {shape}")
        out = np.sum(self.value, axis=axis)

        def vjp(g):
            if axis is None:
                return (np.broadcast_to(g, shape).copy(),)
            return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

        return DiffValue(out, (self,), vjp)

    def mean(self, axis=None):
        shape = self.shape
        count = self.size if axis is None else shape[axis]
        return self.sum(axis=axis) * (1.0 / count)

    # -- backward ---------------------------------------------------------

    def backward(self) -> None:
        """Accumulate d(self)/d(node) into .grad of every reachable node.

        self must be scalar.  Repeated calls accumulate (each call adds
        the full gradient again).
        """
        if self.size != 1:
            raise ShapeError("backward() requires a scalar root")
        topo: list[DiffValue] = []
        seen: set[int] = set()
        stack: list[tuple[DiffValue, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        pending: dict[int, np.ndarray] = {id(self): np.ones_like(self.value)}
        for node in reversed(topo):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            node.grad = node.grad + g
            if node._vjp is None:
                continue
            for parent, contrib in zip(node._parents, node._vjp(g)):
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + contrib
                else:
                    pending[key] = contrib


def matmul(a: DiffValue, b: DiffValue) -> DiffValue:
    """Matrix product of 2-D operands with the standard backward rules."""
    a = DiffValue._coerce(a)
    b = DiffValue._coerce(b)
    if len(a.shape) != 2 or len(b.shape) != 2:
        raise ShapeError("matmul requires 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dims disagree: {a.shape} @ {b.shape}")
    av, bv = a.value, b.value
    return DiffValue(av @ bv, (a, b),
                     lambda g: (g @ bv.T, av.T @ g))


def pairwise_sq_dists(a: DiffValue, b: DiffValue) -> DiffValue:
    """Matrix of squared Euclidean distances between rows of a and b.

    Entry (i, j) = ||a_i - b_j||^2, clamped at 0 against rounding.
    """
    a = DiffValue._coerce(a)
    b = DiffValue._coerce(b)
    if len(a.shape) != 2 or len(b.shape) != 2 or a.shape[1] != b.shape[1]:
        raise ShapeError(f"pairwise_sq_dists needs matching columns: {a.shape}, {b.shape}")
    av, bv = a.value, b.value
    sa = np.sum(av * av, axis=1)
    sb = np.sum(bv * bv, axis=1)
    d = sa[:, None] + sb[None, :] - 2.0 * (av @ bv.T)
    np.maximum(d, 0.0, out=d)

    def vjp(g):
        rs = np.sum(g, axis=1)
        cs = np.sum(g, axis=0)
        ga = 2.0 * (av * rs[:, None] - g @ bv)
        gb = 2.0 * (bv * cs[:, None] - g.T @ av)
        return ga, gb

    return DiffValue(d, (a, b), vjp)


def take_rows(x: DiffValue, idx: np.ndarray) -> DiffValue:
    """Gather rows per column: out[i, j] = x[idx[i, j], j].

    idx must hold a permutation within each column (used to sort
    projections while keeping the permutation fixed for backward).
    """
    x = DiffValue._coerce(x)
    if idx.shape != x.shape:
        raise ShapeError("index array must match input shape")
    out = np.take_along_axis(x.value, idx, axis=0)

    def vjp(g):
        gx = np.zeros_like(x.value)
        np.put_along_axis(gx, idx, g, axis=0)
        return (gx,)

    return DiffValue(out, (x,), vjp)


class BatchNormState:
    """Learnable scale/shift plus running statistics for one batchnorm layer."""

    def __init__(self, dim: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = DiffValue(np.ones(dim))
        self.beta = DiffValue(np.zeros(dim))
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum
        self.eps = eps


def batchnorm(x: DiffValue, state: BatchNormState, mode: str) -> DiffValue:
    """Batch normalization over axis 0, composed from primitive ops.

    Train mode normalizes by batch mean/variance (population form) and
    updates running statistics; eval mode uses the running statistics.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "train":
        n = x.shape[0]
        if n < 2:
            raise ShapeError("batchnorm train mode needs a batch of at least 2")
        mu = x.mean(axis=0)
        xc = x - mu
        var = xc.square().mean(axis=0)
        m = state.momentum
        state.running_mean = (1.0 - m) * state.running_mean + m * mu.value
        state.running_var = (1.0 - m) * state.running_var + m * var.value
        inv_std = (var + state.eps).sqrt().reciprocal()
        xhat = xc * inv_std
    else:
        scale = 1.0 / np.sqrt(state.running_var + state.eps)
        xhat = (x - state.running_mean) * scale
    return xhat * state.gamma + state.beta


class AdamState:
    """First/second-moment accumulators for a fixed parameter list."""

    def __init__(self, params, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


def adam_step(params, grads, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place on params[i].value."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ShapeError("params/grads/state lengths disagree")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.value.shape:
            raise ShapeError("gradient shape mismatch")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.value -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def zero_grads(params) -> None:
    for p in params:
        p.grad = np.zeros_like(p.value)
