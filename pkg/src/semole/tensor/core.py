"""Reverse-mode automatic differentiation over float64 numpy arrays.

Operations performed inside an active :class:`Tape` are recorded together
with their adjoints; :func:`backward` replays them in reverse.
"""
from __future__ import annotations

import threading

import numpy as np


class TensorError(ValueError):
    pass


class ShapeMismatch(TensorError):
    pass


class NonScalarLoss(TensorError):
    pass


class NonFiniteError(TensorError, FloatingPointError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "name", "__weakref__")

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim > 2:
            raise ShapeMismatch(f"tensors are at most rank 2, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise NonScalarLoss(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    # Tensors are keys in gradient maps
    __hash__ = object.__hash__


def Parameter(data, name=None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Ordered record of primitive applications: (output, inputs, adjoint)."""

    _local = threading.local()

    def __init__(self):
        self.records: list[tuple[Tensor, tuple[Tensor, ...], object]] = []

    def __enter__(self):
        stack = getattr(Tape._local, "stack", None)
        if stack is None:
            stack = Tape._local.stack = []
        stack.append(self)
        return self

    def __exit__(self, *exc):
        Tape._local.stack.pop()
        return False

    def __len__(self):
        return len(self.records)

    @staticmethod
    def active():
        stack = getattr(Tape._local, "stack", None)
        return stack[-1] if stack else None

    def clear(self):
        self.records.clear()


def _check(out: np.ndarray, op: str):
    if not np.isfinite(out).all():
        raise NonFiniteError(f"{op} produced a non-finite value")


def _result(data, op, inputs, adjoint) -> Tensor:
    _check(data, op)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.name = None
    tape = Tape.active()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out.requires_grad = needs
    if needs:
        tape.records.append((out, inputs, adjoint))
    return out


def backward(loss: Tensor, tape: Tape | None = None) -> dict[Tensor, np.ndarray]:
    """Gradients of a scalar ``loss`` for every leaf that requires them.

    The tape is cleared afterwards.
    """
    tape = tape or Tape.active()
    if loss.data.size != 1:
        raise NonScalarLoss(f"loss must be a scalar, got shape {loss.shape}")
    if tape is None:
        raise TensorError("backward needs a tape")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    produced = set()
    for out, inputs, adjoint in reversed(tape.records):
        produced.add(id(out))
        g = grads.pop(id(out), None)
        if g is None:
            continue
        for t, gi in zip(inputs, adjoint(g)):
            if gi is None or not t.requires_grad:
                continue
            prev = grads.get(id(t))
            grads[id(t)] = gi if prev is None else prev + gi
    leaves = {}
    seen = set()
    for _, inputs, _ in tape.records:
        for t in inputs:
            if t.requires_grad and id(t) not in produced and id(t) not in seen:
                seen.add(id(t))
                leaves[t] = grads.get(id(t), np.zeros_like(t.data))
    tape.clear()
    return leaves


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    if shape[0] == 1 and g.shape[0] != 1:
        g = g.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] != 1:
        g = g.sum(axis=1, keepdims=True)
    return g


def _broadcast_shape(a, b, op):
    sa, sb = a.shape, b.shape
    out = []
    for x, y in zip(sa, sb):
        if x == y or y == 1:
            out.append(x)
        elif x == 1:
            out.append(y)
        else:
            raise ShapeMismatch(f"{op}: incompatible shapes {sa} and {sb}")
    return tuple(out)


def _segsum(values: np.ndarray, seg: np.ndarray, n: int) -> np.ndarray:
    """Row sums of ``values`` grouped by ``seg`` into ``n`` buckets."""
    out = np.zeros((n, values.shape[1]))
    if seg.size == 0:
        return out
    order = np.argsort(seg, kind="stable")
    sorted_seg = seg[order]
    starts = np.flatnonzero(np.concatenate([[True], sorted_seg[1:] != sorted_seg[:-1]]))
    out[sorted_seg[starts]] = np.add.reduceat(values[order], starts, axis=0)
    return out


# primitives

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    sa, sb = a.shape, b.shape
    return _result(a.data + b.data, "add", (a, b),
                   lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    sa, sb = a.shape, b.shape
    return _result(a.data - b.data, "sub", (a, b),
                   lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    ad, bd = a.data, b.data
    return _result(ad * bd, "mul", (a, b),
                   lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _result(a.data * c, "scale", (a,), lambda g: (g * c,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: shapes {a.shape} and {b.shape} do not align")
    ad, bd = a.data, b.data
    ga, gb = a.requires_grad, b.requires_grad
    return _result(ad @ bd, "matmul", (a, b),
                   lambda g: (g @ bd.T if ga else None, ad.T @ g if gb else None))


def concat(tensors, axis=1) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    if not ts:
        raise ShapeMismatch("concat of nothing")
    other = 1 - axis
    if len({t.shape[other] for t in ts}) != 1:
        raise ShapeMismatch(f"concat along axis {axis}: shapes {[t.shape for t in ts]}")
    cuts = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def adjoint(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _result(np.concatenate([t.data for t in ts], axis=axis), "concat", ts, adjoint)


def slice_cols(a, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    if not (0 <= start <= stop <= a.shape[1]):
        raise ShapeMismatch(f"slice [{start}:{stop}] outside {a.shape[1]} columns")
    shape = a.shape

    def adjoint(g):
        full = np.zeros(shape)
        full[:, start:stop] = g
        return (full,)

    return _result(a.data[:, start:stop].copy(), "slice", (a,), adjoint)


def slice_rows(a, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    if not (0 <= start <= stop <= a.shape[0]):
        raise ShapeMismatch(f"slice [{start}:{stop}] outside {a.shape[0]} rows")
    shape = a.shape

    def adjoint(g):
        full = np.zeros(shape)
        full[start:stop] = g
        return (full,)

    return _result(a.data[start:stop].copy(), "slice", (a,), adjoint)


def tsum(a, axis=None) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    if axis is None:
        out = np.array([[a.data.sum()]])
    else:
        out = a.data.sum(axis=axis, keepdims=True)
    return _result(out, "sum", (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(a, axis=None) -> Tensor:
    a = as_tensor(a)
    n = a.size if axis is None else a.shape[axis]
    return scale(tsum(a, axis), 1.0 / n)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _result(out, "sigmoid", (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _result(out, "tanh", (a,), lambda g: (g * (1.0 - out * out),))


def relu(a) -> Tensor:
    a = as_tensor(a)
    keep = a.data > 0
    return _result(a.data * keep, "relu", (a,), lambda g: (g * keep,))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _result(out, "exp", (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    if (x <= 0).any():
        raise NonFiniteError("log of a non-positive value")
    return _result(np.log(x), "log", (a,), lambda g: (g / x,))


def square(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    return _result(x * x, "square", (a,), lambda g: (2.0 * g * x,))


def clamp(a, lo: float, hi: float) -> Tensor:
    """Clip values to [lo, hi]; the gradient passes only inside the interval."""
    a = as_tensor(a)
    x = a.data
    inside = (x >= lo) & (x <= hi)
    return _result(np.clip(x, lo, hi), "clamp", (a,), lambda g: (g * inside,))


def log_softmax(a, mask=None) -> Tensor:
    """Row-wise log-softmax. With a boolean ``mask`` only True entries take
    part; masked entries come out as 0 and receive no gradient."""
    a = as_tensor(a)
    x = a.data
    if mask is None:
        m = x.max(axis=1, keepdims=True)
        shifted = x - m
        lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        out = shifted - lse
        p = np.exp(out)
        return _result(out, "log_softmax", (a,), lambda g: (g - p * g.sum(axis=1, keepdims=True),))
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape:
        raise ShapeMismatch(f"log_softmax mask shape {mask.shape} vs input {x.shape}")
    if not mask.any(axis=1).all():
        raise TensorError("log_softmax mask leaves a row empty")
    big = np.where(mask, x, -np.inf)
    m = big.max(axis=1, keepdims=True)
    e = np.where(mask, np.exp(np.where(mask, x - m, 0.0)), 0.0)
    lse = np.log(e.sum(axis=1, keepdims=True))
    out = np.where(mask, x - m - lse, 0.0)
    p = np.where(mask, np.exp(out), 0.0)

    def adjoint(g):
        g = np.where(mask, g, 0.0)
        return (g - p * g.sum(axis=1, keepdims=True),)

    return _result(out, "log_softmax", (a,), adjoint)


def gather_rows(a, index) -> Tensor:
    """Rows ``a[index]``; repeated indices accumulate in the adjoint."""
    a = as_tensor(a)
    idx = np.asarray(index, dtype=np.int64).reshape(-1)
    n = a.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ShapeMismatch(f"gather_rows index out of range for {n} rows")

    return _result(a.data[idx], "gather_rows", (a,), lambda g: (_segsum(g, idx, n),))


def segment_sum(a, segments, num_segments: int) -> Tensor:
    """Sum rows of ``a`` into ``num_segments`` buckets given by ``segments``."""
    a = as_tensor(a)
    seg = np.asarray(segments, dtype=np.int64).reshape(-1)
    if seg.size != a.shape[0]:
        raise ShapeMismatch(f"segment_sum: {seg.size} segment ids for {a.shape[0]} rows")
    out = _segsum(a.data, seg, num_segments)
    return _result(out, "segment_sum", (a,), lambda g: (g[seg],))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatch(f"cannot reshape {old} to {tuple(shape)}") from None
    return _result(out, "reshape", (a,), lambda g: (g.reshape(old),))


def stop_gradient(a) -> Tensor:
    return as_tensor(a).detach()
