"""Dense float tensors with reverse-mode automatic differentiation.

Values are numpy float64 arrays in row-major order. Every operation records
its inputs and a backward closure; calling :meth:`Tensor.backward` on a
scalar walks the recorded graph in reverse topological order and accumulates
gradients into every node that requires them. The operation set is
deliberately small: exactly what gated residual blocks, variable selection,
multi-head attention and the slot insertion head need.

Gradient buffers on :class:`Parameter` persist across graphs and accumulate;
callers zero them between optimization steps.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Parameter",
    "ShapeError",
    "NumericError",
    "set_finite_checks",
    "add",
    "sub",
    "mul",
    "matmul",
    "linear",
    "elu",
    "sigmoid",
    "softmax",
    "log_softmax",
    "layer_norm",
    "embed",
    "concat",
    "stack",
    "reshape",
    "swap_axes",
    "tsum",
    "tmean",
]


class ShapeError(ValueError):
    """Operand shapes do not conform; the message names both shapes."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values."""


_FINITE_CHECKS = False


def set_finite_checks(enabled: bool) -> None:
    """Globally verify that every forward result is finite (slow; for tests)."""
    global _FINITE_CHECKS
    _FINITE_CHECKS = bool(enabled)


class Tensor:
    """A dense float64 array plus the hooks for backpropagation."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> None:
        """Run reverse-mode differentiation from this scalar."""
        if self.data.size != 1:
            raise ShapeError(f"backward requires a scalar, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar; the module-level functions do the real work
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        src = self
        data = src.data[key]

        def backward(g):
            gx = np.zeros_like(src.data)
            gx[key] = g  # basic indexing selects disjoint elements
            _accumulate(src, gx)

        return _node(data, (src,), backward)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """Named leaf tensor with a persistent, same-shape gradient buffer."""

    __slots__ = ("name",)

    def __init__(self, name: str, value):
        super().__init__(value, requires_grad=True)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    if _FINITE_CHECKS and not np.isfinite(data).all():
        raise NumericError("non-finite values in forward result")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = parents
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    return out


def _accumulate(node: Tensor, g: np.ndarray) -> None:
    if not node.requires_grad:
        return
    node.grad = g if node.grad is None else node.grad + g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` over broadcast axes so it matches ``shape``."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data + b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return _node(data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data - b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(-g, b.data.shape))

    return _node(data, (a, b), backward)


def mul(a, b) -> Tensor:
    """Elementwise (Hadamard) product with numpy broadcasting."""
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data * b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2 or a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(f"matmul shapes do not conform: {a.data.shape} @ {b.data.shape}")
    data = np.matmul(a.data, b.data)

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        _accumulate(a, _unbroadcast(ga, a.data.shape))
        _accumulate(b, _unbroadcast(gb, b.data.shape))

    return _node(data, (a, b), backward)


def linear(x, w, b=None) -> Tensor:
    """``x @ w`` plus an optional bias broadcast over leading axes."""
    x, w = _as_tensor(x), _as_tensor(w)
    if x.data.shape[-1] != w.data.shape[0]:
        raise ShapeError(f"linear shapes do not conform: {x.data.shape} @ {w.data.shape}")
    out = matmul(x, w)
    return out if b is None else add(out, b)


def elu(x) -> Tensor:
    """x for x > 0, exp(x) - 1 otherwise."""
    x = _as_tensor(x)
    d = x.data
    data = np.where(d > 0, d, np.expm1(d))

    def backward(g):
        _accumulate(x, g * np.where(d > 0, 1.0, data + 1.0))

    return _node(data, (x,), backward)


def sigmoid(x) -> Tensor:
    x = _as_tensor(x)
    d = x.data
    e = np.exp(-np.abs(d))
    s = np.where(d >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def backward(g):
        _accumulate(x, g * s * (1.0 - s))

    return _node(s, (x,), backward)


def softmax(x, axis: int = -1) -> Tensor:
    """Normalized exponentials along ``axis``, stabilized by max subtraction."""
    x = _as_tensor(x)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        _accumulate(x, s * (g - (g * s).sum(axis=axis, keepdims=True)))

    return _node(s, (x,), backward)


def log_softmax(x, axis: int = -1) -> Tensor:
    x = _as_tensor(x)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    out = z - np.log(np.exp(z).sum(axis=axis, keepdims=True))

    def backward(g):
        _accumulate(x, g - np.exp(out) * g.sum(axis=axis, keepdims=True))

    return _node(out, (x,), backward)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Standardize over the last axis (population variance), then affine."""
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    d = x.data
    width = d.shape[-1]
    mu = d.mean(axis=-1, keepdims=True)
    var = ((d - mu) ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (d - mu) * inv
    data = xhat * gain.data + bias.data

    def backward(g):
        _accumulate(gain, (g * xhat).reshape(-1, width).sum(axis=0))
        _accumulate(bias, g.reshape(-1, width).sum(axis=0))
        gx = g * gain.data
        _accumulate(
            x,
            inv
            * (
                gx
                - gx.mean(axis=-1, keepdims=True)
                - xhat * (gx * xhat).mean(axis=-1, keepdims=True)
            ),
        )

    return _node(data, (x, gain, bias), backward)


def embed(table, indices) -> Tensor:
    """Rows of ``table`` at integer ``indices``; gradients scatter back."""
    table = _as_tensor(table)
    idx = np.asarray(indices)
    n_rows, width = table.data.shape
    if idx.size and (idx.min() < 0 or idx.max() >= n_rows):
        raise IndexError(f"embedding index out of range 0..{n_rows - 1}")
    data = table.data[idx]

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx.reshape(-1), g.reshape(-1, width))
        _accumulate(table, gt)

    return _node(data, (table,), backward)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    ts = [_as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.data.shape[axis] for t in ts]

    def backward(g):
        pieces = np.split(g, np.cumsum(sizes[:-1]), axis=axis)
        for t, piece in zip(ts, pieces):
            _accumulate(t, piece)

    return _node(data, tuple(ts), backward)


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [_as_tensor(t) for t in tensors]
    data = np.stack([t.data for t in ts], axis=axis)

    def backward(g):
        for i, t in enumerate(ts):
            _accumulate(t, np.take(g, i, axis=axis))

    return _node(data, tuple(ts), backward)


def reshape(x, shape) -> Tensor:
    x = _as_tensor(x)
    data = x.data.reshape(shape)

    def backward(g):
        _accumulate(x, g.reshape(x.data.shape))

    return _node(data, (x,), backward)


def swap_axes(x, axis1: int, axis2: int) -> Tensor:
    x = _as_tensor(x)
    data = np.swapaxes(x.data, axis1, axis2)

    def backward(g):
        _accumulate(x, np.swapaxes(g, axis1, axis2))

    return _node(data, (x,), backward)


def tsum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            _accumulate(x, np.broadcast_to(g, x.data.shape).copy())
            return
        ge = g if keepdims else np.expand_dims(g, axis)
        _accumulate(x, np.broadcast_to(ge, x.data.shape).copy())

    return _node(data, (x,), backward)


def tmean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    n = x.data.size if axis is None else np.prod(
        [x.data.shape[a] for a in (axis if isinstance(axis, tuple) else (axis,))]
    )
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / float(n))


def parameters_of(items: Iterable) -> list[Parameter]:
    """Flatten ``.parameters()`` of each item into one list."""
    out: list[Parameter] = []
    for item in items:
        out.extend(item.parameters())
    return out
