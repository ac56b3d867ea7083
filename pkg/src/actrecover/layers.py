"""Network building blocks.

Gated linear units, gated residual blocks, softmax-weighted variable
selection, and scaled dot-product multi-head self-attention, all built on
the tape in :mod:`actrecover.tensor`. Blocks own their parameters and
expose them through ``parameters()``.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Parameter, ShapeError

__all__ = [
    "Linear",
    "GatedLinearUnit",
    "GatedResidualBlock",
    "VariableSelection",
    "MultiHeadSelfAttention",
    "apply_dropout",
    "sinusoidal_positions",
]


def _init_weight(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    # 1/sqrt(fan_in) scaling keeps activations O(1) through the gated blocks
    return rng.normal(0.0, 1.0 / np.sqrt(d_in), size=(d_in, d_out))


def apply_dropout(x, rate: float, train: bool, rng: np.random.Generator | None):
    """Inverted dropout with a constant mask; identity outside training."""
    if not train or rate <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= rate).astype(np.float64) / (1.0 - rate)
    return T.mul(x, keep)


def sinusoidal_positions(n: int, d: int) -> np.ndarray:
    """Fixed sine/cosine position codes, shape (n, d)."""
    pos = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(d, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(i / 2.0) / d)
    return np.where(i.astype(int) % 2 == 0, np.sin(angle), np.cos(angle))


class Linear:
    def __init__(self, name: str, d_in: int, d_out: int, rng, bias: bool = True):
        self.w = Parameter(name + ".w", _init_weight(rng, d_in, d_out))
        self.b = Parameter(name + ".b", np.zeros(d_out)) if bias else None

    def __call__(self, x):
        return T.linear(x, self.w, self.b)

    def parameters(self) -> list[Parameter]:
        return [self.w] + ([self.b] if self.b is not None else [])


class GatedLinearUnit:
    """sigmoid(x Wg + bg) ⊙ (x Wv + bv); the gate can suppress a path entirely."""

    def __init__(self, name: str, d: int, rng):
        self.gate = Linear(name + ".gate", d, d, rng)
        self.value = Linear(name + ".value", d, d, rng)

    def __call__(self, x):
        return T.mul(T.sigmoid(self.gate(x)), self.value(x))

    def parameters(self) -> list[Parameter]:
        return self.gate.parameters() + self.value.parameters()


class GatedResidualBlock:
    """Residual block: LayerNorm(skip(a) + GLU(dense_out(ELU(dense_in(a) + ctx(c))))).

    The optional context feeds the hidden layer through a bias-free
    projection. When input and output widths differ the residual path goes
    through a bias-free skip projection so the addition conforms. Dropout,
    when active, is applied to the pre-gate activation.
    """

    def __init__(
        self,
        name: str,
        d_in: int,
        d_hidden: int,
        d_out: int,
        rng,
        d_context: int | None = None,
        dropout: float = 0.0,
    ):
        self.dense_in = Linear(name + ".in", d_in, d_hidden, rng)
        self.context = (
            Linear(name + ".ctx", d_context, d_hidden, rng, bias=False)
            if d_context
            else None
        )
        self.dense_out = Linear(name + ".out", d_hidden, d_out, rng)
        self.glu = GatedLinearUnit(name + ".glu", d_out, rng)
        self.skip = Linear(name + ".skip", d_in, d_out, rng, bias=False) if d_in != d_out else None
        self.norm_gain = Parameter(name + ".norm.gain", np.ones(d_out))
        self.norm_bias = Parameter(name + ".norm.bias", np.zeros(d_out))
        self.dropout = dropout

    def __call__(self, a, context=None, train: bool = False, rng=None):
        h = self.dense_in(a)
        if context is not None:
            if self.context is None:
                raise ShapeError("block was built without a context projection")
            h = T.add(h, self.context(context))
        h = self.dense_out(T.elu(h))
        h = apply_dropout(h, self.dropout, train, rng)
        gated = self.glu(h)
        residual = a if self.skip is None else self.skip(a)
        return T.layer_norm(T.add(residual, gated), self.norm_gain, self.norm_bias)

    def parameters(self) -> list[Parameter]:
        params = self.dense_in.parameters()
        if self.context is not None:
            params += self.context.parameters()
        params += self.dense_out.parameters() + self.glu.parameters()
        if self.skip is not None:
            params += self.skip.parameters()
        return params + [self.norm_gain, self.norm_bias]


class VariableSelection:
    """Softmax-weighted fusion of per-stream processed inputs.

    Selection weights come from one gated residual block over the flattened
    streams (optionally conditioned on a static context vector); each stream
    also passes through its own block, with stream parameters shared across
    positions, before the weighted sum.
    """

    def __init__(
        self,
        name: str,
        n_streams: int,
        d_m: int,
        rng,
        d_context: int | None = None,
        dropout: float = 0.0,
    ):
        if n_streams < 1:
            raise ShapeError("variable selection needs at least one stream")
        self.n_streams = n_streams
        self.d_m = d_m
        self.selector = GatedResidualBlock(
            name + ".select", n_streams * d_m, d_m, n_streams, rng, d_context, dropout
        )
        self.stream_blocks = [
            GatedResidualBlock(f"{name}.stream{j}", d_m, d_m, d_m, rng, None, dropout)
            for j in range(n_streams)
        ]

    def __call__(self, streams, context=None, train: bool = False, rng=None):
        """Fuse ``streams`` of shape (B, T, m, d); returns (fused, weights)."""
        b, t, m, d = streams.shape
        if m != self.n_streams or d != self.d_m:
            raise ShapeError(
                f"stream block of shape {streams.shape} does not match "
                f"({self.n_streams}, {self.d_m})"
            )
        flat = T.reshape(streams, (b, t, m * d))
        weights = T.softmax(self.selector(flat, context, train, rng), axis=-1)
        processed = T.stack(
            [blk(streams[:, :, j, :], None, train, rng) for j, blk in enumerate(self.stream_blocks)],
            axis=2,
        )
        fused = T.tsum(T.mul(processed, T.reshape(weights, (b, t, m, 1))), axis=2)
        return fused, weights

    def parameters(self) -> list[Parameter]:
        params = self.selector.parameters()
        for blk in self.stream_blocks:
            params += blk.parameters()
        return params


class MultiHeadSelfAttention:
    """Scaled dot-product self-attention with full bidirectional visibility.

    Invalid (padding) keys are pushed to -1e9 before the softmax; a query row
    with no valid key at all yields a zero output row.
    """

    def __init__(self, name: str, d_m: int, n_heads: int, d_attn: int, d_val: int, rng):
        self.n_heads = n_heads
        self.d_attn = d_attn
        self.d_val = d_val
        self.w_q = Parameter(name + ".w_q", _init_weight(rng, d_m, n_heads * d_attn))
        self.w_k = Parameter(name + ".w_k", _init_weight(rng, d_m, n_heads * d_attn))
        self.w_v = Parameter(name + ".w_v", _init_weight(rng, d_m, n_heads * d_val))
        self.w_out = Parameter(name + ".w_out", _init_weight(rng, n_heads * d_val, d_m))

    def __call__(self, x, key_valid: np.ndarray | None = None):
        """Attend over (B, T, d_m); ``key_valid`` is a (B, T) bool mask."""
        b, t, _ = x.shape
        h, da, dv = self.n_heads, self.d_attn, self.d_val

        def split_heads(z, width):
            return T.swap_axes(T.reshape(z, (b, t, h, width)), 1, 2)

        q = split_heads(T.matmul(x, self.w_q), da)
        k = split_heads(T.matmul(x, self.w_k), da)
        v = split_heads(T.matmul(x, self.w_v), dv)
        scores = T.mul(T.matmul(q, T.swap_axes(k, -1, -2)), 1.0 / np.sqrt(da))
        if key_valid is not None:
            bias = np.where(key_valid, 0.0, -1e9)[:, None, None, :]
            scores = T.add(scores, bias)
        attn = T.softmax(scores, axis=-1)
        if key_valid is not None:
            # rows with no valid key at all are defined to produce zeros
            any_valid = key_valid.any(axis=-1).astype(np.float64)[:, None, None, None]
            attn = T.mul(attn, any_valid)
        mixed = T.reshape(T.swap_axes(T.matmul(attn, v), 1, 2), (b, t, h * dv))
        return T.matmul(mixed, self.w_out)

    def parameters(self) -> list[Parameter]:
        return [self.w_q, self.w_k, self.w_v, self.w_out]
