"""Gated residual blocks, variable selection, and attention in isolation.

The interesting behavior: selection weights are input-dependent, so a stream
that actually carries signal gets upweighted once the selector is trained —
here we only show the untrained mechanics and shapes.

Run: python demos/02_building_blocks.py
"""

import numpy as np

from actrecover.layers import (
    GatedResidualBlock,
    MultiHeadSelfAttention,
    VariableSelection,
)
from actrecover.tensor import Tensor

rng = np.random.default_rng(1)
d = 8

print("== gated residual block ==")
block = GatedResidualBlock("grn", d, d, d, rng, d_context=d)
a = Tensor(rng.normal(size=(1, 5, d)))
context = Tensor(rng.normal(size=(1, 1, d)))
out = block(a, context)
print("in", a.shape, "-> out", out.shape)
print("output row norms (layer norm keeps them O(sqrt(d))):",
      np.round(np.linalg.norm(out.data[0], axis=-1), 3))

print()
print("== variable selection over four streams ==")
vsn = VariableSelection("vsn", 4, d, rng, d_context=d)
streams = Tensor(rng.normal(size=(1, 5, 4, d)))
fused, weights = vsn(streams, context)
print("fused", fused.shape, " weights", weights.shape)
print("selection weights per position (rows sum to 1):")
print(np.round(weights.data[0], 3))

print()
print("== bidirectional self-attention with padding ==")
attn = MultiHeadSelfAttention("attn", d, n_heads=2, d_attn=4, d_val=4, rng=rng)
x = Tensor(rng.normal(size=(1, 6, d)))
valid = np.array([[True, True, True, True, False, False]])  # last two are padding
out = attn(x, valid)
print("attended", out.shape)
print("padding keys are invisible: recompute without them ->",
      np.allclose(attn(Tensor(x.data[:, :4]), valid[:, :4]).data, out.data[:, :4]))
