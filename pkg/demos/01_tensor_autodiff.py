"""A tour of the tensor core: forward ops, backward, finite-difference checks.

Run: python demos/01_tensor_autodiff.py
"""

import numpy as np

from actrecover import tensor as T
from actrecover.gradcheck import grad_check
from actrecover.tensor import Parameter, Tensor

rng = np.random.default_rng(0)

print("== a small differentiable computation ==")
x = Parameter("x", rng.normal(size=(2, 3)))
w = Parameter("w", rng.normal(size=(3, 4)))
b = Parameter("b", np.zeros(4))
hidden = T.elu(T.linear(x, w, b))
probs = T.softmax(hidden, axis=-1)
loss = T.tmean(T.mul(probs, rng.normal(size=(2, 4))))
print("loss =", loss.item())

loss.backward()
print("dL/dw row 0:", np.round(w.grad[0], 4))
print("dL/dx row 0:", np.round(x.grad[0], 4))

print()
print("== softmax rows are a simplex ==")
z = T.softmax(Tensor(rng.normal(size=(3, 5)) * 4), axis=-1)
print("row sums:", z.data.sum(-1))
print("min entry:", z.data.min())

print()
print("== layer norm standardizes each row ==")
gain = Parameter("gain", np.ones(6))
bias = Parameter("bias", np.zeros(6))
normed = T.layer_norm(Tensor(rng.normal(size=(4, 6)) * 3 + 7), gain, bias)
print("row means:", np.round(normed.data.mean(-1), 8))
print("row vars: ", np.round(normed.data.var(-1), 6))

print()
print("== central differences agree with the tape ==")
for name, forward, params in [
    ("linear", lambda: T.tsum(T.linear(x, w, b)), [x, w, b]),
    ("elu+softmax", lambda: T.tsum(T.softmax(T.elu(T.linear(x, w, b)), axis=-1)[:, :2]), [x, w, b]),
]:
    report = grad_check(forward, params, name=name)
    print(f"{name}: max relative gradient error {report.max_rel_error:.2e}")
