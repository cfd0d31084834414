"""Layer primitives: dense/MLP, conv stack, multi-head attention, LSTM cell,
embedding, plus a uniform forward_layer dispatch used by shape tests."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .params import ParameterScope
from .tensor import Tensor


def glorot(rng: np.random.Generator, shape) -> np.ndarray:
    fan_in = int(np.prod(shape[:-1])) if len(shape) > 1 else shape[0]
    fan_out = shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(T.default_dtype())


def zeros(shape) -> np.ndarray:
    return np.zeros(shape, dtype=T.default_dtype())


class Dense:
    def __init__(self, scope: ParameterScope, rng, d_in: int, d_out: int,
                 zero_init: bool = False):
        w0 = zeros((d_in, d_out)) if zero_init else glorot(rng, (d_in, d_out))
        self.w = scope.add("w", w0)
        self.b = scope.add("b", zeros((d_out,)))
        self.d_in, self.d_out = d_in, d_out

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise ValueError(
                f"dense layer expects last dim {self.d_in}, got input shape {x.shape}")
        flat = T.reshape(x, (-1, self.d_in))
        y = T.matmul(flat, self.w) + self.b
        return T.reshape(y, tuple(x.shape[:-1]) + (self.d_out,))


class MLP:
    """Tanh hidden layers, linear output."""

    def __init__(self, scope: ParameterScope, rng, dims: list[int],
                 zero_init_last: bool = False):
        self.layers = []
        for i in range(len(dims) - 1):
            last = i == len(dims) - 2
            self.layers.append(Dense(scope.scope(f"fc{i}"), rng, dims[i], dims[i + 1],
                                     zero_init=zero_init_last and last))

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = T.tanh(x)
        return x


class Embedding:
    def __init__(self, scope: ParameterScope, rng, vocab: int, dim: int,
                 scale: float = 0.1):
        init = (rng.standard_normal((vocab, dim)) * scale).astype(T.default_dtype())
        self.table = scope.add("table", init)

    def __call__(self, ids) -> Tensor:
        return T.embedding(self.table, ids)


class Conv2d:
    def __init__(self, scope: ParameterScope, rng, c_in: int, c_out: int,
                 kernel: int = 3, stride: int = 1):
        self.w = scope.add("w", glorot(rng, (kernel, kernel, c_in, c_out)))
        self.b = scope.add("b", zeros((c_out,)))
        self.stride = stride

    def __call__(self, x: Tensor) -> Tensor:
        return T.conv2d(x, self.w, self.b, stride=self.stride)


class ConvStack:
    """Strided same-padded 3x3 conv tower, relu between layers."""

    def __init__(self, scope: ParameterScope, rng, c_in: int,
                 widths: list[int], strides: list[int]):
        if len(widths) != len(strides):
            raise ValueError("widths and strides must align")
        self.convs = []
        prev = c_in
        for i, (w, s) in enumerate(zip(widths, strides)):
            self.convs.append(Conv2d(scope.scope(f"conv{i}"), rng, prev, w, stride=s))
            prev = w

    def __call__(self, x: Tensor) -> Tensor:
        for i, conv in enumerate(self.convs):
            x = conv(x)
            if i < len(self.convs) - 1:
                x = T.relu(x)
        return x


class LSTMCell:
    """Standard LSTM cell; gate order i, f, g, o; forget bias 1."""

    def __init__(self, scope: ParameterScope, rng, d_in: int, d_hidden: int):
        self.w = scope.add("w", glorot(rng, (d_in + d_hidden, 4 * d_hidden)))
        b = zeros((4 * d_hidden,))
        b[d_hidden:2 * d_hidden] = 1.0
        self.b = scope.add("b", b)
        self.d_in, self.d_hidden = d_in, d_hidden

    def __call__(self, x: Tensor, h: Tensor, c: Tensor):
        if x.shape[-1] != self.d_in:
            raise ValueError(
                f"lstm cell expects input dim {self.d_in}, got shape {x.shape}")
        z = T.matmul(T.concat([x, h], axis=-1), self.w) + self.b
        H = self.d_hidden
        i = T.sigmoid(T.slice_axis(z, -1, 0, H))
        f = T.sigmoid(T.slice_axis(z, -1, H, 2 * H))
        g = T.tanh(T.slice_axis(z, -1, 2 * H, 3 * H))
        o = T.sigmoid(T.slice_axis(z, -1, 3 * H, 4 * H))
        c_new = f * c + i * g
        h_new = o * T.tanh(c_new)
        return h_new, c_new


class MultiHeadAttention:
    """Attention of query tokens over key/value tokens.

    q: [B, Tq, D], kv: [B, Tk, D], additive mask broadcastable to
    [B, heads, Tq, Tk] (0 for visible, large negative for hidden).
    """

    def __init__(self, scope: ParameterScope, rng, dim: int, heads: int):
        if dim % heads:
            raise ValueError(f"dim {dim} not divisible by heads {heads}")
        self.dim, self.heads = dim, heads
        self.dh = dim // heads
        self.wq = Dense(scope.scope("q"), rng, dim, dim)
        self.wk = Dense(scope.scope("k"), rng, dim, dim)
        self.wv = Dense(scope.scope("v"), rng, dim, dim)
        self.wo = Dense(scope.scope("o"), rng, dim, dim)

    def _split(self, x: Tensor, b: int, t: int) -> Tensor:
        x = T.reshape(x, (b, t, self.heads, self.dh))
        return T.transpose(x, (0, 2, 1, 3))

    def __call__(self, q: Tensor, kv: Tensor, mask: np.ndarray | None = None) -> Tensor:
        b, tq, _ = q.shape
        tk = kv.shape[1]
        qh = self._split(self.wq(q), b, tq)
        kh = self._split(self.wk(kv), b, tk)
        vh = self._split(self.wv(kv), b, tk)
        scores = T.matmul(qh, T.transpose(kh, (0, 1, 3, 2))) * (1.0 / np.sqrt(self.dh))
        if mask is not None:
            scores = scores + Tensor(mask)
        att = T.softmax(scores, axis=-1)
        ctx = T.matmul(att, vh)
        ctx = T.reshape(T.transpose(ctx, (0, 2, 1, 3)), (b, tq, self.dim))
        return self.wo(ctx)


class LayerNorm:
    def __init__(self, scope: ParameterScope, dim: int):
        self.gain = scope.add("gain", np.ones(dim, dtype=T.default_dtype()))
        self.bias = scope.add("bias", zeros((dim,)))

    def __call__(self, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.gain, self.bias)


class TransformerBlock:
    """Pre-norm block: queries attend over [queries ++ kv_extra]."""

    def __init__(self, scope: ParameterScope, rng, dim: int, heads: int,
                 ff_mult: int = 4):
        self.ln1 = LayerNorm(scope.scope("ln1"), dim)
        self.ln2 = LayerNorm(scope.scope("ln2"), dim)
        self.att = MultiHeadAttention(scope.scope("att"), rng, dim, heads)
        self.ff1 = Dense(scope.scope("ff1"), rng, dim, ff_mult * dim)
        self.ff2 = Dense(scope.scope("ff2"), rng, ff_mult * dim, dim)

    def __call__(self, q: Tensor, kv_extra: Tensor | None = None,
                 mask: np.ndarray | None = None) -> Tensor:
        qn = self.ln1(q)
        kv = qn if kv_extra is None else T.concat([qn, kv_extra], axis=1)
        q = q + self.att(qn, kv, mask)
        q = q + self.ff2(T.relu(self.ff1(self.ln2(q))))
        return q


def forward_layer(kind: str, params, *inputs, **kwargs):
    """Uniform layer dispatch over the primitive kinds.

    Functional form: parameters come in as plain tensors per kind. Used by
    verification tests; model code uses the layer classes directly.
    """
    if kind == "conv2d":
        x, w = inputs[0], inputs[1]
        b = inputs[2] if len(inputs) > 2 else None
        return T.conv2d(x, w, b, stride=kwargs.get("stride", 1))
    if kind == "dense":
        x, w, b = inputs
        return T.matmul(x, w) + b
    if kind == "softmax":
        return T.softmax(inputs[0], axis=kwargs.get("axis", -1))
    if kind == "softmax_ce":
        return T.softmax_cross_entropy(inputs[0], kwargs["targets"])
    if kind == "embedding":
        return T.embedding(inputs[0], kwargs["ids"])
    if kind == "lstm_step":
        x, h, c, w, b = inputs
        H = h.shape[-1]
        z = T.matmul(T.concat([x, h], axis=-1), w) + b
        i = T.sigmoid(T.slice_axis(z, -1, 0, H))
        f = T.sigmoid(T.slice_axis(z, -1, H, 2 * H))
        g = T.tanh(T.slice_axis(z, -1, 2 * H, 3 * H))
        o = T.sigmoid(T.slice_axis(z, -1, 3 * H, 4 * H))
        c_new = f * c + i * g
        return o * T.tanh(c_new), c_new
    if kind == "attention":
        q, kv, wq, bq, wk, bk, wv, bv, wo, bo = inputs
        heads = kwargs.get("heads", 1)
        dim = q.shape[-1]
        dh = dim // heads
        b_, tq, _ = q.shape
        tk = kv.shape[1]

        def proj(x, w, bb, t):
            y = T.matmul(T.reshape(x, (-1, dim)), w) + bb
            y = T.reshape(y, (b_, t, heads, dh))
            return T.transpose(y, (0, 2, 1, 3))

        qh = proj(q, wq, bq, tq)
        kh = proj(kv, wk, bk, tk)
        vh = proj(kv, wv, bv, tk)
        scores = T.matmul(qh, T.transpose(kh, (0, 1, 3, 2))) * (1.0 / np.sqrt(dh))
        att = T.softmax(scores, axis=-1)
        ctx = T.reshape(T.transpose(T.matmul(att, vh), (0, 2, 1, 3)), (b_, tq, dim))
        y = T.matmul(T.reshape(ctx, (-1, dim)), wo) + bo
        return T.reshape(y, (b_, tq, dim))
    raise ValueError(f"unknown layer kind: {kind}")
