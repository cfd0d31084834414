"""Dense-tensor core with tape-based reverse-mode autodiff.

Everything is backed by numpy arrays. Float32 is the working precision;
float64 can be switched on globally for gradient verification.
"""

from __future__ import annotations

import numpy as np

_DEFAULT_DTYPE = np.float32


def set_default_dtype(dtype) -> None:
    """Switch working precision ("float32" or "float64")."""
    global _DEFAULT_DTYPE
    dt = np.dtype(dtype)
    if dt not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported dtype {dtype}")
    _DEFAULT_DTYPE = dt.type


def default_dtype():
    return _DEFAULT_DTYPE


class TapeNode:
    __slots__ = ("output", "parents", "backward_fn")

    def __init__(self, output, parents, backward_fn):
        self.output = output
        self.parents = parents
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of operations; creation order is topological."""

    def __init__(self):
        self.nodes: list[TapeNode] = []

    def record(self, node: TapeNode) -> None:
        self.nodes.append(node)

    def __len__(self):
        return len(self.nodes)


_ACTIVE_TAPE: Tape | None = None


class tape_context:
    """Activate a Tape so that ops on requires_grad tensors are recorded."""

    def __init__(self, tape: Tape | None = None):
        self.tape = tape if tape is not None else Tape()
        self._prev = None

    def __enter__(self) -> Tape:
        global _ACTIVE_TAPE
        self._prev = _ACTIVE_TAPE
        _ACTIVE_TAPE = self.tape
        return self.tape

    def __exit__(self, *exc):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = self._prev
        return False


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE


class Tensor:
    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype or _DEFAULT_DTYPE)
        self.data = arr
        self.requires_grad = requires_grad
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    # operator sugar (constants become non-grad tensors)
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __neg__(self):
        return mul(self, _wrap(-1.0))

    def __matmul__(self, other):
        return matmul(self, _wrap(other))


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=_DEFAULT_DTYPE))


def _record(out: Tensor, parents, backward_fn) -> Tensor:
    tape = _ACTIVE_TAPE
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        tape.record(TapeNode(out, tuple(parents), backward_fn))
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum grad down to `shape` (inverse of numpy broadcasting)."""
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = g.copy() if not g.flags.owndata else g
    else:
        t.grad = t.grad + g


# ---------------------------------------------------------------------------
# elementwise / arithmetic ops


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data)

    def bwd(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(g, b.shape))

    return _record(out, (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data - b.data)

    def bwd(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(-g, b.shape))

    return _record(out, (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data * b.data)

    def bwd(g):
        _accum(a, _unbroadcast(g * b.data, a.shape))
        _accum(b, _unbroadcast(g * a.data, b.shape))

    return _record(out, (a, b), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(np.matmul(a.data, b.data))

    def bwd(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        _accum(a, _unbroadcast(ga, a.shape))
        _accum(b, _unbroadcast(gb, b.shape))

    return _record(out, (a, b), bwd)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y)

    def bwd(g):
        _accum(a, g * (1.0 - y * y))

    return _record(out, (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    y = 1.0 / (1.0 + np.exp(-a.data))
    out = Tensor(y)

    def bwd(g):
        _accum(a, g * y * (1.0 - y))

    return _record(out, (a,), bwd)


def relu(a: Tensor) -> Tensor:
    y = np.maximum(a.data, 0.0)
    out = Tensor(y)

    def bwd(g):
        _accum(a, g * (a.data > 0))

    return _record(out, (a,), bwd)


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)
    out = Tensor(y)

    def bwd(g):
        _accum(a, g * y)

    return _record(out, (a,), bwd)


def log(a: Tensor) -> Tensor:
    out = Tensor(np.log(a.data))

    def bwd(g):
        _accum(a, g / a.data)

    return _record(out, (a,), bwd)


# ---------------------------------------------------------------------------
# shape ops


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape))

    def bwd(g):
        _accum(a, g.reshape(a.shape))

    return _record(out, (a,), bwd)


def transpose(a: Tensor, axes) -> Tensor:
    out = Tensor(np.transpose(a.data, axes))
    inv = np.argsort(axes)

    def bwd(g):
        _accum(a, np.transpose(g, inv))

    return _record(out, (a,), bwd)


def concat(tensors, axis: int) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accum(t, g[tuple(idx)])

    return _record(out, tuple(tensors), bwd)


def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    out = Tensor(a.data[idx])

    def bwd(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        full[idx] = g
        _accum(a, full)

    return _record(out, (a,), bwd)


def sum_axis(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))

    def bwd(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.shape).astype(g.dtype, copy=True))
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            _accum(a, np.broadcast_to(gg, a.shape).astype(gg.dtype, copy=True))

    return _record(out, (a,), bwd)


def mean_axis(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = a.size if axis is None else a.shape[axis]
    return mul(sum_axis(a, axis=axis, keepdims=keepdims), _wrap(1.0 / n))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y)

    def bwd(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        _accum(a, y * (g - dot))

    return _record(out, (a,), bwd)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    z = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    y = z - lse
    out = Tensor(y)

    def bwd(g):
        p = np.exp(y)
        _accum(a, g - p * g.sum(axis=axis, keepdims=True))

    return _record(out, (a,), bwd)


def softmax_cross_entropy(logits: Tensor, targets) -> Tensor:
    """Per-row cross entropy. logits [N, C], integer targets [N] -> loss [N]."""
    t = np.asarray(targets)
    if logits.ndim != 2:
        raise ValueError(f"softmax_cross_entropy expects 2-D logits, got {logits.shape}")
    if t.ndim != 1 or t.shape[0] != logits.shape[0]:
        raise ValueError(f"targets shape {t.shape} does not match logits {logits.shape}")
    if t.min(initial=0) < 0 or (t.size and t.max() >= logits.shape[1]):
        raise ValueError("target index out of range for logits")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - lse
    rows = np.arange(t.shape[0])
    out = Tensor(-logp[rows, t])

    def bwd(g):
        p = np.exp(logp)
        p[rows, t] -= 1.0
        _accum(logits, p * g[:, None])

    return _record(out, (logits,), bwd)


def embedding(table: Tensor, ids) -> Tensor:
    """Lookup rows of table [V, D] by integer ids of any shape."""
    idx = np.asarray(ids)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ValueError(
            f"embedding id out of range: max {idx.max()} for table {table.shape}")
    out = Tensor(table.data[idx])

    def bwd(g):
        dt = np.zeros(table.shape, dtype=g.dtype)
        np.add.at(dt, idx, g)
        _accum(table, dt)

    return _record(out, (table,), bwd)


def conv2d(x: Tensor, w: Tensor, b: Tensor | None, stride: int = 1) -> Tensor:
    """Same-padded NHWC convolution. w is [kh, kw, cin, cout]."""
    if x.ndim != 4:
        raise ValueError(f"conv2d expects NHWC input, got shape {x.shape}")
    kh, kw, cin, cout = w.shape
    n, h, ww_, c = x.shape
    if c != cin:
        raise ValueError(
            f"conv2d channel mismatch: input has {c} channels, kernel expects {cin}")
    ho = -(-h // stride)
    wo = -(-ww_ // stride)
    pad_h = max((ho - 1) * stride + kh - h, 0)
    pad_w = max((wo - 1) * stride + kw - ww_, 0)
    pt, pl = pad_h // 2, pad_w // 2
    xp = np.pad(x.data, ((0, 0), (pt, pad_h - pt), (pl, pad_w - pl), (0, 0)))

    cols = np.empty((n, ho, wo, kh, kw, cin), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = xp[:, i:i + stride * ho:stride,
                                        j:j + stride * wo:stride, :]
    cols2 = cols.reshape(n * ho * wo, kh * kw * cin)
    y = cols2 @ w.data.reshape(kh * kw * cin, cout)
    if b is not None:
        y = y + b.data
    out = Tensor(y.reshape(n, ho, wo, cout))

    def bwd(g):
        g2 = g.reshape(n * ho * wo, cout)
        if w.requires_grad:
            _accum(w, (cols2.T @ g2).reshape(w.shape))
        if b is not None and b.requires_grad:
            _accum(b, g2.sum(axis=0))
        if x.requires_grad:
            dcols = (g2 @ w.data.reshape(kh * kw * cin, cout).T).reshape(
                n, ho, wo, kh, kw, cin)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, i:i + stride * ho:stride,
                        j:j + stride * wo:stride, :] += dcols[:, :, :, i, j, :]
            _accum(x, dxp[:, pt:pt + h, pl:pl + ww_, :])

    parents = (x, w) if b is None else (x, w, b)
    return _record(out, parents, bwd)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xn = xc * inv
    out = Tensor(xn * gain.data + bias.data)

    def bwd(g):
        if bias.requires_grad:
            _accum(bias, _unbroadcast(g, bias.shape))
        if gain.requires_grad:
            _accum(gain, _unbroadcast(g * xn, gain.shape))
        gx = g * gain.data
        dxn = gx * inv
        _accum(x, dxn - dxn.mean(axis=-1, keepdims=True)
               - xn * (dxn * xn).mean(axis=-1, keepdims=True))

    return _record(out, (x, gain, bias), bwd)


# ---------------------------------------------------------------------------
# backward driver


def backward(loss: Tensor, tape: Tape):
    """Run reverse-mode accumulation from a scalar loss over a recorded tape.

    Gradients land on each reachable tensor's .grad. Returns True if the loss
    was connected to the tape, False (all-zero grads) otherwise.
    """
    if loss.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.shape}")
    loss.grad = np.ones_like(loss.data)
    fired = False
    for node in reversed(tape.nodes):
        g = node.output.grad
        if g is None:
            continue
        fired = True
        node.backward_fn(g)
        node.output.grad = None
    return fired
