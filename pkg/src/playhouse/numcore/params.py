"""Named parameter collections and gradient extraction."""

from __future__ import annotations

import numpy as np

from .tensor import Tape, Tensor, backward as _tape_backward, default_dtype


class ParameterSet:
    """Flat map from hierarchical name (dot-separated) to a trainable Tensor."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        t = value if isinstance(value, Tensor) else Tensor(value)
        t.requires_grad = True
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self) -> list[str]:
        return list(self._params)

    @property
    def total_count(self) -> int:
        return sum(int(t.size) for t in self._params.values())

    def scope(self, prefix: str) -> "ParameterScope":
        return ParameterScope(self, prefix)

    def zero_grads(self) -> None:
        for t in self._params.values():
            t.grad = None

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data for k, t in self._params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray], strict: bool = True) -> None:
        for k, t in self._params.items():
            if k not in arrays:
                if strict:
                    raise KeyError(f"checkpoint missing parameter {k}")
                continue
            a = np.asarray(arrays[k], dtype=t.data.dtype)
            if a.shape != t.data.shape:
                raise ValueError(
                    f"shape mismatch for {k}: checkpoint {a.shape} vs model {t.data.shape}")
            t.data = a

    def astype(self, dtype) -> None:
        for t in self._params.values():
            t.data = t.data.astype(dtype)


class ParameterScope:
    """Name-prefixing view over a ParameterSet, for building layers."""

    def __init__(self, root: ParameterSet, prefix: str):
        self.root = root
        self.prefix = prefix

    def add(self, name: str, value) -> Tensor:
        return self.root.add(f"{self.prefix}.{name}", value)

    def __getitem__(self, name: str) -> Tensor:
        return self.root[f"{self.prefix}.{name}"]

    def scope(self, name: str) -> "ParameterScope":
        return ParameterScope(self.root, f"{self.prefix}.{name}")


def gradients(loss: Tensor, params: ParameterSet, tape: Tape):
    """Backpropagate from a scalar loss; return (name -> grad array, connected).

    Parameters unreachable from the loss get zero gradients. A detached
    graph yields all-zero gradients with connected=False.
    """
    connected = _tape_backward(loss, tape)
    grads = {}
    for name, t in params.items():
        if t.grad is None:
            grads[name] = np.zeros(t.data.shape, dtype=default_dtype())
        else:
            grads[name] = t.grad
        t.grad = None
    return grads, connected
