"""Named trainable parameters plus the Adam update and gradient clipping."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, NumericError
from .tensor import Tensor


class ParameterStore:
    """Ordered name -> Tensor map that also owns the optimizer state.

    Insertion order is the canonical parameter order everywhere: gradient
    norms, checkpoint layout, and finite-difference sampling all walk it.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._adam_m: dict[str, np.ndarray] = {}
        self._adam_v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, shape: tuple[int, ...], rng, scale: float = 0.1) -> Tensor:
        """Create a parameter with uniform [-scale, scale] entries."""
        if name in self._params:
            raise ConfigError(f"duplicate parameter name {name!r}")
        t = Tensor(rng.uniform(-scale, scale, shape), requires_grad=True)
        self._params[name] = t
        self._adam_m[name] = np.zeros(shape)
        self._adam_v[name] = np.zeros(shape)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grads(self) -> None:
        for t in self._params.values():
            t.grad = None

    def grad_norm(self) -> float:
        total = 0.0
        for t in self._params.values():
            if t.grad is not None:
                total += float((t.grad * t.grad).sum())
        return float(np.sqrt(total))

    def copy_values(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        if set(values) != set(self._params):
            missing = set(self._params) - set(values)
            extra = set(values) - set(self._params)
            raise ConfigError(f"parameter name mismatch: missing={sorted(missing)}, extra={sorted(extra)}")
        for name, arr in values.items():
            t = self._params[name]
            if arr.shape != t.data.shape:
                raise ConfigError(f"shape mismatch for {name!r}: {arr.shape} vs {t.data.shape}")
            t.data = np.ascontiguousarray(arr, dtype=np.float64)

    def adam_state(self) -> dict:
        return {
            "step": self.step_count,
            "m": {k: v.copy() for k, v in self._adam_m.items()},
            "v": {k: v.copy() for k, v in self._adam_v.items()},
        }

    def load_adam_state(self, state: dict) -> None:
        self.step_count = int(state["step"])
        for k in self._params:
            self._adam_m[k] = np.ascontiguousarray(state["m"][k], dtype=np.float64)
            self._adam_v[k] = np.ascontiguousarray(state["v"][k], dtype=np.float64)


def clip_gradients(store: ParameterStore, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most ``max_norm``.

    Returns the applied factor. A no-op (factor 1.0) when already within the
    bound; the small tolerance keeps a second clip from rescaling a result
    that sits on the boundary only because of rounding.
    """
    if max_norm <= 0:
        raise ConfigError(f"max_norm must be positive, got {max_norm}")
    for name, t in store.items():
        if t.grad is not None and not np.all(np.isfinite(t.grad)):
            raise NumericError(f"non-finite gradient in parameter {name!r}")
    norm = store.grad_norm()
    if norm <= max_norm * (1.0 + 1e-12):
        return 1.0
    factor = max_norm / norm
    for t in store._params.values():
        if t.grad is not None:
            t.grad *= factor
    return factor


def adam_step(
    store: ParameterStore,
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update over every parameter with a gradient.

    Parameters whose gradient is None (or all zeros) are left untouched, so a
    zero-gradient model is a fixed point of the optimizer.
    """
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if not 0 <= beta1 < 1 or not 0 <= beta2 < 1:
        raise ConfigError(f"betas must be in [0, 1), got {beta1}, {beta2}")
    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, p in store.items():
        g = p.grad
        if g is None:
            continue
        m = store._adam_m[name]
        v = store._adam_v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
