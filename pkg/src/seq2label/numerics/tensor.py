"""Dense float64 tensors with reverse-mode gradients.

Values are C-order (row-major) float64 numpy arrays; supported ranks are
scalar (shape ``()``), vector, and matrix. Every operation records a backward
closure when any input participates in gradient computation, and calling
``backward()`` on a scalar loss replays the closures in reverse topological
order. Inference code wraps itself in ``no_grad()`` to skip graph recording.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..errors import ConfigError, NumericError, ShapeError

_grad_enabled = True


class no_grad:
    """Context manager that disables graph recording."""

    def __enter__(self):
        global _grad_enabled
        self._saved = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._saved
        return False


class Tensor:
    """A float64 array plus an optional gradient buffer and backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if not arr.flags["C_CONTIGUOUS"]:
            # ascontiguousarray would also promote 0-d to 1-d, so gate it
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph ---------------------------------------------------------------

    def backward(self) -> None:
        """Accumulate dloss/dx into ``.grad`` of every ancestor, loss = self.

        Only defined for scalar nodes; raises NumericError otherwise.
        """
        if self.data.shape != ():
            raise NumericError(
                f"backward() requires a scalar loss node, got shape {self.data.shape}"
            )
        order: list[Tensor] = []
        seen = {id(self)}
        stack: list[tuple[Tensor, Iterable[Tensor]]] = [(self, iter(self._parents))]
        while stack:
            node, parents = stack[-1]
            pushed = False
            for p in parents:
                if id(p) not in seen:
                    seen.add(id(p))
                    stack.append((p, iter(p._parents)))
                    pushed = True
                    break
            if not pushed:
                order.append(node)
                stack.pop()
        self.grad = np.ones((), dtype=np.float64)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "Tensor") -> "Tensor":
        a, b = self.data, other.data
        if a.shape == b.shape:
            def bw(g, a=self, b=other):
                _accum(a, g)
                _accum(b, g)
        elif a.ndim == 2 and b.ndim == 1 and a.shape[1] == b.shape[0]:
            # matrix + row-broadcast vector
            def bw(g, a=self, b=other):
                _accum(a, g)
                _accum(b, g.sum(axis=0))
        else:
            raise ShapeError(f"cannot add shapes {a.shape} and {b.shape}")
        return _node(a + b, (self, other), bw)

    def __sub__(self, other: "Tensor") -> "Tensor":
        a, b = self.data, other.data
        if a.shape != b.shape:
            raise ShapeError(f"cannot subtract shapes {a.shape} and {b.shape}")

        def bw(g, a=self, b=other):
            _accum(a, g)
            _accum(b, -g)

        return _node(a - b, (self, other), bw)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            c = float(other)

            def bw(g, a=self, c=c):
                _accum(a, g * c)

            return _node(self.data * c, (self,), bw)
        a, b = self.data, other.data
        if a.shape != b.shape:
            raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")

        def bw(g, x=self, y=other, a=a, b=b):
            _accum(x, g * b)
            _accum(y, g * a)

        return _node(a * b, (self, other), bw)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __matmul__(self, other: "Tensor") -> "Tensor":
        a, b = self.data, other.data
        if a.ndim == 2 and b.ndim == 1:
            if a.shape[1] != b.shape[0]:
                raise ShapeError(f"matvec shape mismatch: {a.shape} vs {b.shape}")

            def bw(g, x=self, y=other, a=a, b=b):
                _accum(x, np.outer(g, b))
                _accum(y, a.T @ g)
        elif a.ndim == 1 and b.ndim == 2:
            if a.shape[0] != b.shape[0]:
                raise ShapeError(f"vecmat shape mismatch: {a.shape} vs {b.shape}")

            def bw(g, x=self, y=other, a=a, b=b):
                _accum(x, b @ g)
                _accum(y, np.outer(a, g))
        elif a.ndim == 2 and b.ndim == 2:
            if a.shape[1] != b.shape[0]:
                raise ShapeError(f"matmul shape mismatch: {a.shape} vs {b.shape}")

            def bw(g, x=self, y=other, a=a, b=b):
                _accum(x, g @ b.T)
                _accum(y, a.T @ g)
        elif a.ndim == 1 and b.ndim == 1:
            if a.shape[0] != b.shape[0]:
                raise ShapeError(f"dot shape mismatch: {a.shape} vs {b.shape}")

            def bw(g, x=self, y=other, a=a, b=b):
                _accum(x, g * b)
                _accum(y, g * a)
        else:
            raise ShapeError(f"unsupported matmul ranks: {a.shape} @ {b.shape}")
        return _node(a @ b, (self, other), bw)

    # -- shape surgery ---------------------------------------------------------

    def slice(self, start: int, stop: int) -> "Tensor":
        """Contiguous 1-D slice [start, stop)."""
        if self.data.ndim != 1:
            raise ShapeError(f"slice expects a vector, got shape {self.data.shape}")
        n = self.data.shape[0]

        def bw(g, x=self, start=start, stop=stop, n=n):
            full = np.zeros(n)
            full[start:stop] = g
            _accum(x, full)

        return _node(self.data[start:stop].copy(), (self,), bw)

    def row(self, i: int) -> "Tensor":
        """Row i of a matrix as a vector (embedding-style lookup)."""
        if self.data.ndim != 2:
            raise ShapeError(f"row expects a matrix, got shape {self.data.shape}")
        if not 0 <= i < self.data.shape[0]:
            raise ShapeError(f"row {i} out of range for shape {self.data.shape}")

        def bw(g, x=self, i=i):
            full = np.zeros(x.data.shape)
            full[i] = g
            _accum(x, full)

        return _node(self.data[i].copy(), (self,), bw)

    def rows(self, start: int, stop: int) -> "Tensor":
        """Contiguous block of matrix rows [start, stop)."""
        if self.data.ndim != 2:
            raise ShapeError(f"rows expects a matrix, got shape {self.data.shape}")

        def bw(g, x=self, start=start, stop=stop):
            full = np.zeros(x.data.shape)
            full[start:stop] = g
            _accum(x, full)

        return _node(self.data[start:stop].copy(), (self,), bw)

    def sum(self) -> "Tensor":
        def bw(g, x=self):
            _accum(x, np.full(x.data.shape, float(g)))

        return _node(self.data.sum(), (self,), bw)


def _node(data: np.ndarray, parents: tuple[Tensor, ...], bw) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._backward = bw
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t.requires_grad:
        if t.grad is None:
            t.grad = np.zeros(t.data.shape)
        t.grad += g


# -- elementwise nonlinearities ------------------------------------------------


def tanh(t: Tensor) -> Tensor:
    out = np.tanh(t.data)

    def bw(g, x=t, out=out):
        _accum(x, g * (1.0 - out * out))

    return _node(out, (t,), bw)


def sigmoid(t: Tensor) -> Tensor:
    x = t.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)

    def bw(g, t=t, out=out):
        _accum(t, g * out * (1.0 - out))

    return _node(out, (t,), bw)


# -- structural ops --------------------------------------------------------------


def concat(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate vectors into one vector."""
    for p in parts:
        if p.data.ndim != 1:
            raise ShapeError(f"concat expects vectors, got shape {p.data.shape}")
    sizes = [p.data.shape[0] for p in parts]

    def bw(g, parts=tuple(parts), sizes=tuple(sizes)):
        off = 0
        for p, n in zip(parts, sizes):
            _accum(p, g[off:off + n])
            off += n

    return _node(np.concatenate([p.data for p in parts]), tuple(parts), bw)


def stack_rows(rows: Sequence[Tensor]) -> Tensor:
    """Stack equal-length vectors into a matrix, one per row."""
    for r in rows:
        if r.data.ndim != 1:
            raise ShapeError(f"stack_rows expects vectors, got shape {r.data.shape}")

    def bw(g, rows=tuple(rows)):
        for i, r in enumerate(rows):
            _accum(r, g[i])

    return _node(np.stack([r.data for r in rows]), tuple(rows), bw)


def take_rows(m: Tensor, indices) -> Tensor:
    """Gather matrix rows by index; duplicate indices accumulate gradient."""
    idx = np.asarray(indices, dtype=np.int64)
    if m.data.ndim != 2 or idx.ndim != 1:
        raise ShapeError(f"take_rows expects (matrix, index vector), got {m.data.shape} and {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= m.data.shape[0]):
        raise ShapeError(f"row index out of range for shape {m.data.shape}")

    def bw(g, m=m, idx=idx):
        full = np.zeros(m.data.shape)
        np.add.at(full, idx, g)
        _accum(m, full)

    return _node(m.data[idx], (m,), bw)


# -- classifier head primitives ---------------------------------------------------


def matvec(m: Tensor, v: Tensor) -> Tensor:
    """Matrix times vector; the workhorse behind every weight application."""
    if m.data.ndim != 2 or v.data.ndim != 1:
        raise ShapeError(f"matvec expects (matrix, vector), got {m.data.shape} and {v.data.shape}")
    return m @ v


def softmax_masked(logits: Tensor, mask: np.ndarray) -> Tensor:
    """Probability vector over logit positions, with masked positions exactly 0.

    ``mask`` holds 0.0 at allowed positions and -inf at forbidden ones; it is
    added to the logits before a max-subtracted exponentiation, so finite
    logits never overflow and masked entries come out identically zero.
    """
    mask = np.asarray(mask, dtype=np.float64)
    if logits.data.ndim != 1 or mask.shape != logits.data.shape:
        raise ShapeError(
            f"logits shape {logits.data.shape} and mask shape {mask.shape} must be equal vectors"
        )
    allowed = mask == 0.0
    if not np.all(allowed | np.isneginf(mask)):
        raise NumericError("mask entries must be 0 or -inf")
    if not allowed.any():
        raise NumericError("no unmasked label")
    z = logits.data + mask
    e = np.exp(z - z[allowed].max())
    p = e / e.sum()

    def bw(g, t=logits, p=p):
        _accum(t, p * (g - float(g @ p)))

    return _node(p, (logits,), bw)


def cross_entropy(probs: Tensor, target: int) -> Tensor:
    """Negative log-probability of the target index under ``probs``."""
    p = probs.data
    if p.ndim != 1:
        raise ShapeError(f"cross_entropy expects a probability vector, got {p.shape}")
    if not 0 <= target < p.shape[0]:
        raise ShapeError(f"target {target} out of range for {p.shape[0]} classes")
    if abs(p.sum() - 1.0) > 1e-8:
        raise NumericError(f"probabilities sum to {p.sum():.6g}, not 1")
    pt = float(p[target])
    if pt <= 0.0:
        raise NumericError("target label masked or zero-probability")

    def bw(g, t=probs, target=target, pt=pt):
        full = np.zeros(t.data.shape)
        full[target] = -float(g) / pt
        _accum(t, full)

    return _node(np.float64(-np.log(pt)), (probs,), bw)


def dropout(x: Tensor, rate: float, mode: str = "eval", rng=None) -> Tensor:
    """Inverted dropout: zero entries with probability ``rate`` and rescale survivors.

    Identity in eval mode and at rate 0.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise ConfigError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
    if mode == "eval" or rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("dropout in train mode needs an RngStream")
    keep = (rng.uniform(0.0, 1.0, x.data.shape) >= rate) / (1.0 - rate)

    def bw(g, x=x, keep=keep):
        _accum(x, g * keep)

    return _node(x.data * keep, (x,), bw)
