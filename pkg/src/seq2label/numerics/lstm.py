"""Single LSTM cell step and its parameter initializer."""

from __future__ import annotations

from ..errors import ShapeError
from .params import ParameterStore
from .tensor import Tensor, sigmoid, tanh


def lstm_cell_step(
    x: Tensor,
    state: tuple[Tensor, Tensor],
    wx: Tensor,
    wh: Tensor,
    b: Tensor,
) -> tuple[Tensor, Tensor]:
    """Advance an LSTM cell one step; returns (h', c').

    Weight layout: wx is (input_dim, 4H), wh is (H, 4H), b is (4H,), with the
    four gate blocks ordered input, forget, cell, output.
    """
    h, c = state
    hidden = h.data.shape[0]
    if wx.data.ndim != 2 or wx.data.shape[0] != x.data.shape[0] or wx.data.shape[1] != 4 * hidden:
        raise ShapeError(
            f"wx shape {wx.data.shape} does not match input {x.data.shape} and hidden {hidden}"
        )
    if wh.data.shape != (hidden, 4 * hidden):
        raise ShapeError(f"wh shape {wh.data.shape} does not match hidden {hidden}")
    if b.data.shape != (4 * hidden,):
        raise ShapeError(f"b shape {b.data.shape} does not match hidden {hidden}")
    pre = (x @ wx) + (h @ wh) + b
    i = sigmoid(pre.slice(0, hidden))
    f = sigmoid(pre.slice(hidden, 2 * hidden))
    g = tanh(pre.slice(2 * hidden, 3 * hidden))
    o = sigmoid(pre.slice(3 * hidden, 4 * hidden))
    c_new = (f * c) + (i * g)
    h_new = o * tanh(c_new)
    return h_new, c_new


def add_lstm_params(
    store: ParameterStore, prefix: str, input_dim: int, hidden: int, rng, scale: float = 0.1
) -> tuple[Tensor, Tensor, Tensor]:
    """Register wx/wh/b for one cell; forget-gate bias starts at 1.0."""
    wx = store.add(f"{prefix}.wx", (input_dim, 4 * hidden), rng, scale)
    wh = store.add(f"{prefix}.wh", (hidden, 4 * hidden), rng, scale)
    b = store.add(f"{prefix}.b", (4 * hidden,), rng, scale)
    b.data[hidden:2 * hidden] = 1.0
    return wx, wh, b
