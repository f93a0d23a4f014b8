"""Autodiff tensors, RNG, parameters, optimizer, LSTM cell, gradient checks."""

from .gradcheck import finite_difference_check
from .lstm import add_lstm_params, lstm_cell_step
from .params import ParameterStore, adam_step, clip_gradients
from .rng import RngStream
from .tensor import (
    Tensor,
    concat,
    cross_entropy,
    dropout,
    matvec,
    no_grad,
    sigmoid,
    softmax_masked,
    stack_rows,
    take_rows,
    tanh,
)

__all__ = [
    "Tensor",
    "ParameterStore",
    "RngStream",
    "adam_step",
    "add_lstm_params",
    "clip_gradients",
    "concat",
    "cross_entropy",
    "dropout",
    "finite_difference_check",
    "lstm_cell_step",
    "matvec",
    "no_grad",
    "sigmoid",
    "softmax_masked",
    "stack_rows",
    "take_rows",
    "tanh",
]
