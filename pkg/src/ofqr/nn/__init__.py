"""Encoder-decoder reconstruction network, optimiser and gradient checks."""

from ofqr.nn.adam import AdamState, adam_step
from ofqr.nn.layers import mse_loss
from ofqr.nn.network import (
    NetworkConfig,
    NetworkParams,
    backward,
    forward,
    init_params,
    predict,
)

__all__ = [
    "AdamState",
    "NetworkConfig",
    "NetworkParams",
    "adam_step",
    "backward",
    "forward",
    "init_params",
    "mse_loss",
    "predict",
]
