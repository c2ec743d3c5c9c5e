"""Minimal reverse-mode autodiff for single-image convolutional generators."""

from .checkpoint import CheckpointError, load_module, load_tensors, save_module, save_tensors
from .functional import (
    batch_norm,
    concat_channels,
    conv2d,
    conv2d_1x1,
    forward_diff,
    prelu,
    upsample_bilinear_2x,
)
from .modules import BatchNorm, Conv2d, Module, PReLU
from .optim import Adam, AdamState, adam_step, adam_update
from .tensor import Tensor, backward, mean, sqrt, square, tmin, topo_order, tsum, zero_grad

__all__ = [
    "Adam",
    "AdamState",
    "BatchNorm",
    "CheckpointError",
    "Conv2d",
    "Module",
    "PReLU",
    "Tensor",
    "adam_step",
    "adam_update",
    "backward",
    "batch_norm",
    "concat_channels",
    "conv2d",
    "conv2d_1x1",
    "forward_diff",
    "load_module",
    "load_tensors",
    "mean",
    "prelu",
    "save_module",
    "save_tensors",
    "sqrt",
    "square",
    "topo_order",
    "tsum",
    "upsample_bilinear_2x",
    "zero_grad",
]
