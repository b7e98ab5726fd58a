"""Minimal reverse-mode autodiff engine for the autoencoder."""

from .tensor import (DiffTensor, as_tensor, concat, div, exp, log, log10,
                     matmul, maximum, mul, narrow, no_grad, parameter, power,
                     reshape, tmax, tmean, transpose, tsum)
from .layers import (ACTIVATIONS, BatchNorm, batch_norm, conv2d, gelu, linear,
                     log_softmax_values, selu, softmax_nll, softmax_values)
from .optim import AdamW
from .checkpoint import load_tensors, save_tensors

__all__ = [
    "ACTIVATIONS", "AdamW", "BatchNorm", "DiffTensor", "as_tensor",
    "batch_norm", "concat", "conv2d", "div", "exp", "gelu", "linear",
    "load_tensors", "log", "log10", "log_softmax_values", "matmul", "maximum",
    "mul", "narrow", "no_grad", "parameter", "power", "reshape", "save_tensors",
    "selu", "softmax_nll", "softmax_values", "tmax", "tmean", "transpose", "tsum",
]
