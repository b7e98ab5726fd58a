"""Trainable layers: 2-D convolution, linear, batch norm, activations, NLL."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from .tensor import (DiffTensor, _accumulate, _node, as_tensor, matmul,
                     reshape, transpose)

SELU_LAMBDA = 1.0507009873554804934193349852946
SELU_ALPHA = 1.6732632423543772848170429916717


def conv2d(x, weights, bias=None, padding=(0, 0)) -> DiffTensor:
    """Cross-correlation with stride 1 and zero padding.

    ``x`` is [B, C_in, H, W] (or [C_in, H, W], promoted to a unit batch),
    ``weights`` is [C_out, C_in, kh, kw], ``bias`` is [C_out] or None.
    ``padding`` is (pad_h, pad_w), applied on both sides of each axis.
    """
    x, weights = as_tensor(x), as_tensor(weights)
    squeeze_batch = x.values.ndim == 3
    xv = x.values[None] if squeeze_batch else x.values
    if xv.ndim != 4 or weights.values.ndim != 4:
        raise ValueError("conv2d expects a 4-D input and 4-D weights")
    n_batch, c_in, h, w = xv.shape
    c_out, c_in_w, kh, kw = weights.values.shape
    if c_in_w != c_in:
        raise ValueError("weight channel count does not match the input")
    ph, pw = padding
    xp = np.pad(xv, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    h_out = h + 2 * ph - kh + 1
    w_out = w + 2 * pw - kw + 1
    if h_out < 1 or w_out < 1:
        raise ValueError("kernel does not fit the padded input")

    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5))
    cols = cols.reshape(n_batch * h_out * w_out, c_in * kh * kw)
    w_mat = weights.values.reshape(c_out, -1)
    out = cols @ w_mat.T
    parents = [x, weights]
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.values
        parents.append(bias)
    out = np.moveaxis(out.reshape(n_batch, h_out, w_out, c_out), 3, 1)
    if squeeze_batch:
        out = out[0]

    def backward(g):
        gv = g[None] if squeeze_batch else g
        g_mat = np.ascontiguousarray(gv.transpose(0, 2, 3, 1)).reshape(-1, c_out)
        if weights.requires_grad:
            _accumulate(weights, (g_mat.T @ cols).reshape(weights.values.shape))
        if bias is not None and bias.requires_grad:
            _accumulate(bias, g_mat.sum(axis=0))
        if x.requires_grad:
            g_cols = (g_mat @ w_mat).reshape(n_batch, h_out, w_out, c_in, kh, kw)
            gxp = np.zeros_like(xp)
            for u in range(kh):
                for v in range(kw):
                    gxp[:, :, u:u + h_out, v:v + w_out] += g_cols[:, :, :, :, u, v].transpose(0, 3, 1, 2)
            gx = gxp[:, :, ph:ph + h, pw:pw + w]
            _accumulate(x, gx[0] if squeeze_batch else gx)

    return _node(out, tuple(parents), backward)


def linear(x, weights, bias=None) -> DiffTensor:
    """Affine map over the last axis: y[..., o] = sum_i W[o, i] x[..., i] + b[o]."""
    x, weights = as_tensor(x), as_tensor(weights)
    if weights.values.ndim != 2:
        raise ValueError("weights must be [out_features, in_features]")
    if x.values.shape[-1] != weights.values.shape[1]:
        raise ValueError("input feature size does not match the weights")
    lead = x.values.shape[:-1]
    flat = reshape(x, (-1, x.values.shape[-1])) if x.values.ndim != 2 else x
    out = matmul(flat, transpose(weights, (1, 0)))
    if bias is not None:
        out = out + as_tensor(bias)
    if x.values.ndim != 2:
        out = reshape(out, lead + (weights.values.shape[0],))
    return out


class BatchNorm:
    """Batch normalization with running statistics for inference.

    ``num_channels`` refers to axis 1 of a 4-D input [B, C, H, W] or axis 1
    of a 2-D input [B, F]. Training mode normalizes with (biased) batch
    statistics and updates the running buffers; eval mode uses the buffers.
    """

    def __init__(self, num_channels: int, eps: float = 1e-5, momentum: float = 0.1):
        self.gamma = DiffTensor(np.ones(num_channels), requires_grad=True)
        self.beta = DiffTensor(np.zeros(num_channels), requires_grad=True)
        self.running_mean = np.zeros(num_channels)
        self.running_var = np.ones(num_channels)
        self.eps = eps
        self.momentum = momentum

    def __call__(self, x, train: bool) -> DiffTensor:
        return batch_norm(x, self.gamma, self.beta, self.running_mean,
                          self.running_var, train, self.momentum, self.eps)


def batch_norm(x, gamma, beta, running_mean, running_var, train: bool,
               momentum: float = 0.1, eps: float = 1e-5) -> DiffTensor:
    """Functional batch norm; mutates the running buffers in training mode."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.values.ndim == 2:
        axes = (0,)
    elif x.values.ndim == 4:
        axes = (0, 2, 3)
    else:
        raise ValueError("batch_norm expects a 2-D or 4-D input")
    if train and x.values.shape[0] < 2:
        raise ValueError("training-mode batch norm needs a batch of at least 2")

    if train:
        mean = x.values.mean(axis=axes)
        var = x.values.var(axis=axes)
        running_mean *= (1.0 - momentum)
        running_mean += momentum * mean
        running_var *= (1.0 - momentum)
        running_var += momentum * var
    else:
        mean = running_mean
        var = running_var

    shape = [1] * x.values.ndim
    shape[1] = x.values.shape[1]
    mean_r = mean.reshape(shape)
    inv_std = 1.0 / np.sqrt(var + eps)
    inv_std_r = inv_std.reshape(shape)
    x_hat = (x.values - mean_r) * inv_std_r
    out = gamma.values.reshape(shape) * x_hat + beta.values.reshape(shape)

    def backward(g):
        if beta.requires_grad:
            _accumulate(beta, g.sum(axis=axes))
        if gamma.requires_grad:
            _accumulate(gamma, (g * x_hat).sum(axis=axes))
        if x.requires_grad:
            scale = gamma.values.reshape(shape) * inv_std_r
            if train:
                g_mean = g.mean(axis=axes).reshape(shape)
                gx_mean = (g * x_hat).mean(axis=axes).reshape(shape)
                _accumulate(x, scale * (g - g_mean - x_hat * gx_mean))
            else:
                _accumulate(x, scale * g)

    return _node(out, (x, gamma, beta), backward)


def selu(x) -> DiffTensor:
    """Scaled exponential linear unit with the standard constants."""
    x = as_tensor(x)
    flat = x.values.reshape(-1)
    neg = flat <= 0
    expneg = np.exp(flat[neg])
    values = SELU_LAMBDA * flat.copy()
    values[neg] = (SELU_LAMBDA * SELU_ALPHA) * (expneg - 1.0)

    def backward(g):
        local = np.full_like(flat, SELU_LAMBDA)
        local[neg] = (SELU_LAMBDA * SELU_ALPHA) * expneg
        _accumulate(x, (local * g.reshape(-1)).reshape(x.values.shape))

    return _node(values.reshape(x.values.shape), (x,), backward)


def gelu(x) -> DiffTensor:
    """Gaussian error linear unit, exact form x * Phi(x)."""
    x = as_tensor(x)
    cdf = 0.5 * (1.0 + erf(x.values / np.sqrt(2.0)))
    pdf = np.exp(-0.5 * x.values ** 2) / np.sqrt(2.0 * np.pi)
    values = x.values * cdf

    def backward(g):
        _accumulate(x, g * (cdf + x.values * pdf))

    return _node(values, (x,), backward)


ACTIVATIONS = {"selu": selu, "gelu": gelu}


def log_softmax_values(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax_values(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax_values(logits))


def softmax_nll(logits, targets) -> DiffTensor:
    """Summed negative log-likelihood of a softmax over the last axis.

    ``targets`` holds integer class indices with shape ``logits.shape[:-1]``.
    The gradient of the summed loss is softmax(logits) - one_hot(targets).
    """
    logits = as_tensor(logits)
    targets = np.asarray(targets)
    n_classes = logits.values.shape[-1]
    if n_classes < 2:
        raise ValueError("softmax needs at least two classes")
    if targets.shape != logits.values.shape[:-1]:
        raise ValueError("target shape must match the logit positions")
    if targets.min() < 0 or targets.max() >= n_classes:
        raise ValueError("target index out of range")
    log_probs = log_softmax_values(logits.values)
    picked = np.take_along_axis(log_probs, targets[..., None], axis=-1)
    loss = -picked.sum()

    def backward(g):
        grad = softmax_values(logits.values)
        np.subtract.at(grad.reshape(-1, n_classes),
                       (np.arange(targets.size), targets.reshape(-1)), 1.0)
        _accumulate(logits, grad * g)

    return _node(np.float64(loss), (logits,), backward)
