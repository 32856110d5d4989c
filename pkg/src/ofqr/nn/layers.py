"""Differentiable building blocks on NCHW float64 arrays.

Each ``*_forward`` returns ``(output, cache)`` and the matching
``*_backward`` maps an output gradient (plus that cache) to input and
parameter gradients. Convolutions are 3x3 with zero "same" padding.
"""

from __future__ import annotations

import numpy as np

from ofqr import kernels
from ofqr.errors import ShapeMismatch


def _pad(x: np.ndarray, pad: int) -> np.ndarray:
    b, c, h, w = x.shape
    out = np.zeros((b, c, h + 2 * pad, w + 2 * pad))
    out[:, :, pad : pad + h, pad : pad + w] = x
    return out


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int = 1):
    bsz, cin, h, wd = x.shape
    cout, _, k, _ = w.shape
    pad = k // 2
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    xpad = _pad(x, pad)
    cols = kernels.im2col(xpad, k, stride, ho, wo)
    out = w.reshape(cout, -1) @ cols + b[:, None]
    y = out.reshape(cout, bsz, ho, wo).transpose(1, 0, 2, 3)
    return np.ascontiguousarray(y), (x.shape, cols, stride, ho, wo)


def conv2d_backward(dy: np.ndarray, cache, w: np.ndarray):
    (bsz, cin, h, wd), cols, stride, ho, wo = cache
    cout, _, k, _ = w.shape
    pad = k // 2
    dy2 = np.ascontiguousarray(dy.transpose(1, 0, 2, 3)).reshape(cout, -1)
    dw = (dy2 @ cols.T).reshape(w.shape)
    db = dy2.sum(axis=1)
    if stride == 1 and cout < cin:
        # correlate dy with the flipped, transposed kernel; cheaper than
        # scattering cin*k*k patch rows when the layer narrows
        wflip = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)).reshape(cin, -1)
        dcols = kernels.im2col(_pad(dy, pad), k, 1, h, wd)
        dx = (wflip @ dcols).reshape(cin, bsz, h, wd).transpose(1, 0, 2, 3)
        return np.ascontiguousarray(dx), dw, db
    dcols = np.ascontiguousarray(w.reshape(cout, -1).T @ dy2)
    dxpad = kernels.col2im(dcols, bsz, cin, h + 2 * pad, wd + 2 * pad, k, stride, ho, wo)
    dx = dxpad[:, :, pad : pad + h, pad : pad + wd]
    return np.ascontiguousarray(dx), dw, db


def leaky_relu_forward(x: np.ndarray, slope: float = 0.1):
    pos = x > 0
    return np.where(pos, x, slope * x), (pos, slope)


def leaky_relu_backward(dy: np.ndarray, cache):
    pos, slope = cache
    return np.where(pos, dy, slope * dy)


def sigmoid_forward(x: np.ndarray):
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    return y, y


def sigmoid_backward(dy: np.ndarray, y: np.ndarray):
    return dy * y * (1.0 - y)


def upsample2_forward(x: np.ndarray):
    return x.repeat(2, axis=2).repeat(2, axis=3), None


def upsample2_backward(dy: np.ndarray, cache=None):
    b, c, h, w = dy.shape
    return dy.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


def concat_forward(a: np.ndarray, b: np.ndarray):
    return np.concatenate([a, b], axis=1), a.shape[1]


def concat_backward(dy: np.ndarray, split: int):
    return np.ascontiguousarray(dy[:, :split]), np.ascontiguousarray(dy[:, split:])


def mse_loss(output: np.ndarray, target: np.ndarray, count: int | None = None):
    """Mean squared error and its gradient.

    ``count`` overrides the divisor so per-sample pieces of one batch share
    the batch-level normalisation.
    """
    if np.shape(output) != np.shape(target):
        raise ShapeMismatch(f"output {np.shape(output)} vs target {np.shape(target)}")
    diff = output - target
    n = diff.size if count is None else count
    return float(np.sum(diff * diff) / n), 2.0 * diff / n
