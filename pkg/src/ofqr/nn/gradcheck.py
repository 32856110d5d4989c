"""Finite-difference verification of the network's analytic gradients."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from ofqr import kernels
from ofqr.nn import layers
from ofqr.nn.layers import mse_loss
from ofqr.nn.network import NetworkConfig, backward, forward, init_params
from ofqr.rng import numpy_rng

DENOM_FLOOR = 1e-10


@dataclass
class GradCheckReport:
    max_rel_error: float
    tolerance: float
    per_array: dict[str, float] = field(default_factory=dict)
    checked: int = 0

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_error(analytic: float, numeric: float) -> float:
    denom = max(abs(analytic), abs(numeric), DENOM_FLOOR)
    return abs(analytic - numeric) / denom


def _conv2d_backward_shifted_padding(dy, cache, w):
    """Deliberately wrong conv backward: input gradient cropped one pixel off."""
    (bsz, cin, h, wd), cols, stride, ho, wo = cache
    cout, _, k, _ = w.shape
    pad = k // 2
    dy2 = np.ascontiguousarray(dy.transpose(1, 0, 2, 3)).reshape(cout, -1)
    dw = (dy2 @ cols.T).reshape(w.shape)
    db = dy2.sum(axis=1)
    dcols = np.ascontiguousarray(w.reshape(cout, -1).T @ dy2)
    dxpad = kernels.col2im(dcols, bsz, cin, h + 2 * pad, wd + 2 * pad, k, stride, ho, wo)
    dx = dxpad[:, :, pad - 1 : pad - 1 + h, pad - 1 : pad - 1 + wd]
    return np.ascontiguousarray(dx), dw, db


MUTATIONS = {"padding": _conv2d_backward_shifted_padding}


@contextmanager
def _mutated(name: str | None):
    if name is None:
        yield
        return
    original = layers.conv2d_backward
    layers.conv2d_backward = MUTATIONS[name]
    try:
        yield
    finally:
        layers.conv2d_backward = original


def grad_check(config: NetworkConfig, seed: int = 0, tolerance: float = 1e-4,
               coords_per_array: int = 200, h: float = 1e-5, batch: int = 2,
               mutation: str | None = None) -> GradCheckReport:
    """Compare backprop against central differences on sampled coordinates.

    Loss is the MSE between the network output on a random batch and a
    random target. ``mutation`` swaps in a known-broken backward to show the
    check catches it.
    """
    params = init_params(config, seed)
    gen = numpy_rng(seed, 1, "init")
    # small random biases so every bias path carries signal
    for name in params.biases:
        params.biases[name] += gen.normal(0, 0.05, params.biases[name].shape)
    params.touch()
    x = gen.random((batch, 1, config.height, config.width))
    if config.architecture == "linear":
        x = x - 0.5
    target = gen.random(x.shape)

    def loss_of() -> float:
        out, _ = forward(params, config, x)
        return mse_loss(out, target)[0]

    with _mutated(mutation):
        out, cache = forward(params, config, x)
        _, g = mse_loss(out, target)
        grads = backward(params, config, cache, g)

    report = GradCheckReport(0.0, tolerance)
    for key, arr in params.arrays():
        flat = arr.reshape(-1)
        n_pick = min(coords_per_array, flat.size)
        picks = gen.choice(flat.size, size=n_pick, replace=False)
        gflat = grads[key].reshape(-1)
        worst = 0.0
        for i in picks:
            orig = flat[i]
            flat[i] = orig + h
            up = loss_of()
            flat[i] = orig - h
            down = loss_of()
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            worst = max(worst, relative_error(float(gflat[i]), numeric))
        report.per_array[key] = worst
        report.checked += n_pick
        report.max_rel_error = max(report.max_rel_error, worst)
    return report
