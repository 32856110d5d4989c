"""Image-quality figures of merit: SSIM, PSNR and QR decode rate."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ofqr.errors import (
    DecodeError,
    EmptySet,
    ImageSmallerThanWindow,
    LengthMismatch,
    ShapeMismatch,
)

PSNR_INF = math.inf


@dataclass(frozen=True)
class SsimConfig:
    window: int = 11
    sigma: float = 1.5
    data_range: float = 1.0
    k1: float = 0.01
    k2: float = 0.03

    @property
    def c1(self) -> float:
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.data_range) ** 2

    def kernel1d(self) -> np.ndarray:
        r = np.arange(self.window) - (self.window - 1) / 2
        g = np.exp(-(r**2) / (2 * self.sigma**2))
        return g / g.sum()


DEFAULT_SSIM = SsimConfig()


@dataclass
class MetricRecord:
    sample_id: int
    ssim: float
    psnr_db: float
    decode_success: bool
    corrections: int | None = None


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Separable Gaussian-weighted sum over fully-inside windows (last two axes)."""
    k = g.size
    rows = np.lib.stride_tricks.sliding_window_view(img, k, axis=-2) @ g
    return np.lib.stride_tricks.sliding_window_view(rows, k, axis=-1) @ g


def ssim_map(x: np.ndarray, y: np.ndarray, config: SsimConfig = DEFAULT_SSIM) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    if x.ndim < 2 or min(x.shape[-2:]) < config.window:
        raise ImageSmallerThanWindow(f"image {x.shape[-2:]} smaller than window {config.window}")
    g = config.kernel1d()
    mx = _filter_valid(x, g)
    my = _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    c1, c2 = config.c1, config.c2
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return num / den


def ssim(x: np.ndarray, y: np.ndarray, config: SsimConfig = DEFAULT_SSIM) -> float:
    """Mean SSIM over valid window positions."""
    return float(ssim_map(x, y, config).mean())


def ssim_batch(xs: np.ndarray, ys: np.ndarray, config: SsimConfig = DEFAULT_SSIM) -> np.ndarray:
    """Per-image SSIM for stacks ``(N, H, W)``."""
    return ssim_map(xs, ys, config).mean(axis=(-2, -1))


def psnr(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(1.0 / mse)


def mean_ssim(pairs: Sequence[tuple[np.ndarray, np.ndarray]], config: SsimConfig = DEFAULT_SSIM) -> float:
    if len(pairs) == 0:
        raise EmptySet("mean_ssim needs at least one pair")
    total = 0.0
    for x, y in pairs:
        total += ssim(x, y, config)
    return total / len(pairs)


def try_decode(image: np.ndarray, box=None) -> tuple[str | None, int | None]:
    """Sample an image onto the module grid and decode it; ``(None, None)`` on failure."""
    from ofqr.qr import decode, sample_grid

    try:
        grid = sample_grid(image, box=box)
        text, corrections = decode(grid, return_corrections=True)
    except DecodeError:
        return None, None
    return text, corrections


def decode_rate(reconstructions: Sequence[np.ndarray], truths: Sequence[str], box=None) -> float:
    """Fraction of images whose sampled grid decodes to the true payload."""
    if len(reconstructions) != len(truths):
        raise LengthMismatch(f"{len(reconstructions)} images vs {len(truths)} payloads")
    if len(truths) == 0:
        raise EmptySet("decode_rate needs at least one image")
    hits = 0
    for img, truth in zip(reconstructions, truths):
        text, _ = try_decode(img, box)
        hits += text == truth
    return hits / len(truths)


def format_psnr(value: float) -> str:
    return "inf" if math.isinf(value) else repr(float(value))


def write_metrics_csv(path, records: Sequence[MetricRecord]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "ssim", "psnr_db", "decoded", "corrections"])
        for r in records:
            w.writerow([
                r.sample_id,
                repr(float(r.ssim)),
                format_psnr(r.psnr_db),
                int(r.decode_success),
                "" if r.corrections is None else r.corrections,
            ])


def read_metrics_csv(path) -> list[MetricRecord]:
    out = []
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(MetricRecord(
                int(row["sample_id"]),
                float(row["ssim"]),
                math.inf if row["psnr_db"] == "inf" else float(row["psnr_db"]),
                row["decoded"] == "1",
                int(row["corrections"]) if row["corrections"] else None,
            ))
    return out
