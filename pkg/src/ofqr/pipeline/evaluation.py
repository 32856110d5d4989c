"""Per-sample evaluation of a trained checkpoint."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ofqr import io
from ofqr.errors import ShapeMismatch
from ofqr.metrics import MetricRecord, psnr, ssim_batch, try_decode, write_metrics_csv
from ofqr.nn import checkpoint
from ofqr.nn.network import NetworkConfig, NetworkParams, predict
from ofqr.optics import object_box
from ofqr.pipeline.dataset import Samples

SEPARATOR = 2


@dataclass
class Model:
    params: NetworkParams
    config: NetworkConfig
    header: dict

    @classmethod
    def load(cls, path) -> "Model":
        return cls(*checkpoint.load(path))

    @property
    def label(self) -> str:
        geom = self.header.get("geometry") or {}
        gap = geom.get("gap_mm")
        return f"z={gap:g}mm" if gap is not None else "model"

    def reconstruct(self, frames: np.ndarray) -> np.ndarray:
        if frames.shape[1:] != (self.config.height, self.config.width):
            raise ShapeMismatch(
                f"frames {frames.shape[1:]} do not match network input "
                f"{self.config.height}x{self.config.width}"
            )
        return predict(self.params, self.config, frames)


def score(outputs: np.ndarray, samples: Samples, decode: bool = True) -> list[MetricRecord]:
    ssims = ssim_batch(outputs, samples.targets)
    box = object_box(samples.geometry)
    records = []
    for k in range(len(samples)):
        text, corrections = try_decode(outputs[k], box) if decode else (None, None)
        ok = text == samples.payloads[k]
        records.append(MetricRecord(
            k, float(ssims[k]), psnr(outputs[k], samples.targets[k]), ok, corrections if ok else None
        ))
    return records


def triptych(reference: np.ndarray, sensor: np.ndarray, output: np.ndarray) -> np.ndarray:
    """Reference | sensor | output side by side with white separators."""
    h = reference.shape[0]
    sep = np.ones((h, SEPARATOR))
    return np.hstack([reference, sep, sensor, sep, output])


def evaluate(model: Model, samples: Samples, out_dir=None, triptychs: int = 0) -> list[MetricRecord]:
    """Score every sample; optionally write ``metrics.csv`` and example PGMs."""
    outputs = model.reconstruct(samples.frames)
    records = score(outputs, samples)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(out / "metrics.csv", records)
        for k in range(min(triptychs, len(samples))):
            io.save_pgm(out / f"triptych_{k:04d}.pgm",
                        triptych(samples.targets[k], samples.frames[k], outputs[k]))
    return records
