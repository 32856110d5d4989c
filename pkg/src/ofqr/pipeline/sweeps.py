"""Robustness sweeps over gap (defocus), in-plane shift and rotation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ofqr.optics import Geometry, NoiseModel, Pose
from ofqr.pipeline.dataset import simulate
from ofqr.pipeline.evaluation import Model, score

# sweep samples use stream ids far from any training/validation ids
SWEEP_ID_BASE = 1 << 40

COLUMNS = ("model", "axis", "value", "gap_mm", "dx_mm", "dy_mm", "theta_x_deg",
           "theta_y_deg", "theta_z_deg", "mean_ssim", "stderr", "n", "decode_rate")


@dataclass
class SweepRow:
    model: str
    axis: str
    value: float
    gap_mm: float
    pose: Pose
    mean_ssim: float
    stderr: float
    n: int
    decode_rate: float
    ssims: np.ndarray = field(repr=False, default=None)

    def as_csv(self) -> list:
        p = self.pose
        return [self.model, self.axis, repr(float(self.value)), repr(float(self.gap_mm)),
                repr(p.dx_mm), repr(p.dy_mm), repr(p.theta_x_deg), repr(p.theta_y_deg),
                repr(p.theta_z_deg), repr(self.mean_ssim), repr(self.stderr), self.n,
                repr(self.decode_rate)]


@dataclass
class SweepResult:
    rows: list[SweepRow]

    def select(self, model: str | None = None, axis: str | None = None) -> list[SweepRow]:
        return [r for r in self.rows
                if (model is None or r.model == model) and (axis is None or r.axis == axis)]

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in self.rows:
                w.writerow(r.as_csv())


def _row(model: Model, samples, axis, value, gap, pose) -> SweepRow:
    records = score(model.reconstruct(samples.frames), samples)
    ssims = np.array([r.ssim for r in records])
    n = len(records)
    stderr = float(ssims.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SweepRow(model.label, axis, float(value), float(gap), pose, float(ssims.mean()),
                    stderr, n, sum(r.decode_success for r in records) / n, ssims)


def sweep_samples(geometry: Geometry, noise: NoiseModel | None, n: int, seed: int,
                  pose: Pose = Pose(), jobs: int = 1):
    """Fresh evaluation samples; the same payloads and noise streams at every sweep point."""
    return simulate(geometry, noise, range(SWEEP_ID_BASE, SWEEP_ID_BASE + n), seed, pose, jobs)


def sweep_gap(models: Sequence[Model], gaps: Iterable[float], n: int, seed: int,
              geometry: Geometry, noise: NoiseModel | None = NoiseModel(), jobs: int = 1) -> SweepResult:
    rows = []
    for gap in sorted(float(g) for g in gaps):
        geom = geometry.with_gap(gap)
        samples = sweep_samples(geom, noise, n, seed, jobs=jobs)
        for model in models:
            rows.append(_row(model, samples, "gap", gap, gap, Pose()))
    rows.sort(key=lambda r: (r.model, r.value))
    return SweepResult(rows)


def default_shifts(step_mm: float = 1.0) -> list[tuple[float, float]]:
    """Origin plus +-step along each axis and on the diagonals (3x3 grid)."""
    return [(dx, dy) for dy in (-step_mm, 0.0, step_mm) for dx in (-step_mm, 0.0, step_mm)]


def sweep_shift(model: Model, shifts: Iterable[tuple[float, float]], n: int, seed: int,
                geometry: Geometry, noise: NoiseModel | None = NoiseModel(), jobs: int = 1) -> SweepResult:
    # ordered by shift magnitude, then dx, dy
    shifts = sorted({(float(dx), float(dy)) for dx, dy in shifts} | {(0.0, 0.0)},
                    key=lambda s: (math.hypot(*s), s))
    rows = []
    for dx, dy in shifts:
        pose = Pose(dx_mm=dx, dy_mm=dy)
        samples = sweep_samples(geometry, noise, n, seed, pose, jobs)
        rows.append(_row(model, samples, "shift", math.hypot(dx, dy), geometry.gap_mm, pose))
    return SweepResult(rows)


_AXIS_FIELD = {"x": "theta_x_deg", "y": "theta_y_deg", "z": "theta_z_deg"}


def sweep_rot(model: Model, axes: Iterable[str], angles: Iterable[float], n: int, seed: int,
              geometry: Geometry, noise: NoiseModel | None = NoiseModel(), jobs: int = 1) -> SweepResult:
    angles = sorted({float(a) for a in angles} | {0.0})
    rows = []
    for axis in axes:
        for angle in angles:
            pose = Pose(**{_AXIS_FIELD[axis]: angle})
            samples = sweep_samples(geometry, noise, n, seed, pose, jobs)
            rows.append(_row(model, samples, f"rot_{axis}", angle, geometry.gap_mm, pose))
    return SweepResult(rows)
