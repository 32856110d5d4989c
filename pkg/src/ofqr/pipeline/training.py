"""Mini-batch training loop with deterministic per-sample gradient reduction."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ofqr import rng
from ofqr.errors import GeometryMismatch
from ofqr.metrics import ssim_batch
from ofqr.nn import checkpoint
from ofqr.nn.adam import AdamState, adam_step
from ofqr.nn.layers import mse_loss
from ofqr.nn.network import NetworkConfig, NetworkParams, backward, forward, init_params, predict
from ofqr.pipeline.dataset import Samples

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "train_ssim", "val_ssim", "train_loss")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 10
    lr: float = 1e-3
    loss: str = "mse"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.loss != "mse":
            raise ValueError("only the mse loss is supported")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def sample_gradient(params: NetworkParams, config: NetworkConfig, frame: np.ndarray,
                    target: np.ndarray, count: int):
    """Forward/backward for one sample; loss normalised by the batch element count."""
    out, cache = forward(params, config, frame[None, None])
    loss, g = mse_loss(out[0, 0], target, count)
    return backward(params, config, cache, g[None, None]), loss, out[0, 0]


def batch_gradient(params, config, frames, targets, pool: ThreadPoolExecutor | None = None):
    """Batch gradient as a left fold of per-sample gradients in sample order.

    The result does not depend on whether samples ran on one or many workers.
    """
    count = frames.size
    if pool is None:
        parts = [sample_gradient(params, config, f, t, count) for f, t in zip(frames, targets)]
    else:
        parts = list(pool.map(lambda ft: sample_gradient(params, config, ft[0], ft[1], count),
                              zip(frames, targets)))
    total = {k: v.copy() for k, v in parts[0][0].items()}
    loss = parts[0][1]
    for grads, l, _ in parts[1:]:
        for k in total:
            total[k] += grads[k]
        loss += l
    outputs = np.stack([p[2] for p in parts])
    return total, loss, outputs


def write_history(path, history: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for row in history:
            w.writerow([row["epoch"]] + [repr(float(row[c])) for c in HISTORY_COLUMNS[1:]])


def read_history(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {"epoch": int(r["epoch"]), **{c: float(r[c]) for c in HISTORY_COLUMNS[1:]}}
            for r in csv.DictReader(fh)
        ]


def history_path(checkpoint_path) -> Path:
    p = Path(checkpoint_path)
    return p.with_name(p.stem + "_history.csv")


def train(train_set: Samples, val_set: Samples, net_config: NetworkConfig,
          train_config: TrainConfig, out_checkpoint=None, jobs: int = 1,
          progress: bool = False) -> list[dict]:
    """Train one network; keeps and saves the best-validation parameters.

    Returns the per-epoch history (also written next to the checkpoint).
    """
    if train_set.geometry != val_set.geometry:
        raise GeometryMismatch("training and validation sets use different geometries")
    params = init_params(net_config, train_config.seed)
    state = AdamState(lr=train_config.lr)
    n = len(train_set)
    bs = train_config.batch_size
    history: list[dict] = []
    best = None
    pool = ThreadPoolExecutor(jobs) if jobs > 1 else None
    try:
        for epoch in range(1, train_config.epochs + 1):
            order = rng.numpy_rng(train_config.seed, epoch, "shuffle").permutation(n)
            loss_sum = 0.0
            ssim_sum = 0.0
            for start in range(0, n, bs):
                idx = order[start : start + bs]
                frames = train_set.frames[idx]
                targets = train_set.targets[idx]
                grads, loss, outputs = batch_gradient(params, net_config, frames, targets, pool)
                params, state = adam_step(params, grads, state)
                loss_sum += loss * len(idx)
                ssim_sum += float(ssim_batch(outputs, targets).sum())
            val_out = predict(params, net_config, val_set.frames)
            val_ssim = float(ssim_batch(val_out, val_set.targets).mean())
            row = {
                "epoch": epoch,
                "train_ssim": ssim_sum / n,
                "val_ssim": val_ssim,
                "train_loss": loss_sum / n,
            }
            history.append(row)
            if progress:
                log.info("epoch %d loss %.6f train_ssim %.4f val_ssim %.4f",
                         epoch, row["train_loss"], row["train_ssim"], val_ssim)
            if best is None or val_ssim > best[0]:
                best = (val_ssim, epoch, params.copy())
    finally:
        if pool is not None:
            pool.shutdown()
    if out_checkpoint is not None:
        checkpoint.save(
            out_checkpoint, best[2], net_config,
            header_extra={
                "train_config": train_config.to_json(),
                "epoch": best[1],
                "best_val_ssim": best[0],
                "history": history,
                "geometry": train_set.geometry.to_json(),
            },
        )
        write_history(history_path(out_checkpoint), history)
    return history
