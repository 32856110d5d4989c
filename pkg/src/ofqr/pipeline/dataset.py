"""Deterministic simulated datasets of (sensor frame, target image) pairs."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ofqr import io, rng
from ofqr.errors import FormatError
from ofqr.optics import (
    Geometry,
    NoiseModel,
    Pose,
    apply_noise,
    exposure_constant,
    grid_to_radiance,
    object_on_sensor,
    render_batch,
)
from ofqr.qr import encode

SCHEMA_VERSION = 1
# samples rendered per transfer-block pass
_RENDER_CHUNK = 256


@dataclass
class Samples:
    """In-memory stack of simulated samples (all arrays share the first axis)."""

    frames: np.ndarray
    targets: np.ndarray
    payloads: list[str]
    sample_ids: list[int]
    geometry: Geometry
    poses: list[Pose] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.payloads)


def simulate(geometry: Geometry, noise: NoiseModel | None, sample_ids: Sequence[int],
             master_seed: int, pose: Pose = Pose(), jobs: int = 1) -> Samples:
    """Render samples; every random draw comes from the sample's own substreams."""
    ids = list(sample_ids)
    payloads = [rng.random_payload(master_seed, i) for i in ids]
    grids = [encode(p) for p in payloads]
    h, w = geometry.sensor_shape
    frames = np.empty((len(ids), h, w))
    targets = np.empty((len(ids), h, w))
    for k, g in enumerate(grids):
        targets[k] = object_on_sensor(g, geometry)
    for start in range(0, len(ids), _RENDER_CHUNK):
        stop = min(start + _RENDER_CHUNK, len(ids))
        objects = np.stack([grid_to_radiance(g, geometry.object_raster) for g in grids[start:stop]])
        frames[start:stop] = render_batch(objects, geometry, pose, jobs=jobs)

    if noise is not None:
        def add_noise(k):
            gen = rng.numpy_rng(master_seed ^ noise.seed, ids[k], "noise")
            frames[k] = apply_noise(frames[k], noise, gen)

        if jobs > 1:
            with ThreadPoolExecutor(jobs) as pool:
                list(pool.map(add_noise, range(len(ids))))
        else:
            for k in range(len(ids)):
                add_noise(k)
    return Samples(frames, targets, payloads, ids, geometry, [pose] * len(ids))


def gen_dataset(geometry: Geometry, noise: NoiseModel | None, count: int, master_seed: int,
                out_dir, pose: Pose = Pose(), jobs: int = 1, id_offset: int = 0) -> dict:
    """Write frames, targets and ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "targets").mkdir(parents=True, exist_ok=True)
    samples = simulate(geometry, noise, range(id_offset, id_offset + count), master_seed, pose, jobs)
    records = []
    for k in range(count):
        frame_rel = f"frames/{k:06d}.oft"
        target_rel = f"targets/{k:06d}.oft"
        io.save_tensor(out / frame_rel, samples.frames[k])
        io.save_tensor(out / target_rel, samples.targets[k])
        records.append({
            "sample_id": k,
            "stream_id": samples.sample_ids[k],
            "payload": samples.payloads[k],
            "pose": pose.to_json(),
            "frame": frame_rel,
            "target": target_rel,
            "frame_sha256": io.sha256_file(out / frame_rel),
            "target_sha256": io.sha256_file(out / target_rel),
        })
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "geometry": geometry.to_json(),
        "noise": noise.to_json() if noise is not None else None,
        "master_seed": master_seed,
        "exposure": exposure_constant(geometry),
        "records": records,
    }
    io.save_json(out / "manifest.json", manifest)
    return manifest


def load_manifest(path) -> tuple[dict, Path]:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    manifest = io.load_json(p)
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"unsupported manifest schema {manifest.get('schema_version')}")
    ids = [r["sample_id"] for r in manifest["records"]]
    if ids != list(range(len(ids))):
        raise FormatError("sample ids must be dense 0..N-1")
    return manifest, p.parent


def verify_manifest(path) -> list[str]:
    """Names of listed files whose SHA-256 differs from the manifest."""
    manifest, root = load_manifest(path)
    bad = []
    for r in manifest["records"]:
        for key in ("frame", "target"):
            if io.sha256_file(root / r[key]) != r[f"{key}_sha256"]:
                bad.append(r[key])
    return bad


def load_dataset(path) -> Samples:
    manifest, root = load_manifest(path)
    geometry = Geometry.from_json(manifest["geometry"])
    recs = manifest["records"]
    h, w = geometry.sensor_shape
    frames = np.empty((len(recs), h, w))
    targets = np.empty((len(recs), h, w))
    for k, r in enumerate(recs):
        frames[k] = io.load_tensor(root / r["frame"])
        targets[k] = io.load_tensor(root / r["target"])
    return Samples(
        frames,
        targets,
        [r["payload"] for r in recs],
        [r.get("stream_id", r["sample_id"]) for r in recs],
        geometry,
        [Pose.from_json(r["pose"]) for r in recs],
    )
