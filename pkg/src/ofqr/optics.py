"""Radiometric forward model of a bare image sensor facing an emissive plane.

Each object pixel is a small Lambertian emitter; a sensor pixel at lateral
distance ``r`` and axial distance ``z`` collects ``area * z**2 / (pi * d**4)``
with ``d**2 = r**2 + z**2``. Sensor pixels are point-sampled at their centres.
Frames are scaled by an auto-exposure constant (99.9th percentile of an
all-light render at the same geometry) so that they occupy roughly [0, 1].
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np

from ofqr import kernels
from ofqr.errors import (
    BudgetExceeded,
    NonpositiveGap,
    ObjectIntersectsSensor,
    ShapeMismatch,
)

DEFAULT_BUDGET_BYTES = 1 << 31
# sensor rows per transfer block; bounds temporary memory in render()
_BLOCK_BYTES = 1 << 26


@dataclass(frozen=True)
class Geometry:
    """Object/sensor sizes and gap.

    The module pitch is ``object_extent_mm / 29``; set ``object_extent_mm``
    to ``29 * 0.198`` to use the measured LCD pitch instead of 6 mm.
    """

    gap_mm: float = 1.0
    object_extent_mm: float = 6.0
    object_raster: tuple[int, int] = (116, 116)
    sensor_extent_mm: float = 6.0
    sensor_pixels: int = 64

    def __post_init__(self):
        object.__setattr__(self, "object_raster", tuple(int(v) for v in self.object_raster))
        if not self.gap_mm > 0:
            raise NonpositiveGap(f"gap must be positive, got {self.gap_mm}")
        if not (self.object_extent_mm > 0 and self.sensor_extent_mm > 0):
            raise ValueError("extents must be positive")
        if min(self.object_raster) < 1 or self.sensor_pixels < 1:
            raise ValueError("rasters must be at least 1x1")

    @property
    def object_pitch_mm(self) -> float:
        return self.object_extent_mm / self.object_raster[0]

    @property
    def sensor_pitch_mm(self) -> float:
        return self.sensor_extent_mm / self.sensor_pixels

    @property
    def sensor_shape(self) -> tuple[int, int]:
        return (self.sensor_pixels, self.sensor_pixels)

    def with_gap(self, gap_mm: float) -> "Geometry":
        return replace(self, gap_mm=float(gap_mm))

    def to_json(self) -> dict:
        d = asdict(self)
        d["object_raster"] = list(self.object_raster)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Geometry":
        return cls(**d)


@dataclass(frozen=True)
class Pose:
    dx_mm: float = 0.0
    dy_mm: float = 0.0
    theta_x_deg: float = 0.0
    theta_y_deg: float = 0.0
    theta_z_deg: float = 0.0

    def __post_init__(self):
        if abs(self.theta_x_deg) >= 90 or abs(self.theta_y_deg) >= 90:
            raise ValueError("tilts must stay below 90 degrees")

    @property
    def is_identity(self) -> bool:
        return self == Pose()

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "Pose":
        return cls(**d)


@dataclass(frozen=True)
class NoiseModel:
    read_sigma: float = 0.01
    shot_fullscale_photons: float = 10000.0
    quantize_bits: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.read_sigma < 0:
            raise ValueError("read_sigma must be non-negative")
        if self.quantize_bits not in (0, 8, 16):
            raise ValueError("quantize_bits must be 0, 8 or 16")
        if self.shot_fullscale_photons < 0:
            raise ValueError("shot_fullscale_photons must be non-negative")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "NoiseModel":
        return cls(**d)


@dataclass
class SensorFrame:
    irradiance: np.ndarray
    geometry: Geometry
    pose: Pose = field(default_factory=Pose)


def kernel_weight(z_mm, r_mm, emitter_area_mm2):
    """Irradiance per unit sensor area from a Lambertian emitter."""
    z = np.asarray(z_mm, dtype=np.float64)
    if np.any(z <= 0):
        raise NonpositiveGap("gap must be positive")
    r = np.asarray(r_mm, dtype=np.float64)
    out = emitter_area_mm2 * z * z / (math.pi * (z * z + r * r) ** 2)
    return float(out) if out.ndim == 0 else out


def pixel_centers(extent_mm: float, n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) * (extent_mm / n) - extent_mm / 2


def emitter_positions(geometry: Geometry, pose: Pose = Pose()):
    """Emitter coordinates after pose, as flat arrays ``(x, y, z_eff, area)``.

    Order is row-major over the object raster. ``x`` runs along columns and
    ``y`` along rows, both centred on the optical axis.
    """
    h0, w0 = geometry.object_raster
    pitch_y = geometry.object_extent_mm / h0
    pitch_x = geometry.object_extent_mm / w0
    yy, xx = np.meshgrid(
        pixel_centers(geometry.object_extent_mm, h0),
        pixel_centers(geometry.object_extent_mm, w0),
        indexing="ij",
    )
    x = xx.ravel()
    y = yy.ravel()
    if pose.theta_z_deg:
        t = math.radians(pose.theta_z_deg)
        c, s = math.cos(t), math.sin(t)
        x, y = c * x - s * y, s * x + c * y
    tx = math.radians(pose.theta_x_deg)
    ty = math.radians(pose.theta_y_deg)
    z = geometry.gap_mm - x * math.sin(ty) + y * math.sin(tx)
    if tx or ty:
        x = x * math.cos(ty)
        y = y * math.cos(tx)
    if np.any(z <= 0):
        raise ObjectIntersectsSensor("tilted object touches or crosses the sensor plane")
    x = x + pose.dx_mm
    y = y + pose.dy_mm
    area = np.full(x.shape, pitch_x * pitch_y)
    return x, y, np.ascontiguousarray(z, dtype=np.float64), area


def _sensor_xy(geometry: Geometry):
    c = pixel_centers(geometry.sensor_extent_mm, geometry.sensor_pixels)
    yy, xx = np.meshgrid(c, c, indexing="ij")
    return np.ascontiguousarray(xx.ravel()), np.ascontiguousarray(yy.ravel())


def _blocks(n_pix: int, n_em: int):
    step = max(1, _BLOCK_BYTES // (8 * max(n_em, 1)))
    return [(i, min(i + step, n_pix)) for i in range(0, n_pix, step)]


def _raw_render(objects: np.ndarray, geometry: Geometry, pose: Pose, jobs: int = 1) -> np.ndarray:
    """Unnormalised irradiance for a batch of flattened objects (N, E) -> (N, P)."""
    ex, ey, ez, area = emitter_positions(geometry, pose)
    sx, sy = _sensor_xy(geometry)
    out = np.empty((objects.shape[0], sx.size))
    objs_t = np.ascontiguousarray(objects.T)

    def work(span):
        i0, i1 = span
        block = kernels.transfer_block(sx[i0:i1], sy[i0:i1], ex, ey, ez, area)
        out[:, i0:i1] = (block @ objs_t).T

    spans = _blocks(sx.size, ex.size)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)
    return out


@lru_cache(maxsize=64)
def exposure_constant(geometry: Geometry) -> float:
    """99.9th percentile of the unnormalised all-light render at identity pose."""
    ones = np.ones((1, geometry.object_raster[0] * geometry.object_raster[1]))
    raw = _raw_render(ones, geometry, Pose())
    return float(np.percentile(raw[0], 99.9))


def _check_object(radiance: np.ndarray, geometry: Geometry) -> np.ndarray:
    arr = np.asarray(radiance, dtype=np.float64)
    if arr.shape[-2:] != geometry.object_raster:
        raise ShapeMismatch(f"object shape {arr.shape[-2:]} != raster {geometry.object_raster}")
    return arr


def render_batch(objects: np.ndarray, geometry: Geometry, pose: Pose = Pose(),
                 normalize: bool = True, jobs: int = 1) -> np.ndarray:
    """Noiseless frames for a stack of objects (N, H0, W0) -> (N, Ns, Ns)."""
    arr = _check_object(objects, geometry)
    flat = arr.reshape(arr.shape[0], -1)
    raw = _raw_render(flat, geometry, pose, jobs=jobs)
    if normalize:
        raw /= exposure_constant(geometry)
    return raw.reshape((arr.shape[0],) + geometry.sensor_shape)


def apply_noise(values: np.ndarray, noise: NoiseModel, rng: np.random.Generator | None = None) -> np.ndarray:
    """Poisson shot noise, Gaussian read noise, clamp to [0, 1], quantize."""
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(noise.seed))
    v = np.asarray(values, dtype=np.float64)
    if noise.shot_fullscale_photons > 0:
        n = noise.shot_fullscale_photons
        v = rng.poisson(np.clip(v, 0.0, None) * n) / n
    if noise.read_sigma > 0:
        v = v + rng.normal(0.0, noise.read_sigma, size=v.shape)
    v = np.clip(v, 0.0, 1.0)
    if noise.quantize_bits:
        levels = (1 << noise.quantize_bits) - 1
        v = np.rint(v * levels) / levels
    return v


def render(obj: np.ndarray, geometry: Geometry, pose: Pose = Pose(),
           noise: NoiseModel | None = None, rng: np.random.Generator | None = None,
           normalize: bool = True, jobs: int = 1) -> SensorFrame:
    """Render one object raster to a sensor frame.

    Without ``noise`` the frame is the exact linear irradiance (not clamped).
    """
    arr = _check_object(obj, geometry)
    frame = render_batch(arr[None], geometry, pose, normalize=normalize, jobs=jobs)[0]
    if noise is not None:
        frame = apply_noise(frame, noise, rng)
    return SensorFrame(frame, geometry, pose)


def build_transfer_matrix(geometry: Geometry, pose: Pose = Pose(),
                          budget_bytes: int = DEFAULT_BUDGET_BYTES) -> np.ndarray:
    """Dense (Ns*Ns, H0*W0) matrix whose column j renders the one-hot object e_j."""
    n_pix = geometry.sensor_pixels**2
    n_em = geometry.object_raster[0] * geometry.object_raster[1]
    if n_pix * n_em * 8 > budget_bytes:
        raise BudgetExceeded(f"transfer matrix needs {n_pix * n_em * 8} bytes > budget {budget_bytes}")
    ex, ey, ez, area = emitter_positions(geometry, pose)
    sx, sy = _sensor_xy(geometry)
    a = kernels.transfer_block(sx, sy, ex, ey, ez, area)
    a /= exposure_constant(geometry)
    return a


def _overlap_matrix(out_edges: np.ndarray, in_edges: np.ndarray) -> np.ndarray:
    """Fraction of each output cell covered by each input cell (1-D)."""
    lo = np.maximum(out_edges[:-1, None], in_edges[None, :-1])
    hi = np.minimum(out_edges[1:, None], in_edges[None, 1:])
    return np.clip(hi - lo, 0.0, None) / np.diff(out_edges)[:, None]


def grid_to_radiance(grid: np.ndarray, shape: tuple[int, int], light: float = 1.0,
                     dark: float = 0.0) -> np.ndarray:
    """Area-averaged raster of a module grid (True = dark) over the same extent."""
    g = np.where(np.asarray(grid, dtype=bool), dark, light).astype(np.float64)
    rows = _overlap_matrix(np.linspace(0, 1, shape[0] + 1), np.linspace(0, 1, g.shape[0] + 1))
    cols = _overlap_matrix(np.linspace(0, 1, shape[1] + 1), np.linspace(0, 1, g.shape[1] + 1))
    return rows @ g @ cols.T


def object_on_sensor(grid: np.ndarray, geometry: Geometry, light: float = 1.0,
                     dark: float = 0.0, background: float = 0.0) -> np.ndarray:
    """Module grid drawn at sensor resolution in sensor coordinates.

    This is the reconstruction target: what the object looks like on the
    sensor raster with no blur. Sensor area outside the object gets
    ``background``.
    """
    g = np.where(np.asarray(grid, dtype=bool), dark, light).astype(np.float64)
    n = geometry.sensor_pixels
    s_edges = np.linspace(-geometry.sensor_extent_mm / 2, geometry.sensor_extent_mm / 2, n + 1)
    half = geometry.object_extent_mm / 2
    rows = _overlap_matrix(s_edges, np.linspace(-half, half, g.shape[0] + 1))
    cols = _overlap_matrix(s_edges, np.linspace(-half, half, g.shape[1] + 1))
    img = rows @ g @ cols.T
    cover = np.outer(rows.sum(axis=1), cols.sum(axis=1))
    return img + background * (1.0 - cover)


def object_box(geometry: Geometry) -> tuple[float, float, float, float]:
    """Object extent in sensor pixel coordinates ``(top, left, bottom, right)``."""
    p = geometry.sensor_pitch_mm
    c = geometry.sensor_pixels / 2
    half = geometry.object_extent_mm / 2 / p
    return (c - half, c - half, c + half, c + half)


def mixing_ratio(a: np.ndarray) -> float:
    """Mean off-diagonal to mean diagonal magnitude of the Gram matrix A^T A."""
    gram = a.T @ a
    n = gram.shape[0]
    diag = np.abs(np.diag(gram)).mean()
    off = (np.abs(gram).sum() - np.abs(np.diag(gram)).sum()) / (n * n - n)
    return float(off / diag)
