"""Regularised SVD inversion of the transfer matrix (classical baseline)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ofqr import io, kernels
from ofqr.errors import DimensionMismatch, GeometryMismatch, NoConvergence
from ofqr.optics import Geometry, SensorFrame

JACOBI_TOL = 1e-12
MAX_SWEEPS = 60


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray  # (m, k)
    singular_values: np.ndarray  # (k,), non-increasing
    vt: np.ndarray  # (k, n)
    geometry: Geometry | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape[0], self.vt.shape[1]

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        io.save_tensor(d / "u.oft", self.u)
        io.save_tensor(d / "s.oft", self.singular_values)
        io.save_tensor(d / "vt.oft", self.vt)
        manifest = {
            "tensors": {"u": "u.oft", "singular_values": "s.oft", "vt": "vt.oft"},
            "geometry": self.geometry.to_json() if self.geometry else None,
        }
        io.save_json(d / "manifest.json", manifest)

    @classmethod
    def load(cls, directory) -> "SvdFactors":
        d = Path(directory)
        manifest = json.loads((d / "manifest.json").read_text())
        t = manifest["tensors"]
        geom = manifest.get("geometry")
        return cls(
            io.load_tensor(d / t["u"]),
            io.load_tensor(d / t["singular_values"]),
            io.load_tensor(d / t["vt"]),
            Geometry.from_json(geom) if geom else None,
        )


@dataclass(frozen=True)
class RegularizerConfig:
    """``mode`` is ``"tikhonov"`` (uses ``lam``) or ``"truncation"`` (uses ``rank``)."""

    mode: str = "tikhonov"
    lam: float = 1e-3
    rank: int | None = None

    def __post_init__(self):
        if self.mode == "tikhonov":
            if not (np.isfinite(self.lam) and self.lam >= 0):
                raise ValueError("lambda must be finite and non-negative")
        elif self.mode == "truncation":
            if self.rank is None or self.rank < 1:
                raise ValueError("truncation needs rank >= 1")
        else:
            raise ValueError(f"unknown regularizer mode {self.mode!r}")


def _complete_basis(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace columns not in ``keep`` by an orthonormal complement."""
    good = u[:, keep]
    m = u.shape[0]
    missing = int((~keep).sum())
    if missing == 0:
        return u
    # Gram-Schmidt of unit vectors against the retained columns
    extra = []
    basis = [good[:, i] for i in range(good.shape[1])]
    for e in range(m):
        if len(extra) == missing:
            break
        vec = np.zeros(m)
        vec[e] = 1.0
        for _ in range(2):
            for b in basis:
                vec -= (b @ vec) * b
        norm = np.linalg.norm(vec)
        if norm > 1e-8:
            vec /= norm
            basis.append(vec)
            extra.append(vec)
    out = u.copy()
    out[:, ~keep] = np.column_stack(extra)
    return out


def _jacobi_tall(a: np.ndarray, max_sweeps: int, tol: float):
    m, n = a.shape
    work = np.array(a.T, dtype=np.float64, order="C")  # rows = columns of A; always a copy
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = kernels.jacobi_sweep(work, v, tol)
        if off <= tol:
            break
    else:
        raise NoConvergence(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")
    sigma = np.sqrt(np.einsum("ij,ij->i", work, work))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    work = work[order]
    v = v[order]
    keep = sigma > 0
    u = np.zeros((m, n))
    u[:, keep] = (work[keep] / sigma[keep, None]).T
    u = _complete_basis(u, keep)
    return u, sigma, v


def svd_decompose(a: np.ndarray, max_sweeps: int = MAX_SWEEPS, tol: float = JACOBI_TOL,
                  geometry: Geometry | None = None) -> SvdFactors:
    """Thin SVD by one-sided (Hestenes) Jacobi rotations."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or not np.all(np.isfinite(a)):
        raise ValueError("expected a finite 2-D matrix")
    m, n = a.shape
    if m >= n:
        u, s, v = _jacobi_tall(a, max_sweeps, tol)
        return SvdFactors(u, s, v, geometry)
    # wide: A^T = U' S V'^T  =>  A = V' S U'^T
    u2, s, v2 = _jacobi_tall(a.T, max_sweeps, tol)
    return SvdFactors(v2.T, s, u2.T, geometry)


def filter_factors(sigma: np.ndarray, config: RegularizerConfig) -> np.ndarray:
    """Multipliers f_i so that x = V diag(f) U^T b."""
    f = np.zeros_like(sigma)
    if config.mode == "tikhonov":
        denom = sigma**2 + config.lam**2
        nz = denom > 0
        f[nz] = sigma[nz] / denom[nz]
    else:
        k = min(config.rank, sigma.size)
        head = sigma[:k]
        f[:k] = np.where(head > 0, 1.0 / np.where(head > 0, head, 1.0), 0.0)
    return f


def regularized_solve(factors: SvdFactors, b: np.ndarray, config: RegularizerConfig) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != factors.u.shape[0]:
        raise DimensionMismatch(f"b has {b.shape[0]} rows, matrix has {factors.u.shape[0]}")
    coeffs = factors.u.T @ b
    f = filter_factors(factors.singular_values, config)
    if coeffs.ndim == 2:
        f = f[:, None]
    return factors.vt.T @ (f * coeffs)


def reconstruct_linear(frame: SensorFrame | np.ndarray, factors: SvdFactors,
                       config: RegularizerConfig, geometry: Geometry) -> np.ndarray:
    """Vectorise a frame, solve, reshape to the object raster, clamp to [0, 1]."""
    if isinstance(frame, SensorFrame):
        if frame.geometry != geometry:
            raise GeometryMismatch("frame geometry differs from the factor geometry")
        values = frame.irradiance
    else:
        values = np.asarray(frame, dtype=np.float64)
    if factors.geometry is not None and factors.geometry != geometry:
        raise GeometryMismatch("factors were built for a different geometry")
    m, n = factors.shape
    h0, w0 = geometry.object_raster
    if values.size != m or h0 * w0 != n:
        raise GeometryMismatch(f"frame/object sizes {values.size}/{h0 * w0} != matrix {m}x{n}")
    x = regularized_solve(factors, values.ravel(), config)
    return np.clip(x.reshape(h0, w0), 0.0, 1.0)
