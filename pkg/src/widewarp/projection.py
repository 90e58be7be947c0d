"""Analytic flow producers: perspective undistortion and stereographic re-projection.

The camera model is Brown radial (3 coefficients).  Flows are produced
backward (sample-from offsets), so the forward distortion polynomial is
evaluated directly and never inverted for the perspective path; point
utilities invert it with Newton's method where forward tracking is needed.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, NonInvertibleModel
from .flow import FlowField
from .imaging import ImageBuffer

_MONOTONE_SAMPLES = 2048


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus Brown radial distortion, in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    width: int = 0
    height: int = 0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("sensor raster size must be at least 1x1")
        if not (0 <= self.cx < self.width) or not (0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the raster")
        r_max = self._max_normalized_radius(self.width, self.height,
                                            self.fx, self.fy, self.cx, self.cy)
        if not _is_monotone(self.k1, self.k2, self.k3, r_max):
            raise NonInvertibleModel(
                "distortion polynomial is not monotone increasing on this raster")

    @staticmethod
    def _max_normalized_radius(w, h, fx, fy, cx, cy) -> float:
        corners_x = np.array([0.0, w - 1.0, 0.0, w - 1.0])
        corners_y = np.array([0.0, 0.0, h - 1.0, h - 1.0])
        nx = (corners_x - cx) / fx
        ny = (corners_y - cy) / fy
        return float(np.max(np.hypot(nx, ny)))

    def scaled_to(self, out_w: int, out_h: int) -> tuple[float, float, float, float]:
        """Intrinsics (fx, fy, cx, cy) scaled to an out_w x out_h raster."""
        sx = out_w / self.width
        sy = out_h / self.height
        return self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy

    def distortion_factor(self, r2: np.ndarray) -> np.ndarray:
        """1 + k1 r^2 + k2 r^4 + k3 r^6 for squared normalized radius r2."""
        return 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "CameraModel":
        fields = {k: obj[k] for k in
                  ("fx", "fy", "cx", "cy", "k1", "k2", "k3", "width", "height")}
        return cls(**fields)


def _is_monotone(k1: float, k2: float, k3: float, r_max: float) -> bool:
    r = np.linspace(0.0, r_max, _MONOTONE_SAMPLES)
    r2 = r * r
    distorted = r * (1.0 + r2 * (k1 + r2 * (k2 + r2 * k3)))
    return bool(np.all(np.diff(distorted) > 0.0))


def read_camera(path: str | os.PathLike) -> CameraModel:
    with open(path, "r", encoding="utf-8") as fh:
        return CameraModel.from_json(json.load(fh))


def write_camera(cam: CameraModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cam.to_json(), fh, indent=2)
        fh.write("\n")


def perspective_undistort_flow(cam: CameraModel, out_w: int, out_h: int) -> FlowField:
    """Backward flow on the rectilinear raster that undoes the radial distortion.

    Each undistorted pixel samples the captured image at its forward-distorted
    location; no polynomial inversion is involved.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output raster must be at least 1x1")
    fx, fy, cx, cy = cam.scaled_to(out_w, out_h)
    r_max = CameraModel._max_normalized_radius(out_w, out_h, fx, fy, cx, cy)
    if not _is_monotone(cam.k1, cam.k2, cam.k3, r_max):
        raise NonInvertibleModel(
            "distortion polynomial is not monotone on the requested raster")

    gx, gy = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    nx = (gx - cx) / fx
    ny = (gy - cy) / fy
    r2 = nx * nx + ny * ny
    # (d - 1) assembled directly so a zero-distortion camera yields an exact
    # zero flow.
    excess = r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3))
    dx = nx * excess * fx
    dy = ny * excess * fy
    return FlowField(np.stack([dx, dy], axis=-1).astype(np.float32))


def stereographic_flow(cam: CameraModel, out_w: int, out_h: int) -> FlowField:
    """Backward flow from the stereographic raster to a rectilinear input.

    View angle theta = 2 atan(r_out / 2f); the rectilinear source radius is
    f tan(theta).  Raises DomainError when the raster needs theta >= 90 deg.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output raster must be at least 1x1")
    fx, fy, cx, cy = cam.scaled_to(out_w, out_h)
    f = 0.5 * (fx + fy)

    gx, gy = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    px = gx - cx
    py = gy - cy
    r_out = np.hypot(px, py)
    if float(r_out.max()) >= 2.0 * f:
        raise DomainError("raster corner exceeds the 90 deg view-angle limit")

    theta = 2.0 * np.arctan(r_out / (2.0 * f))
    r_in = f * np.tan(theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(r_out > 0.0, r_in / r_out - 1.0, 0.0)
    dx = px * ratio
    dy = py * ratio
    return FlowField(np.stack([dx, dy], axis=-1).astype(np.float32))


def blend_flows(f_persp: FlowField, f_stereo: FlowField,
                weight: ImageBuffer) -> FlowField:
    """Pointwise convex combination: w * stereo + (1 - w) * persp."""
    if (f_persp.width, f_persp.height) != (f_stereo.width, f_stereo.height):
        raise DimensionMismatch("flow dimensions differ")
    if (weight.width, weight.height) != (f_persp.width, f_persp.height):
        raise DimensionMismatch("weight dimensions differ from flows")
    if weight.channels != 1:
        raise DimensionMismatch("blend weight must be single-channel")
    w = weight.plane(0)[:, :, None]
    out = w * f_stereo.data.astype(np.float64) \
        + (1.0 - w) * f_persp.data.astype(np.float64)
    return FlowField(out.astype(np.float32))


def distort_points(cam: CameraModel, points: np.ndarray,
                   out_w: int | None = None, out_h: int | None = None) -> np.ndarray:
    """Forward Brown map: rectilinear pixel positions -> captured positions."""
    out_w = cam.width if out_w is None else out_w
    out_h = cam.height if out_h is None else out_h
    fx, fy, cx, cy = cam.scaled_to(out_w, out_h)
    p = np.asarray(points, dtype=np.float64)
    nx = (p[..., 0] - cx) / fx
    ny = (p[..., 1] - cy) / fy
    d = cam.distortion_factor(nx * nx + ny * ny)
    return np.stack([nx * d * fx + cx, ny * d * fy + cy], axis=-1)


def undistort_points(cam: CameraModel, points: np.ndarray,
                     out_w: int | None = None, out_h: int | None = None,
                     iters: int = 25) -> np.ndarray:
    """Inverse Brown map via Newton's method on the radial polynomial."""
    out_w = cam.width if out_w is None else out_w
    out_h = cam.height if out_h is None else out_h
    fx, fy, cx, cy = cam.scaled_to(out_w, out_h)
    p = np.asarray(points, dtype=np.float64)
    nx = (p[..., 0] - cx) / fx
    ny = (p[..., 1] - cy) / fy
    r_d = np.hypot(nx, ny)

    r = r_d.copy()
    for _ in range(iters):
        r2 = r * r
        g = r * (1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3))) - r_d
        dg = 1.0 + r2 * (3.0 * cam.k1 + r2 * (5.0 * cam.k2 + r2 * 7.0 * cam.k3))
        step = g / dg
        r = r - step
        if float(np.max(np.abs(step))) < 1e-14:
            break
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r_d > 0.0, r / r_d, 1.0)
    return np.stack([nx * scale * fx + cx, ny * scale * fy + cy], axis=-1)


def stereographic_project_points(cam: CameraModel, points: np.ndarray,
                                 out_w: int | None = None,
                                 out_h: int | None = None) -> np.ndarray:
    """Forward stereographic map: rectilinear positions -> stereographic raster."""
    out_w = cam.width if out_w is None else out_w
    out_h = cam.height if out_h is None else out_h
    fx, fy, cx, cy = cam.scaled_to(out_w, out_h)
    f = 0.5 * (fx + fy)
    p = np.asarray(points, dtype=np.float64)
    px = p[..., 0] - cx
    py = p[..., 1] - cy
    r_rect = np.hypot(px, py)
    theta = np.arctan(r_rect / f)
    r_s = 2.0 * f * np.tan(0.5 * theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r_rect > 0.0, r_s / r_rect, 1.0)
    return np.stack([px * scale + cx, py * scale + cy], axis=-1)
