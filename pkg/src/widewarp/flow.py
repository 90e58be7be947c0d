"""Dense backward flow fields: warping, composition, rescaling, PFLO I/O.

A flow is a backward map: ``output(p) = input(p + F(p))``.  Displacements are
stored float32 (the PFLO on-disk precision) in destination-image pixels; all
arithmetic happens in float64.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from ._interp import bilinear_sample, dest_to_source_coords
from .errors import CorruptRecord, DimensionMismatch
from .imaging import ImageBuffer

_PFLO_MAGIC = b"PFLO"


@dataclass(frozen=True)
class FlowField:
    """H x W field of (dx, dy) sample-from offsets, row-major."""

    data: np.ndarray  # shape (height, width, 2), float32

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError(f"expected (h, w, 2) flow, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("flow must be at least 1x1")
        arr = arr.astype(np.float32, copy=not isinstance(self.data, np.ndarray)
                         or arr.dtype != np.float32)
        if not np.all(np.isfinite(arr)):
            raise ValueError("flow displacements must be finite")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def dx(self) -> np.ndarray:
        return self.data[:, :, 0]

    @property
    def dy(self) -> np.ndarray:
        return self.data[:, :, 1]


def zero_flow(width: int, height: int) -> FlowField:
    return FlowField(np.zeros((height, width, 2), dtype=np.float32))


def _sample_coords(f: FlowField) -> tuple[np.ndarray, np.ndarray]:
    """Absolute source coordinates p + F(p), float64."""
    gx, gy = np.meshgrid(np.arange(f.width, dtype=np.float64),
                         np.arange(f.height, dtype=np.float64))
    return gx + f.dx.astype(np.float64), gy + f.dy.astype(np.float64)


def warp(img: ImageBuffer, f: FlowField) -> ImageBuffer:
    """Backward-warp: out(p) = bilinear sample of img at p + F(p), edge-clamped."""
    if (img.width, img.height) != (f.width, f.height):
        raise DimensionMismatch(
            f"image {img.width}x{img.height} vs flow {f.width}x{f.height}")
    sx, sy = _sample_coords(f)
    out = np.empty_like(img.data)
    for c in range(img.channels):
        out[:, :, c] = bilinear_sample(img.plane(c), sx, sy)
    return ImageBuffer(np.clip(out, 0.0, 1.0))


def compose(f_second: FlowField, f_first: FlowField) -> FlowField:
    """One flow equivalent to applying ``f_first`` then ``f_second``.

    F(p) = f_second(p) + f_first(p + f_second(p)), so that
    warp(warp(I, f_first), f_second) ~= warp(I, compose(f_second, f_first)).
    """
    if (f_first.width, f_first.height) != (f_second.width, f_second.height):
        raise DimensionMismatch("flow dimensions differ")
    sx, sy = _sample_coords(f_second)
    dx1 = bilinear_sample(f_first.dx.astype(np.float64), sx, sy)
    dy1 = bilinear_sample(f_first.dy.astype(np.float64), sx, sy)
    out = np.stack([f_second.dx.astype(np.float64) + dx1,
                    f_second.dy.astype(np.float64) + dy1], axis=-1)
    return FlowField(out.astype(np.float32))


def rescale_flow(f: FlowField, new_w: int, new_h: int) -> FlowField:
    """Bilinear-resize each displacement channel, then scale to the new pixel grid."""
    if new_w < 1 or new_h < 1:
        raise ValueError("target size must be at least 1x1")
    if new_w == f.width and new_h == f.height:
        return FlowField(f.data.copy())
    xs = dest_to_source_coords(new_w, f.width)
    ys = dest_to_source_coords(new_h, f.height)
    gx, gy = np.meshgrid(xs, ys)
    dx = bilinear_sample(f.dx.astype(np.float64), gx, gy) * (new_w / f.width)
    dy = bilinear_sample(f.dy.astype(np.float64), gx, gy) * (new_h / f.height)
    return FlowField(np.stack([dx, dy], axis=-1).astype(np.float32))


def sample_flow(f: FlowField, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear flow displacements at fractional positions; shape (..., 2)."""
    dx = bilinear_sample(f.dx.astype(np.float64), xs, ys)
    dy = bilinear_sample(f.dy.astype(np.float64), xs, ys)
    return np.stack([dx, dy], axis=-1)


def forward_map_points(f: FlowField, points: np.ndarray,
                       iters: int = 30, tol: float = 1e-9) -> np.ndarray:
    """Where does input content at ``points`` land in the output raster?

    Solves q + F(q) = p per point with damped Newton steps (finite-difference
    Jacobian), which stays stable even where the flow gradient exceeds 1.
    ``points`` is (n, 2) in input-image pixels; the result is (n, 2) output
    positions.
    """
    p = np.asarray(points, dtype=np.float64)
    q = p.copy()
    h = 0.5
    for _ in range(iters):
        res = q + sample_flow(f, q[:, 0], q[:, 1]) - p
        if float(np.max(np.abs(res))) < tol:
            break
        fxp = sample_flow(f, q[:, 0] + h, q[:, 1])
        fxm = sample_flow(f, q[:, 0] - h, q[:, 1])
        fyp = sample_flow(f, q[:, 0], q[:, 1] + h)
        fym = sample_flow(f, q[:, 0], q[:, 1] - h)
        # J = I + dF/dq, component layout [row][col]
        j00 = 1.0 + (fxp[:, 0] - fxm[:, 0]) / (2 * h)
        j01 = (fyp[:, 0] - fym[:, 0]) / (2 * h)
        j10 = (fxp[:, 1] - fxm[:, 1]) / (2 * h)
        j11 = 1.0 + (fyp[:, 1] - fym[:, 1]) / (2 * h)
        det = j00 * j11 - j01 * j10
        det = np.where(np.abs(det) < 1e-9, np.where(det < 0, -1e-9, 1e-9), det)
        step_x = (j11 * res[:, 0] - j01 * res[:, 1]) / det
        step_y = (-j10 * res[:, 0] + j00 * res[:, 1]) / det
        q = q - np.stack([step_x, step_y], axis=1)
    return q


def invert_flow(f: FlowField, iters: int = 30) -> FlowField:
    """Forward-motion field of a backward flow: where each pixel's content lands.

    The returned field m satisfies p + m(p) = q with q + F(q) = p, so a mesh
    whose vertices move by m reproduces warp(img, F).
    """
    gx, gy = np.meshgrid(np.arange(f.width, dtype=np.float64),
                         np.arange(f.height, dtype=np.float64))
    pts = np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)
    dest = forward_map_points(f, pts, iters=iters)
    m = (dest - pts).reshape(f.height, f.width, 2)
    return FlowField(m.astype(np.float32))


def write_pflo(f: FlowField, path: str | os.PathLike) -> None:
    """Binary flow format: magic 'PFLO', LE u32 width/height, f32 (dx, dy) pairs."""
    with open(path, "wb") as fh:
        fh.write(_PFLO_MAGIC)
        fh.write(struct.pack("<II", f.width, f.height))
        fh.write(np.ascontiguousarray(f.data, dtype="<f4").tobytes())


def read_pflo(path: str | os.PathLike) -> FlowField:
    """Read a PFLO file; raises CorruptRecord on magic/shape mismatch."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != _PFLO_MAGIC:
        raise CorruptRecord(f"{path}: not a PFLO file")
    w, h = struct.unpack("<II", blob[4:12])
    if w < 1 or h < 1:
        raise CorruptRecord(f"{path}: invalid dimensions {w}x{h}")
    expected = 12 + w * h * 2 * 4
    if len(blob) != expected:
        raise CorruptRecord(
            f"{path}: expected {expected} bytes for {w}x{h}, got {len(blob)}")
    arr = np.frombuffer(blob, dtype="<f4", offset=12).reshape(h, w, 2)
    return FlowField(arr.astype(np.float32))
