"""Attention supervision targets: face heatmaps, edge maps, polyline sampling.

Annotations are inputs, never detected: polylines for line constraints and
straightness scoring, faces (bbox + landmarks with a designated nose index)
for heatmaps and shape scoring.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLine
from .imaging import ImageBuffer, resize_bilinear, sobel_edges


@dataclass(frozen=True)
class FaceAnnotation:
    bbox: tuple[float, float, float, float]  # (x, y, w, h) in pixels
    landmarks: np.ndarray  # (n, 2) ordered positions
    nose_index: int

    def __post_init__(self):
        lm = np.asarray(self.landmarks, dtype=np.float64)
        if lm.ndim != 2 or lm.shape[1] != 2 or lm.shape[0] < 2:
            raise ValueError("face needs at least 2 landmarks of shape (n, 2)")
        if not (0 <= self.nose_index < lm.shape[0]):
            raise ValueError("nose_index out of range")
        object.__setattr__(self, "landmarks", lm)
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return (x + 0.5 * w, y + 0.5 * h)


@dataclass(frozen=True)
class AnnotationSet:
    lines: list = field(default_factory=list)   # list of (n, 2) arrays, n >= 2
    faces: list = field(default_factory=list)   # list of FaceAnnotation

    def __post_init__(self):
        clean = []
        for line in self.lines:
            arr = np.asarray(line, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
                raise ValueError("each polyline needs at least 2 (x, y) points")
            clean.append(arr)
        object.__setattr__(self, "lines", clean)
        object.__setattr__(self, "faces", list(self.faces))

    def scaled(self, sx: float, sy: float) -> "AnnotationSet":
        """Annotations mapped onto a raster scaled by (sx, sy)."""
        s = np.array([sx, sy])
        lines = [l * s for l in self.lines]
        faces = [FaceAnnotation(
            bbox=(f.bbox[0] * sx, f.bbox[1] * sy, f.bbox[2] * sx, f.bbox[3] * sy),
            landmarks=f.landmarks * s,
            nose_index=f.nose_index) for f in self.faces]
        return AnnotationSet(lines=lines, faces=faces)

    def transformed(self, point_map) -> "AnnotationSet":
        """Map every annotated point through ``point_map((n, 2)) -> (n, 2)``.

        Bboxes are re-fit as the axis-aligned hull of their mapped corners.
        """
        lines = [np.asarray(point_map(l), dtype=np.float64) for l in self.lines]
        faces = []
        for f in self.faces:
            x, y, w, h = f.bbox
            corners = np.array([[x, y], [x + w, y], [x, y + h], [x + w, y + h]])
            mc = np.asarray(point_map(corners), dtype=np.float64)
            x0, y0 = mc.min(axis=0)
            x1, y1 = mc.max(axis=0)
            faces.append(FaceAnnotation(
                bbox=(x0, y0, x1 - x0, y1 - y0),
                landmarks=np.asarray(point_map(f.landmarks), dtype=np.float64),
                nose_index=f.nose_index))
        return AnnotationSet(lines=lines, faces=faces)

    def clamped_to(self, width: int, height: int) -> "AnnotationSet":
        """Clamp all points into the raster; warns when anything moved."""
        def clamp(pts):
            out = np.clip(pts, [0.0, 0.0], [width - 1.0, height - 1.0])
            if not np.array_equal(out, pts):
                warnings.warn("annotation points outside image bounds were clamped",
                              stacklevel=3)
            return out
        return self.transformed(clamp)

    def to_json(self) -> dict:
        return {
            "lines": [l.tolist() for l in self.lines],
            "faces": [{
                "bbox": list(f.bbox),
                "landmarks": f.landmarks.tolist(),
                "nose_index": f.nose_index,
            } for f in self.faces],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnnotationSet":
        lines = [np.asarray(l, dtype=np.float64) for l in obj.get("lines", [])]
        faces = [FaceAnnotation(bbox=tuple(f["bbox"]),
                                landmarks=np.asarray(f["landmarks"]),
                                nose_index=int(f["nose_index"]))
                 for f in obj.get("faces", [])]
        return cls(lines=lines, faces=faces)


def read_annotations(path: str | os.PathLike,
                     width: int | None = None,
                     height: int | None = None) -> AnnotationSet:
    """Load an AnnotationSet JSON; clamps to bounds when a raster size is given."""
    with open(path, "r", encoding="utf-8") as fh:
        ann = AnnotationSet.from_json(json.load(fh))
    if width is not None and height is not None:
        ann = ann.clamped_to(width, height)
    return ann


def write_annotations(ann: AnnotationSet, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ann.to_json(), fh)
        fh.write("\n")


def face_heatmap(faces: list | AnnotationSet, w: int, h: int) -> ImageBuffer:
    """Per-face axis-aligned Gaussian, peak 1 at the bbox center, max-combined.

    sigma is half the bbox extent per axis, which puts the face-to-background
    transition band in the 0.1-0.6 weight range around the head.
    """
    if isinstance(faces, AnnotationSet):
        faces = faces.faces
    if w < 1 or h < 1:
        raise ValueError("raster must be at least 1x1")
    heat = np.zeros((h, w))
    if not faces:
        return ImageBuffer(heat[:, :, None])
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    for f in faces:
        cx, cy = f.center
        sx = 0.5 * max(f.bbox[2], 1e-9)
        sy = 0.5 * max(f.bbox[3], 1e-9)
        g = np.exp(-0.5 * (((gx - cx) / sx) ** 2 + ((gy - cy) / sy) ** 2))
        np.maximum(heat, g, out=heat)
    return ImageBuffer(np.clip(heat, 0.0, 1.0)[:, :, None])


def sample_line(polyline: np.ndarray, n: int) -> np.ndarray:
    """n + 1 points equally spaced by arc length along the polyline."""
    if n < 1:
        raise ValueError("need at least 1 segment")
    pts = np.asarray(polyline, dtype=np.float64)
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    total = float(seg_len.sum())
    if total <= 0.0:
        raise DegenerateLine("polyline arc length is zero")
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    targets = np.linspace(0.0, total, n + 1)
    xs = np.interp(targets, cum, pts[:, 0])
    ys = np.interp(targets, cum, pts[:, 1])
    return np.stack([xs, ys], axis=-1)


def lam_target(img: ImageBuffer) -> tuple[ImageBuffer, ImageBuffer]:
    """Edge-map supervision at half and quarter resolution of ``img``."""
    half = sobel_edges(resize_bilinear(img, max(1, img.width // 2),
                                       max(1, img.height // 2)))
    quarter = sobel_edges(resize_bilinear(img, max(1, img.width // 4),
                                          max(1, img.height // 4)))
    return half, quarter


def rasterize_lines(ann: AnnotationSet, w: int, h: int) -> ImageBuffer:
    """Optional alternative line target: annotated polylines stamped into a raster."""
    canvas = np.zeros((h, w))
    for line in ann.lines:
        seg = np.diff(line, axis=0)
        arclen = float(np.hypot(seg[:, 0], seg[:, 1]).sum())
        if arclen <= 0.0:
            continue
        pts = sample_line(line, max(1, int(np.ceil(arclen * 2))))
        ix = np.clip(np.rint(pts[:, 0]).astype(int), 0, w - 1)
        iy = np.clip(np.rint(pts[:, 1]).astype(int), 0, h - 1)
        canvas[iy, ix] = 1.0
    return ImageBuffer(canvas[:, :, None])
