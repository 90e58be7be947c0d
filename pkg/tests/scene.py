"""Synthetic wide-angle portrait scene used by the directional metric tests.

Geometry is authored on the rectilinear frame: two straight background lines
and one face (nose + 8 elliptical landmarks).  The captured frame applies a
barrel camera; the natural face shape is the stereographic mapping of the
rectilinear landmarks.  All frame-to-frame point tracking is analytic, so the
metric comparisons never depend on any detector.
"""

from dataclasses import dataclass

import numpy as np

import widewarp as ww
from widewarp.supervision import AnnotationSet, FaceAnnotation, sample_line

WIDTH, HEIGHT = 384, 512
FOCAL = 340.0
K1 = -0.3
NOSE = np.array([280.0, 150.0])
LANDMARK_RADII = (30.0, 38.0)
BBOX_SCALE = 4.0  # heatmap support vs landmark extent
LINE_SAMPLES = 16


@dataclass(frozen=True)
class TradeoffScene:
    cam: ww.CameraModel
    landmarks_rect: np.ndarray      # rectilinear-frame landmarks, nose first
    landmarks_reference: np.ndarray  # natural (stereographic) face shape
    landmarks_captured: np.ndarray  # barrel-distorted positions
    lines_rect: list                # straight background lines (rect frame)
    annotations: AnnotationSet      # rect-frame annotations driving the solver

    @property
    def nose_index(self) -> int:
        return 0

    def reference_line_samples(self) -> list:
        return [sample_line(l, LINE_SAMPLES) for l in self.lines_rect]

    def line_acc_through(self, point_map) -> float:
        scores = [ww.line_acc(point_map(pts), pts)
                  for pts in self.reference_line_samples()]
        return float(np.mean(scores))

    def shape_acc_of(self, landmarks: np.ndarray) -> float:
        return ww.shape_acc(landmarks, self.landmarks_reference, self.nose_index)


def build_scene() -> TradeoffScene:
    cam = ww.CameraModel(fx=FOCAL, fy=FOCAL, cx=WIDTH / 2, cy=HEIGHT / 2,
                         k1=K1, width=WIDTH, height=HEIGHT)
    ang = np.linspace(0, 2 * np.pi, 9)[:-1]
    ellipse = np.stack([NOSE[0] + LANDMARK_RADII[0] * np.cos(ang),
                        NOSE[1] + LANDMARK_RADII[1] * np.sin(ang)], axis=-1)
    lm_rect = np.vstack([NOSE, ellipse])
    lines_rect = [np.array([[20.0, 40.0], [364.0, 40.0]]),
                  np.array([[30.0, 460.0], [30.0, 60.0]])]

    bw = 2 * LANDMARK_RADII[0] * BBOX_SCALE
    bh = 2 * LANDMARK_RADII[1] * BBOX_SCALE
    face = FaceAnnotation(bbox=(NOSE[0] - bw / 2, NOSE[1] - bh / 2, bw, bh),
                          landmarks=lm_rect, nose_index=0)
    return TradeoffScene(
        cam=cam,
        landmarks_rect=lm_rect,
        landmarks_reference=ww.stereographic_project_points(cam, lm_rect),
        landmarks_captured=ww.distort_points(cam, lm_rect),
        lines_rect=lines_rect,
        annotations=AnnotationSet(lines=lines_rect, faces=[face]),
    )
