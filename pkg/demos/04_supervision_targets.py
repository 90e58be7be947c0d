"""
Supervision targets: face heatmaps and line sampling
====================================================

Face heatmaps (Gaussians at each face bbox, max-combined) weight the blend
between projections; arc-length line sampling feeds both the straightness
metric and the solver's line constraints.
"""

from pathlib import Path

import numpy as np

import widewarp as ww
from widewarp.supervision import AnnotationSet, FaceAnnotation, rasterize_lines

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

faces = [
    FaceAnnotation(bbox=(60, 80, 70, 90),
                   landmarks=np.array([[95.0, 125.0], [80.0, 110.0],
                                       [110.0, 110.0]]), nose_index=0),
    FaceAnnotation(bbox=(190, 160, 50, 60),
                   landmarks=np.array([[215.0, 190.0], [205.0, 180.0]]),
                   nose_index=0),
]
heat = ww.face_heatmap(faces, 320, 320)
ww.write_png(heat, out_dir / "04_heatmap.png")
print(f"heatmap peak {heat.plane(0).max():.3f}, "
      f"coverage>0.5: {(heat.plane(0) > 0.5).mean():.1%}")

polyline = np.array([[10.0, 10.0], [150.0, 40.0], [300.0, 30.0]])
samples = ww.sample_line(polyline, 12)
straight = ww.sample_line(polyline[:2], 12)
seg = np.diff(straight, axis=0)
print("sampled", len(samples), "points along the polyline;",
      "straight-segment spacing std:", f"{np.hypot(seg[:, 0], seg[:, 1]).std():.2e}")

ann = AnnotationSet(lines=[polyline], faces=faces)
ww.write_png(rasterize_lines(ann, 320, 320), out_dir / "04_lines.png")

# edge targets at half and quarter resolution of a corrected image
gx, gy = np.meshgrid(np.linspace(0, 1, 320), np.linspace(0, 1, 320))
img = ww.ImageBuffer((0.5 + 0.4 * np.sin(2 * np.pi * 3 * gx) * np.cos(2 * np.pi * 2 * gy))[:, :, None])
half, quarter = ww.lam_target(img)
print(f"edge targets: {half.width}x{half.height} and {quarter.width}x{quarter.height}")
