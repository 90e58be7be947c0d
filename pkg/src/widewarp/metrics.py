"""Line straightness and face shape congruence scores, plus report aggregation.

Both scores are reported on a x100 scale.  Line straightness compares result
segment slopes against the reference endpoint slope; shape congruence averages
the cosine between nose-anchored landmark vectors of result and reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateReference, IdMismatch, ZeroVector
from .supervision import AnnotationSet, sample_line

DEFAULT_LINE_SAMPLES = 32


def line_acc(result_points: np.ndarray, reference_points: np.ndarray) -> float:
    """Straightness of a sampled result line against its reference.

    Slopes are taken in the axis frame where the reference endpoint direction
    is closer to horizontal (x and y swap otherwise), which removes the
    vertical singularity.  100 means every result segment parallels the
    reference chord; the score is unbounded below.
    """
    res = np.asarray(result_points, dtype=np.float64)
    ref = np.asarray(reference_points, dtype=np.float64)
    if res.shape != ref.shape or res.ndim != 2 or res.shape[0] < 2:
        raise ValueError("need equal counts of >= 2 corresponding samples")

    chord = ref[-1] - ref[0]
    if chord[0] == 0.0 and chord[1] == 0.0:
        raise DegenerateReference("reference endpoints coincide")
    if abs(chord[0]) < abs(chord[1]):  # near-vertical reference: swap axes
        res = res[:, ::-1]
        ref = ref[:, ::-1]
        chord = chord[::-1]

    s_ref = (ref[0, 1] - ref[-1, 1]) / (ref[0, 0] - ref[-1, 0])
    d = np.diff(res, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = d[:, 1] / d[:, 0]
    deviation = np.abs(slopes - s_ref)
    return float(100.0 * (1.0 - deviation.mean()))


def shape_acc(result_landmarks: np.ndarray, reference_landmarks: np.ndarray,
              nose_index: int) -> float:
    """Mean cosine between nose-to-landmark vectors of result and reference."""
    res = np.asarray(result_landmarks, dtype=np.float64)
    ref = np.asarray(reference_landmarks, dtype=np.float64)
    if res.shape != ref.shape or res.ndim != 2 or res.shape[0] < 2:
        raise ValueError("need equal counts of >= 2 corresponding landmarks")
    if not (0 <= nose_index < res.shape[0]):
        raise ValueError("nose_index out of range")

    keep = np.arange(res.shape[0]) != nose_index
    v_res = res[keep] - res[nose_index]
    v_ref = ref[keep] - ref[nose_index]
    n_res = np.hypot(v_res[:, 0], v_res[:, 1])
    n_ref = np.hypot(v_ref[:, 0], v_ref[:, 1])
    if np.any(n_res == 0.0) or np.any(n_ref == 0.0):
        raise ZeroVector("a landmark coincides with the nose")
    cos = (v_res * v_ref).sum(axis=1) / (n_res * n_ref)
    return float(100.0 * cos.mean())


@dataclass(frozen=True)
class EvalReport:
    line_acc: float | None
    shape_acc: float | None
    per_line: list = field(default_factory=list)  # (id, score) pairs
    per_face: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "line_acc": self.line_acc,
            "shape_acc": self.shape_acc,
            "per_line": [{"id": i, "score": s} for i, s in self.per_line],
            "per_face": [{"id": i, "score": s} for i, s in self.per_face],
            "counts": dict(self.counts),
        }

    def to_text(self) -> str:
        rows = [("item", "score")]
        rows += [(f"line {i}", f"{s:.3f}") for i, s in self.per_line]
        rows += [(f"face {i}", f"{s:.3f}") for i, s in self.per_face]
        rows.append(("line_acc", "absent" if self.line_acc is None
                     else f"{self.line_acc:.3f}"))
        rows.append(("shape_acc", "absent" if self.shape_acc is None
                     else f"{self.shape_acc:.3f}"))
        w0 = max(len(r[0]) for r in rows)
        w1 = max(len(r[1]) for r in rows)
        lines = [f"{r[0]:<{w0}}  {r[1]:>{w1}}" for r in rows]
        lines.insert(1, "-" * (w0 + w1 + 2))
        return "\n".join(lines) + "\n"


def evaluate(result: AnnotationSet, reference: AnnotationSet,
             samples_per_line: int = DEFAULT_LINE_SAMPLES) -> EvalReport:
    """Score every line and face pair; ids are list positions.

    Empty categories produce an absent (None) aggregate, never a sentinel 0.
    """
    if len(result.lines) != len(reference.lines):
        raise IdMismatch(f"line count {len(result.lines)} vs {len(reference.lines)}")
    if len(result.faces) != len(reference.faces):
        raise IdMismatch(f"face count {len(result.faces)} vs {len(reference.faces)}")

    per_line = []
    for i, (lr, lg) in enumerate(zip(result.lines, reference.lines)):
        per_line.append((i, line_acc(sample_line(lr, samples_per_line),
                                     sample_line(lg, samples_per_line))))

    per_face = []
    for i, (fr, fg) in enumerate(zip(result.faces, reference.faces)):
        if fr.landmarks.shape != fg.landmarks.shape:
            raise IdMismatch(f"face {i}: landmark counts differ")
        if fr.nose_index != fg.nose_index:
            raise IdMismatch(f"face {i}: nose index differs")
        per_face.append((i, shape_acc(fr.landmarks, fg.landmarks, fr.nose_index)))

    return EvalReport(
        line_acc=float(np.mean([s for _, s in per_line])) if per_line else None,
        shape_acc=float(np.mean([s for _, s in per_face])) if per_face else None,
        per_line=per_line,
        per_face=per_face,
        counts={"lines": len(per_line), "faces": len(per_face)},
    )


def write_report(report: EvalReport, path: str, fmt: str | None = None) -> None:
    """Emit JSON or an aligned text table; format from ``fmt`` or the extension."""
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "txt"
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.to_text())
