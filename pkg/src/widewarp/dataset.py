"""Training-pair records: input, projection, corrected, flows, supervision targets.

A record is a directory of PNGs, PFLO flows and JSON; flows round trip
bit-exactly, images within 8-bit quantization.  Both warp-consistency
invariants are revalidated on every load.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import CorruptRecord, InvalidRecord
from .flow import FlowField, compose, forward_map_points, read_pflo, \
    warp, write_pflo
from .imaging import ImageBuffer, read_png, write_png
from .mesh_solver import EnergyWeights
from .pipeline import reference_stage2
from .projection import CameraModel, perspective_undistort_flow, undistort_points
from .metrics import line_acc
from .supervision import AnnotationSet, face_heatmap, lam_target, \
    read_annotations, sample_line, write_annotations

FORMAT_VERSION = 1
WARP_TOLERANCE = 0.02

_FILES = ("input.png", "projection.png", "corrected.png", "proj_flow.pflo",
          "corr_flow.pflo", "annotations.json", "heatmap.png",
          "edges_half.png", "edges_quarter.png", "meta.json")


@dataclass(frozen=True)
class SampleRecord:
    id: str
    input: ImageBuffer
    projection: ImageBuffer
    corrected: ImageBuffer
    proj_flow: FlowField
    corr_flow: FlowField
    annotations: AnnotationSet       # on the input frame, as authored
    heatmap: ImageBuffer             # face weights on the projected frame
    edge_targets: tuple              # (half, quarter) edge maps of the corrected image
    camera: CameraModel
    weights: EnergyWeights
    spacing: float
    iters: int
    version: int = 1


def validate(record: SampleRecord, tol: float = WARP_TOLERANCE) -> None:
    """Check both warp invariants; raises InvalidRecord beyond tolerance."""
    proj = warp(record.input, record.proj_flow)
    err1 = float(np.max(np.abs(proj.data - record.projection.data)))
    corr = warp(record.projection, record.corr_flow)
    err2 = float(np.max(np.abs(corr.data - record.corrected.data)))
    if err1 > tol or err2 > tol:
        raise InvalidRecord(
            f"warp invariants violated: projection err {err1:.4f}, "
            f"correction err {err2:.4f} (tol {tol})")


def projected_annotations(cam: CameraModel, annotations: AnnotationSet,
                          width: int, height: int) -> AnnotationSet:
    """Input-frame annotations mapped onto the perspective-projected frame."""
    return annotations.transformed(
        lambda pts: undistort_points(cam, pts, width, height))


def generate(record_id: str, input_img: ImageBuffer, cam: CameraModel,
             annotations: AnnotationSet,
             weights: EnergyWeights = EnergyWeights(),
             spacing: float = 32.0, iters: int = 5,
             line_acc_floor: float | None = None) -> SampleRecord:
    """Produce a full record with the analytic two-stage reference.

    ``line_acc_floor`` is the record quality gate: when set, every annotated
    line must reach that straightness after the full correction, otherwise
    the record is rejected (InvalidRecord) rather than kept as bad ground
    truth.
    """
    w, h = input_img.width, input_img.height
    proj_flow = perspective_undistort_flow(cam, w, h)
    projection = warp(input_img, proj_flow)

    ann_proj = projected_annotations(cam, annotations, w, h)
    stage2 = reference_stage2(cam, ann_proj, weights=weights, spacing=spacing,
                              iters=iters)
    out2 = stage2(projection, None)

    record = SampleRecord(
        id=record_id,
        input=input_img,
        projection=projection,
        corrected=out2.projected,
        proj_flow=proj_flow,
        corr_flow=out2.flow,
        annotations=annotations,
        heatmap=face_heatmap(ann_proj.faces, w, h),
        edge_targets=lam_target(out2.projected),
        camera=cam,
        weights=weights,
        spacing=spacing,
        iters=iters,
    )
    validate(record)
    if line_acc_floor is not None:
        _check_line_floor(record, line_acc_floor)
    return record


def corrected_line_straightness(record: SampleRecord) -> list:
    """Straightness of each annotated line after the full correction.

    Lines are tracked from the input frame through both flows; each is scored
    against its own chord, so 100 means perfectly straight in the corrected
    image.
    """
    full = compose(record.corr_flow, record.proj_flow)
    scores = []
    for line in record.annotations.lines:
        pts = sample_line(line, 24)
        landed = forward_map_points(full, pts)
        chord = sample_line(np.stack([landed[0], landed[-1]]), 24)
        scores.append(line_acc(landed, chord))
    return scores


def _check_line_floor(record: SampleRecord, floor: float) -> None:
    scores = corrected_line_straightness(record)
    bad = [s for s in scores if s < floor]
    if bad:
        raise InvalidRecord(
            f"line straightness {min(bad):.3f} below the {floor} floor")


def iterate_refine(record: SampleRecord,
                   weights: EnergyWeights | None = None,
                   iters: int | None = None) -> SampleRecord:
    """Re-solve the face stage with adjusted parameters; bumps the version."""
    weights = record.weights if weights is None else weights
    iters = record.iters if iters is None else iters
    w, h = record.input.width, record.input.height
    ann_proj = projected_annotations(record.camera, record.annotations, w, h)
    stage2 = reference_stage2(record.camera, ann_proj, weights=weights,
                              spacing=record.spacing, iters=iters)
    out2 = stage2(record.projection, None)
    refined = replace(record, corr_flow=out2.flow, corrected=out2.projected,
                      edge_targets=lam_target(out2.projected),
                      weights=weights, iters=iters, version=record.version + 1)
    validate(refined)
    return refined


def save(record: SampleRecord, directory: str | os.PathLike) -> None:
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    write_png(record.input, path / "input.png")
    write_png(record.projection, path / "projection.png")
    write_png(record.corrected, path / "corrected.png")
    write_pflo(record.proj_flow, path / "proj_flow.pflo")
    write_pflo(record.corr_flow, path / "corr_flow.pflo")
    write_annotations(record.annotations, path / "annotations.json")
    write_png(record.heatmap, path / "heatmap.png")
    write_png(record.edge_targets[0], path / "edges_half.png")
    write_png(record.edge_targets[1], path / "edges_quarter.png")
    meta = {
        "format_version": FORMAT_VERSION,
        "id": record.id,
        "version": record.version,
        "camera": record.camera.to_json(),
        "weights": record.weights.to_json(),
        "spacing": record.spacing,
        "iters": record.iters,
    }
    with open(path / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load(directory: str | os.PathLike) -> SampleRecord:
    path = Path(directory)
    for name in _FILES:
        if not (path / name).exists():
            raise CorruptRecord(f"{path}: missing {name}")
    with open(path / "meta.json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != FORMAT_VERSION:
        raise CorruptRecord(
            f"{path}: unsupported format_version {meta.get('format_version')}")

    record = SampleRecord(
        id=str(meta["id"]),
        input=read_png(path / "input.png"),
        projection=read_png(path / "projection.png"),
        corrected=read_png(path / "corrected.png"),
        proj_flow=read_pflo(path / "proj_flow.pflo"),
        corr_flow=read_pflo(path / "corr_flow.pflo"),
        annotations=read_annotations(path / "annotations.json"),
        heatmap=read_png(path / "heatmap.png"),
        edge_targets=(read_png(path / "edges_half.png"),
                      read_png(path / "edges_quarter.png")),
        camera=CameraModel.from_json(meta["camera"]),
        weights=EnergyWeights.from_json(meta["weights"]),
        spacing=float(meta["spacing"]),
        iters=int(meta["iters"]),
        version=int(meta["version"]),
    )
    validate(record)
    return record
