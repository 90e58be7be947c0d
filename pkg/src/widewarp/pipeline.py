"""Two-stage correction cascade: line stage, face stage, fusion, full-res warp.

A stage is any callable ``producer(image, payload) -> StageOutput``.  The
reference producers here are analytic: stage 1 wraps perspective
undistortion, stage 2 solves the mesh against a stereographic face target on
the already-projected frame.  A learned model can be dropped in behind the
same callable contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import StageFailure
from .flow import FlowField, compose, invert_flow, rescale_flow, warp, zero_flow
from .imaging import ImageBuffer, resize_bilinear, sobel_edges
from .mesh_solver import ConstraintSet, EnergyWeights, face_residual_target, \
    make_mesh, mesh_to_flow, solve
from .projection import CameraModel, perspective_undistort_flow
from .supervision import AnnotationSet

PORTRAIT_WORKING = (256, 384)
LANDSCAPE_WORKING = (384, 256)


@dataclass(frozen=True)
class StageOutput:
    flow: FlowField
    projected: ImageBuffer
    aux: list = field(default_factory=list)  # optional single-channel feature planes

    def __post_init__(self):
        if (self.flow.width, self.flow.height) != (self.projected.width,
                                                   self.projected.height):
            raise ValueError("stage flow and projected image must share a raster")


@dataclass(frozen=True)
class TransitionPayload:
    """What the line stage hands to the face stage: flow, image, feature planes."""

    flow: FlowField
    projected: ImageBuffer
    features: list = field(default_factory=list)


Producer = Callable[[ImageBuffer, Optional[TransitionPayload]], StageOutput]


@dataclass(frozen=True)
class PipelineResult:
    corrected: ImageBuffer
    flow: FlowField            # fused flow at the input resolution
    diagnostics: "PipelineDiagnostics"


@dataclass(frozen=True)
class PipelineDiagnostics:
    working: tuple
    stage1: StageOutput
    stage2: StageOutput
    fused_working: FlowField


def working_resolution(width: int, height: int) -> tuple[int, int]:
    return LANDSCAPE_WORKING if width > height else PORTRAIT_WORKING


def run(input_img: ImageBuffer, stage1: Producer, stage2: Producer,
        working: tuple[int, int] | None = None) -> PipelineResult:
    """Downscale, run both stages, fuse the flows, warp at full resolution."""
    if working is None:
        working = working_resolution(input_img.width, input_img.height)
    ww, wh = working
    small = resize_bilinear(input_img, ww, wh)

    try:
        out1 = stage1(small, None)
    except Exception as exc:
        raise StageFailure(f"stage 1 producer failed: {exc}") from exc
    projected = warp(small, out1.flow)
    payload = TransitionPayload(flow=out1.flow, projected=projected,
                                features=list(out1.aux))
    try:
        out2 = stage2(projected, payload)
    except Exception as exc:
        raise StageFailure(f"stage 2 producer failed: {exc}") from exc

    fused = compose(out2.flow, out1.flow)
    full = rescale_flow(fused, input_img.width, input_img.height)
    corrected = warp(input_img, full)
    return PipelineResult(
        corrected=corrected, flow=full,
        diagnostics=PipelineDiagnostics(working=working, stage1=out1,
                                        stage2=out2, fused_working=fused))


def reference_stage1(cam: CameraModel) -> Producer:
    """Analytic line stage: perspective undistortion from the camera model."""
    def produce(img: ImageBuffer, payload: TransitionPayload | None = None
                ) -> StageOutput:
        flow = perspective_undistort_flow(cam, img.width, img.height)
        return StageOutput(flow=flow, projected=warp(img, flow),
                           aux=[sobel_edges(img)])
    return produce


def reference_stage2(cam: CameraModel, annotations: AnnotationSet,
                     weights: EnergyWeights = EnergyWeights(),
                     spacing: float = 32.0, iters: int = 5,
                     frame_size: tuple[int, int] | None = None) -> Producer:
    """Analytic face stage: mesh solve toward the stereographic target.

    ``annotations`` live on the projected frame.  When ``frame_size`` is
    given they are in those pixel coordinates and get rescaled to whatever
    working raster the producer is invoked at; otherwise they are taken to be
    in producer-frame pixels already.
    """
    def produce(img: ImageBuffer, payload: TransitionPayload | None = None
                ) -> StageOutput:
        w, h = img.width, img.height
        ann = annotations
        if frame_size is not None and (w, h) != tuple(frame_size):
            ann = annotations.scaled(w / frame_size[0], h / frame_size[1])

        blend, heat = face_residual_target(cam, ann, w, h)
        constraints = ConstraintSet(line_constraints=list(ann.lines))
        if float(heat.plane(0).max()) == 0.0 and not constraints.line_constraints:
            # rest is the exact minimizer; skip the solve for an exact zero flow
            flow = zero_flow(w, h)
        else:
            # the solver wants forward vertex motion, not backward sampling
            target = invert_flow(blend)
            mesh = make_mesh(w, h, spacing)
            result = solve(mesh, target, heat, constraints, weights, iters)
            flow = mesh_to_flow(result.mesh, w, h)
        aux = [heat] + (list(payload.features) if payload else [])
        return StageOutput(flow=flow, projected=warp(img, flow), aux=aux)
    return produce
