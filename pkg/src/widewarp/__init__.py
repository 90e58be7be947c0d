"""Calibration-aware wide-angle portrait correction toolkit.

Core pieces: dense backward flows and warping, analytic perspective and
stereographic flow producers, a content-aware mesh deformation solver for
ground-truth authoring, line/shape quality metrics, loss functionals, a
two-stage correction pipeline, dataset records, and a CLI plus HTTP editing
service.
"""

from .errors import (CorruptRecord, DegenerateLine, DegenerateReference,
                     DimensionMismatch, DomainError, FlippedQuad, IdMismatch,
                     InvalidRecord, NonInvertibleModel, SolverDiverged,
                     StageFailure, WidewarpError, ZeroVector)
from .flow import (FlowField, compose, forward_map_points, read_pflo,
                   rescale_flow, warp, write_pflo, zero_flow)
from .imaging import ImageBuffer, read_png, resize_bilinear, sobel_edges, write_png
from .losses import (LossWeights, fam_loss, l2, lam_loss, line_loss,
                     shape_loss, sobel_l2, total_loss)
from .mesh_solver import (ConstraintSet, EnergyWeights, MeshGrid,
                          PointConstraint, SolveResult, build_target_flow,
                          face_residual_target, make_mesh, mesh_to_flow, solve)
from .metrics import EvalReport, evaluate, line_acc, shape_acc
from .pipeline import (PipelineResult, StageOutput, TransitionPayload,
                       reference_stage1, reference_stage2, run)
from .projection import (CameraModel, blend_flows, distort_points,
                         perspective_undistort_flow, read_camera,
                         stereographic_flow, stereographic_project_points,
                         undistort_points, write_camera)
from .supervision import (AnnotationSet, FaceAnnotation, face_heatmap,
                          lam_target, read_annotations, sample_line,
                          write_annotations)

__version__ = "0.1.0"
