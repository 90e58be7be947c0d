"""Command-line surface: correct, eval, genpairs, serve.

Exit codes: 0 success, 2 validation error, 3 solver or service failure.
Outputs are written through a temp file and renamed, so failures never leave
partial files behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import dataset
from .errors import IdMismatch, SolverDiverged, StageFailure, WidewarpError
from .flow import write_pflo
from .imaging import read_png, write_png
from .mesh_solver import EnergyWeights
from .metrics import evaluate, write_report
from .pipeline import reference_stage1, reference_stage2, run
from .projection import read_camera
from .supervision import AnnotationSet, read_annotations

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

_WEIGHT_KEYS = ("face", "background", "line", "regularity", "boundary")


class _ValidationError(Exception):
    pass


def _parse_weights(text: str) -> EnergyWeights:
    """Parse 'face=4,background=1,...' (any subset) into EnergyWeights."""
    values = {}
    for part in text.split(","):
        if not part:
            continue
        key, _, val = part.partition("=")
        if key not in _WEIGHT_KEYS:
            raise _ValidationError(
                f"--weights: unknown key '{key}' (expected {', '.join(_WEIGHT_KEYS)})")
        try:
            values["w_" + key] = float(val)
        except ValueError:
            raise _ValidationError(f"--weights: bad value for '{key}'") from None
    try:
        return EnergyWeights(**values)
    except ValueError as exc:
        raise _ValidationError(f"--weights: {exc}") from None


def _parse_working(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise _ValidationError("--working: expected WxH, e.g. 256x384") from None


def _require_file(path: str, flag: str) -> str:
    if not Path(path).is_file():
        raise _ValidationError(f"{flag}: no such file: {path}")
    return path


def _write_atomic(path: str, writer) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _load_merged_annotations(args, width: int, height: int) -> AnnotationSet:
    faces = []
    lines = []
    if args.faces:
        faces = read_annotations(_require_file(args.faces, "--faces"),
                                 width, height).faces
    if args.lines:
        lines = read_annotations(_require_file(args.lines, "--lines"),
                                 width, height).lines
    return AnnotationSet(lines=lines, faces=faces)


def _cmd_correct(args) -> int:
    img = read_png(_require_file(args.input, "--input"))
    cam = read_camera(_require_file(args.camera, "--camera"))
    annotations = _load_merged_annotations(args, img.width, img.height)
    weights = _parse_weights(args.weights) if args.weights else EnergyWeights()
    working = _parse_working(args.working) if args.working else None

    ann_proj = dataset.projected_annotations(cam, annotations,
                                             img.width, img.height)
    stage1 = reference_stage1(cam)
    stage2 = reference_stage2(cam, ann_proj, weights=weights,
                              spacing=args.spacing, iters=args.iters,
                              frame_size=(img.width, img.height))
    result = run(img, stage1, stage2, working=working)

    _write_atomic(args.output, lambda p: write_png(result.corrected, p))
    if args.flow_out:
        _write_atomic(args.flow_out, lambda p: write_pflo(result.flow, p))
    return EXIT_OK


def _cmd_eval(args) -> int:
    result = read_annotations(_require_file(args.result, "--result"))
    reference = read_annotations(_require_file(args.reference, "--reference"))
    report = evaluate(result, reference)
    if args.report:
        fmt = "json" if args.report.endswith(".json") else "txt"
        _write_atomic(args.report, lambda p: write_report(report, p, fmt=fmt))
    sys.stdout.write(report.to_text())
    if args.loss_record:
        if not args.loss_against:
            raise _ValidationError("--loss-against is required with --loss-record")
        sys.stdout.write(_loss_breakdown(args.loss_record, args.loss_against))
    return EXIT_OK


def _loss_breakdown(record_dir: str, against_dir: str) -> str:
    """Reconstruction-loss table between two dataset records (result vs GT)."""
    from .losses import LossWeights, fam_loss, lam_loss, line_loss, shape_loss, \
        total_loss
    a = dataset.load(record_dir)
    b = dataset.load(against_dir)
    parts = (
        lam_loss(a.edge_targets[0], b.edge_targets[0]),
        fam_loss(a.heatmap, b.heatmap),
        line_loss(a.proj_flow, b.proj_flow, a.projection, b.projection),
        shape_loss(a.corr_flow, b.corr_flow, a.corrected, b.corrected),
    )
    weights = LossWeights()
    rows = [("edge-attention", parts[0]), ("face-attention", parts[1]),
            ("line-stage", parts[2]), ("shape-stage", parts[3]),
            ("weighted total", total_loss(parts, weights))]
    width = max(len(r[0]) for r in rows)
    lines = ["", "loss breakdown (result vs reference record):"]
    lines += [f"  {name:<{width}}  {value:.6g}" for name, value in rows]
    return "\n".join(lines) + "\n"


def _cmd_genpairs(args) -> int:
    in_dir = Path(args.input_dir)
    if not in_dir.is_dir():
        raise _ValidationError(f"--input-dir: no such directory: {args.input_dir}")
    cam = read_camera(_require_file(args.camera, "--camera"))
    weights = _parse_weights(args.weights) if args.weights else EnergyWeights()
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    count = 0
    for png in sorted(in_dir.glob("*.png")):
        img = read_png(png)
        ann_path = png.with_suffix(".json")
        if ann_path.exists():
            annotations = read_annotations(ann_path, img.width, img.height)
        else:
            annotations = AnnotationSet()
        record = dataset.generate(png.stem, img, cam, annotations,
                                  weights=weights, spacing=args.spacing,
                                  iters=args.iters,
                                  line_acc_floor=args.line_acc_floor)
        dataset.save(record, out_dir / png.stem)
        count += 1
    print(f"wrote {count} records to {out_dir}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(data_dir=args.data_dir)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"serve: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="widewarp",
        description="Wide-angle portrait correction: analytic flows, mesh "
                    "warping, metrics, dataset tooling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correct", help="correct one image end to end")
    p.add_argument("--input", required=True, help="input PNG")
    p.add_argument("--camera", required=True, help="camera model JSON")
    p.add_argument("--faces", help="annotation JSON providing faces")
    p.add_argument("--lines", help="annotation JSON providing lines")
    p.add_argument("--output", required=True, help="corrected PNG")
    p.add_argument("--flow-out", help="write the fused flow as PFLO")
    p.add_argument("--weights", help="solver weights, e.g. face=4,line=8")
    p.add_argument("--working", help="working resolution WxH (default by aspect)")
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--spacing", type=float, default=32.0)
    p.set_defaults(func=_cmd_correct)

    p = sub.add_parser("eval", help="score result annotations against a reference")
    p.add_argument("--result", required=True, help="result annotation JSON")
    p.add_argument("--reference", required=True, help="reference annotation JSON")
    p.add_argument("--report", help="write report (.json or .txt)")
    p.add_argument("--loss-record", help="dataset record dir to score as result")
    p.add_argument("--loss-against", help="reference record dir for the loss table")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("genpairs", help="generate dataset records for a directory")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--camera", required=True)
    p.add_argument("--weights")
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--spacing", type=float, default=32.0)
    p.add_argument("--line-acc-floor", type=float,
                   help="reject records whose corrected lines score below this")
    p.set_defaults(func=_cmd_genpairs)

    p = sub.add_parser("serve", help="run the interactive editing service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", help="snapshot sessions here on delete")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IdMismatch, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverDiverged, StageFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except WidewarpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
