"""HTTP session service backing the interactive mesh-correction editor.

Sessions are in-memory, one mesh-editing workspace per uploaded image.  All
geometry lives server-side; clients only post constraints and fetch state,
previews and exports.  Solves run off the event loop so one session's solve
never blocks another session's requests.
"""

from __future__ import annotations

import base64
import io
import json
import tempfile
import threading
import uuid
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import anyio.to_thread
import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import Response

from .flow import FlowField, invert_flow, warp, write_pflo, zero_flow
from .imaging import ImageBuffer, read_png, resize_bilinear, write_png
from .mesh_solver import ConstraintSet, EnergyWeights, MeshGrid, PointConstraint, \
    face_residual_target, make_mesh, mesh_to_flow, solve
from .projection import CameraModel
from .supervision import AnnotationSet, face_heatmap

HISTORY_DEPTH = 32


@dataclass
class Session:
    id: str
    image: ImageBuffer
    cam: CameraModel | None
    annotations: AnnotationSet
    mesh: MeshGrid
    constraints: ConstraintSet
    weights: EnergyWeights
    history: deque = field(default_factory=lambda: deque(maxlen=HISTORY_DEPTH))
    solving: bool = False
    last_diagnostics: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def state_json(self) -> dict:
        return {
            "id": self.id,
            "width": self.image.width,
            "height": self.image.height,
            "mesh": self.mesh.to_json(),
            "constraints": self.constraints.to_json(),
            "weights": self.weights.to_json(),
            "solving": self.solving,
            "history_depth": len(self.history),
            "diagnostics": self.last_diagnostics,
        }


def _png_bytes(img: ImageBuffer) -> bytes:
    buf = io.BytesIO()
    q = np.rint(np.clip(img.data, 0.0, 1.0) * 255.0).astype(np.uint8)
    from PIL import Image
    pil = Image.fromarray(q[:, :, 0], mode="L") if img.channels == 1 \
        else Image.fromarray(q, mode="RGB")
    pil.save(buf, format="PNG")
    return buf.getvalue()


def _pflo_bytes(f: FlowField) -> bytes:
    with tempfile.NamedTemporaryFile(suffix=".pflo") as tmp:
        write_pflo(f, tmp.name)
        tmp.seek(0)
        return tmp.read()


def create_app(data_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="widewarp editor service")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions

    def get_session(session_id: str) -> Session:
        sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return sess

    @app.post("/session")
    async def create_session(image: UploadFile = File(...),
                             camera: UploadFile | None = File(None),
                             annotations: UploadFile | None = File(None),
                             camera_json: str | None = Form(None),
                             annotations_json: str | None = Form(None)):
        try:
            img = read_png(io.BytesIO(await image.read()))
        except Exception as exc:
            raise HTTPException(status_code=422, detail=f"bad PNG: {exc}")

        cam = None
        cam_source = camera_json if camera_json is not None else (
            (await camera.read()).decode("utf-8") if camera is not None else None)
        if cam_source:
            try:
                cam = CameraModel.from_json(json.loads(cam_source))
            except Exception as exc:
                raise HTTPException(status_code=422, detail=f"bad camera: {exc}")

        ann = AnnotationSet()
        ann_source = annotations_json if annotations_json is not None else (
            (await annotations.read()).decode("utf-8")
            if annotations is not None else None)
        if ann_source:
            try:
                ann = AnnotationSet.from_json(json.loads(ann_source))
                ann = ann.clamped_to(img.width, img.height)
            except Exception as exc:
                raise HTTPException(status_code=422, detail=f"bad annotations: {exc}")

        try:
            mesh = make_mesh(img.width, img.height)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        sess = Session(
            id=uuid.uuid4().hex,
            image=img,
            cam=cam,
            annotations=ann,
            mesh=mesh,
            constraints=ConstraintSet(),
            weights=EnergyWeights(),
        )
        sessions[sess.id] = sess
        heat = face_heatmap(ann.faces, img.width, img.height)
        return {
            "id": sess.id,
            "mesh": sess.mesh.to_json(),
            "heatmap": {"width": heat.width, "height": heat.height,
                        "max": float(heat.plane(0).max())},
        }

    @app.get("/session/{session_id}/state")
    async def get_state(session_id: str):
        return get_session(session_id).state_json()

    @app.post("/session/{session_id}/constraints")
    async def patch_constraints(session_id: str, patch: dict):
        sess = get_session(session_id)
        with sess.lock:
            points = list(sess.constraints.point_constraints)
            lines = [l.tolist() for l in sess.constraints.line_constraints]

            remove = patch.get("remove", {})
            try:
                for idx in sorted(remove.get("points", []), reverse=True):
                    points.pop(idx)
                for idx in sorted(remove.get("lines", []), reverse=True):
                    lines.pop(idx)
            except (IndexError, TypeError):
                raise HTTPException(status_code=422, detail="bad removal index")

            add = patch.get("add", {})
            for p in add.get("points", []):
                try:
                    pc = PointConstraint(anchor=tuple(p["anchor"]),
                                         target=tuple(p["target"]),
                                         weight=float(p.get("weight", 10.0)))
                except (KeyError, TypeError, ValueError) as exc:
                    raise HTTPException(status_code=422,
                                        detail=f"bad point constraint: {exc}")
                ax, ay = pc.anchor
                if not (0 <= ax <= sess.image.width - 1
                        and 0 <= ay <= sess.image.height - 1):
                    raise HTTPException(status_code=422,
                                        detail="anchor outside image bounds")
                points.append(pc)
            for line in add.get("lines", []):
                if not isinstance(line, list) or len(line) < 2:
                    raise HTTPException(status_code=422,
                                        detail="line constraint needs >= 2 points")
                pts = np.asarray(line, dtype=np.float64)
                seg = np.diff(pts, axis=0)
                if float(np.hypot(seg[:, 0], seg[:, 1]).sum()) <= 0.0:
                    raise HTTPException(status_code=422,
                                        detail="line constraint has zero length")
                lines.append(line)

            try:
                sess.constraints = ConstraintSet(point_constraints=points,
                                                 line_constraints=lines)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
        return sess.state_json()

    @app.post("/session/{session_id}/solve")
    async def solve_session(session_id: str, body: dict | None = None):
        sess = get_session(session_id)
        body = body or {}
        with sess.lock:
            if sess.solving:
                raise HTTPException(status_code=409, detail="solve in progress")
            sess.solving = True
            if "weights" in body:
                try:
                    sess.weights = EnergyWeights.from_json(body["weights"])
                except (TypeError, ValueError) as exc:
                    sess.solving = False
                    raise HTTPException(status_code=422, detail=f"bad weights: {exc}")
            iters = int(body.get("iters", 5))
            mesh_before = sess.mesh
            constraints = sess.constraints
            weights = sess.weights

        w, h = sess.image.width, sess.image.height
        if sess.cam is not None:
            blend, heat = face_residual_target(sess.cam, sess.annotations, w, h)
            target = invert_flow(blend)
        else:
            target = zero_flow(w, h)
            heat = face_heatmap(sess.annotations.faces, w, h)

        def run_solve():
            return solve(mesh_before, target, heat, constraints, weights,
                         iters=iters)
        try:
            result = await anyio.to_thread.run_sync(run_solve)
        except Exception as exc:
            with sess.lock:
                sess.solving = False
            raise HTTPException(status_code=500, detail=f"solve failed: {exc}")

        with sess.lock:
            sess.history.append(mesh_before)
            sess.mesh = result.mesh
            sess.last_diagnostics = {
                "energies": result.energies,
                "flipped_quads": [list(q) for q in result.flipped_quads],
                "cg_iterations": result.cg_iterations,
            }
            sess.solving = False
        return {"mesh": sess.mesh.to_json(), **sess.last_diagnostics}

    @app.get("/session/{session_id}/preview")
    async def preview(session_id: str, scale: float = 1.0,
                      source: str = "corrected"):
        sess = get_session(session_id)
        if not (0.01 <= scale <= 1.0):
            raise HTTPException(status_code=422, detail="scale must be in (0, 1]")
        if source not in ("corrected", "original"):
            raise HTTPException(status_code=422, detail="unknown preview source")

        def render() -> bytes:
            w, h = sess.image.width, sess.image.height
            img = sess.image
            if source == "corrected":
                flow = mesh_to_flow(sess.mesh, w, h)
                img = warp(img, flow)
            if scale != 1.0:
                img = resize_bilinear(img, max(1, round(w * scale)),
                                      max(1, round(h * scale)))
            return _png_bytes(img)

        data = await anyio.to_thread.run_sync(render)
        return Response(content=data, media_type="image/png")

    @app.post("/session/{session_id}/undo")
    async def undo(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            if not sess.history:
                raise HTTPException(status_code=422, detail="nothing to undo")
            sess.mesh = sess.history.pop()
        return sess.state_json()

    @app.get("/session/{session_id}/export")
    async def export(session_id: str):
        sess = get_session(session_id)

        def render():
            w, h = sess.image.width, sess.image.height
            flow = mesh_to_flow(sess.mesh, w, h)
            corrected = warp(sess.image, flow)
            return _pflo_bytes(flow), _png_bytes(corrected)

        flow_bytes, png_bytes = await anyio.to_thread.run_sync(render)
        return {
            "corr_flow": base64.b64encode(flow_bytes).decode("ascii"),
            "corrected": base64.b64encode(png_bytes).decode("ascii"),
        }

    @app.delete("/session/{session_id}")
    async def delete(session_id: str):
        sess = get_session(session_id)
        if data_dir is not None:
            snap = Path(data_dir) / sess.id
            snap.mkdir(parents=True, exist_ok=True)
            write_png(sess.image, snap / "image.png")
            flow = mesh_to_flow(sess.mesh, sess.image.width, sess.image.height)
            write_pflo(flow, snap / "corr_flow.pflo")
            with open(snap / "session.json", "w", encoding="utf-8") as fh:
                json.dump(sess.state_json(), fh)
        del sessions[session_id]
        return {"deleted": session_id}

    return app
