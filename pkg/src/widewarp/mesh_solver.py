"""Content-aware quad-mesh deformation solved as iterated sparse least squares.

The solver deforms a regular grid so that face regions follow a blended
projection target, the background follows its own target (rest positions by
default), annotated polylines stay collinear, and every quad stays close to a
similarity transform of its rest shape.  Each outer iteration re-linearizes
the line terms around the previous iterate and solves one sparse normal
system by preconditioned conjugate gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator
from scipy.sparse.linalg import cg as sparse_cg

from .errors import FlippedQuad, SolverDiverged
from .flow import FlowField, zero_flow
from .imaging import ImageBuffer
from .projection import CameraModel, blend_flows, perspective_undistort_flow, \
    stereographic_flow
from .supervision import AnnotationSet, face_heatmap, sample_line

CG_RTOL = 1e-6
CG_MAXITER = 2000
DATA_SUBSAMPLE = 4       # data residuals on every 4th pixel per axis
DEFAULT_SPACING = 32.0   # one vertex per this many output pixels per axis
_WEIGHT_CUTOFF = 1e-14


@dataclass(frozen=True)
class MeshGrid:
    """Regular quad mesh: rest grid on the output raster plus deformed positions."""

    rest: np.ndarray     # (rows, cols, 2)
    current: np.ndarray  # (rows, cols, 2)

    def __post_init__(self):
        rest = np.asarray(self.rest, dtype=np.float64)
        cur = np.asarray(self.current, dtype=np.float64)
        if rest.ndim != 3 or rest.shape[2] != 2 or rest.shape != cur.shape:
            raise ValueError("rest/current must both be (rows, cols, 2)")
        if rest.shape[0] < 2 or rest.shape[1] < 2:
            raise ValueError("mesh needs at least 2x2 vertices")
        if np.any(np.diff(rest[0, :, 0]) <= 0) or np.any(np.diff(rest[:, 0, 1]) <= 0):
            raise ValueError("rest positions must be strictly increasing per axis")
        object.__setattr__(self, "rest", rest)
        object.__setattr__(self, "current", cur)

    @property
    def rows(self) -> int:
        return self.rest.shape[0]

    @property
    def cols(self) -> int:
        return self.rest.shape[1]

    def with_current(self, current: np.ndarray) -> "MeshGrid":
        return MeshGrid(rest=self.rest, current=current)

    def map_points(self, points: np.ndarray) -> np.ndarray:
        """Forward map: rest-space points -> deformed positions (bilinear)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        ids, w = _attach(self.rest, pts)
        cur = self.current.reshape(-1, 2)
        return np.einsum("nk,nkc->nc", w, cur[ids])

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols,
                "rest": self.rest.tolist(), "current": self.current.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "MeshGrid":
        return cls(rest=np.asarray(obj["rest"]), current=np.asarray(obj["current"]))


def make_mesh(out_w: int, out_h: int, spacing: float = DEFAULT_SPACING) -> MeshGrid:
    """Uniform rest grid spanning [0, w-1] x [0, h-1], undeformed."""
    if out_w < 2 or out_h < 2:
        raise ValueError("raster must be at least 2x2 to carry a mesh")
    cols = max(2, int(np.ceil((out_w - 1) / spacing)) + 1)
    rows = max(2, int(np.ceil((out_h - 1) / spacing)) + 1)
    xs = np.linspace(0.0, out_w - 1.0, cols)
    ys = np.linspace(0.0, out_h - 1.0, rows)
    gx, gy = np.meshgrid(xs, ys)
    rest = np.stack([gx, gy], axis=-1)
    return MeshGrid(rest=rest, current=rest.copy())


@dataclass(frozen=True)
class EnergyWeights:
    w_face: float = 4.0
    w_background: float = 1.0
    w_line: float = 8.0
    w_regularity: float = 2.0
    w_boundary: float = 16.0

    def __post_init__(self):
        vals = (self.w_face, self.w_background, self.w_line,
                self.w_regularity, self.w_boundary)
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise ValueError("energy weights must be finite and nonnegative")
        if self.w_face <= 0 and self.w_background <= 0:
            raise ValueError("need w_face > 0 or w_background > 0 to fix the gauge")

    def to_json(self) -> dict:
        return {"w_face": self.w_face, "w_background": self.w_background,
                "w_line": self.w_line, "w_regularity": self.w_regularity,
                "w_boundary": self.w_boundary}

    @classmethod
    def from_json(cls, obj: dict) -> "EnergyWeights":
        return cls(**{k: float(v) for k, v in obj.items()})


@dataclass(frozen=True)
class PointConstraint:
    anchor: tuple[float, float]   # rest-space position (a drag handle's origin)
    target: tuple[float, float]   # desired deformed position
    weight: float = 10.0


@dataclass(frozen=True)
class ConstraintSet:
    point_constraints: list = field(default_factory=list)
    line_constraints: list = field(default_factory=list)  # list of (n, 2) polylines

    def __post_init__(self):
        lines = [np.asarray(l, dtype=np.float64) for l in self.line_constraints]
        for l in lines:
            if l.ndim != 2 or l.shape[1] != 2 or l.shape[0] < 2:
                raise ValueError("line constraints need at least 2 (x, y) points")
        object.__setattr__(self, "line_constraints", lines)
        object.__setattr__(self, "point_constraints", list(self.point_constraints))

    def to_json(self) -> dict:
        return {
            "point_constraints": [{"anchor": list(p.anchor), "target": list(p.target),
                                   "weight": p.weight}
                                  for p in self.point_constraints],
            "line_constraints": [l.tolist() for l in self.line_constraints],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConstraintSet":
        pts = [PointConstraint(anchor=tuple(p["anchor"]), target=tuple(p["target"]),
                               weight=float(p.get("weight", 10.0)))
               for p in obj.get("point_constraints", [])]
        return cls(point_constraints=pts,
                   line_constraints=obj.get("line_constraints", []))


@dataclass(frozen=True)
class SolveResult:
    mesh: MeshGrid
    energies: list          # natural energy at x0 and after each outer iteration
    flipped_quads: list     # (row, col) of inverted quads, empty when clean
    cg_iterations: list     # inner CG iteration counts per outer iteration


def _attach(rest: np.ndarray, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear attachment of points to the uniform rest grid.

    Returns corner vertex ids (n, 4) in TL, TR, BL, BR order and weights (n, 4).
    """
    rows, cols = rest.shape[:2]
    xs = rest[0, :, 0]
    ys = rest[:, 0, 1]
    cw = xs[1] - xs[0]
    ch = ys[1] - ys[0]
    cj = np.clip(((pts[:, 0] - xs[0]) / cw).astype(np.intp), 0, cols - 2)
    ci = np.clip(((pts[:, 1] - ys[0]) / ch).astype(np.intp), 0, rows - 2)
    tx = (pts[:, 0] - xs[cj]) / cw
    ty = (pts[:, 1] - ys[ci]) / ch
    v00 = ci * cols + cj
    ids = np.stack([v00, v00 + 1, v00 + cols, v00 + cols + 1], axis=1)
    w = np.stack([(1 - tx) * (1 - ty), tx * (1 - ty),
                  (1 - tx) * ty, tx * ty], axis=1)
    return ids, w


class _RowBuilder:
    """Accumulates sparse residual rows sqrt(w) * (sum c_k x_k - rhs)."""

    def __init__(self):
        self.rows: list = []
        self.cols: list = []
        self.vals: list = []
        self.rhs: list = []
        self.n_rows = 0

    def add(self, cols: np.ndarray, coeffs: np.ndarray, rhs: np.ndarray) -> None:
        n, k = cols.shape
        if n == 0:
            return
        row_ids = self.n_rows + np.arange(n)
        self.rows.append(np.repeat(row_ids, k))
        self.cols.append(cols.reshape(-1))
        self.vals.append(coeffs.reshape(-1))
        self.rhs.append(rhs)
        self.n_rows += n

    def build(self, n_unknowns: int) -> tuple[sparse.csr_matrix, np.ndarray]:
        a = sparse.coo_matrix(
            (np.concatenate(self.vals),
             (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n_rows, n_unknowns))
        return a.tocsr(), np.concatenate(self.rhs)


def _add_fit_rows(builder: _RowBuilder, ids: np.ndarray, w: np.ndarray,
                  targets: np.ndarray, sample_weights: np.ndarray) -> None:
    """Position-fit residuals: V(p) - target, one X and one Y row per sample."""
    keep = sample_weights > _WEIGHT_CUTOFF
    if not np.any(keep):
        return
    ids, w = ids[keep], w[keep]
    targets = targets[keep]
    sw = np.sqrt(sample_weights[keep])[:, None]
    builder.add(2 * ids, w * sw, targets[:, 0] * sw[:, 0])
    builder.add(2 * ids + 1, w * sw, targets[:, 1] * sw[:, 0])


def _add_similarity_rows(builder: _RowBuilder, mesh: MeshGrid, w_reg: float) -> None:
    """Per-quad similarity deviation: each corner in the frame of its two neighbors."""
    if w_reg <= 0:
        return
    rows, cols = mesh.rows, mesh.cols
    qi, qj = np.meshgrid(np.arange(rows - 1), np.arange(cols - 1), indexing="ij")
    v_tl = (qi * cols + qj).reshape(-1)
    corner_ids = np.stack(  # cyclic order TL, TR, BR, BL
        [v_tl, v_tl + 1, v_tl + cols + 1, v_tl + cols], axis=1)
    n_quads = corner_ids.shape[0]
    rest_flat = mesh.rest.reshape(-1, 2)
    n_terms = 4 * n_quads
    sw = np.sqrt(w_reg / n_terms)

    for k in range(4):
        v1 = corner_ids[:, k]
        v2 = corner_ids[:, (k + 1) % 4]
        v3 = corner_ids[:, (k - 1) % 4]
        d = rest_flat[v3] - rest_flat[v2]
        e = rest_flat[v1] - rest_flat[v2]
        den = d[:, 0] ** 2 + d[:, 1] ** 2
        u = (e[:, 0] * d[:, 0] + e[:, 1] * d[:, 1]) / den
        v = (e[:, 0] * d[:, 1] - e[:, 1] * d[:, 0]) / den

        ones = np.ones(n_quads)
        # x residual: X1 + (u-1) X2 - u X3 + v Y2 - v Y3
        cols_x = np.stack([2 * v1, 2 * v2, 2 * v3, 2 * v2 + 1, 2 * v3 + 1], axis=1)
        coef_x = np.stack([ones, u - 1.0, -u, v, -v], axis=1) * sw
        builder.add(cols_x, coef_x, np.zeros(n_quads))
        # y residual: Y1 + (u-1) Y2 - u Y3 - v X2 + v X3
        cols_y = np.stack([2 * v1 + 1, 2 * v2 + 1, 2 * v3 + 1, 2 * v2, 2 * v3], axis=1)
        coef_y = np.stack([ones, u - 1.0, -u, -v, v], axis=1) * sw
        builder.add(cols_y, coef_y, np.zeros(n_quads))


def _add_boundary_rows(builder: _RowBuilder, mesh: MeshGrid, w_boundary: float) -> None:
    """Pin the outward coordinate of border vertices to the frame edge."""
    if w_boundary <= 0:
        return
    rows, cols = mesh.rows, mesh.cols
    rest = mesh.rest
    n_rows_total = 2 * cols + 2 * rows
    sw = np.sqrt(w_boundary / n_rows_total)

    def pin(vertex_ids, axis, values):
        cols_arr = (2 * vertex_ids + axis)[:, None]
        coeffs = np.full((len(vertex_ids), 1), sw)
        builder.add(cols_arr, coeffs, values * sw)

    top = np.arange(cols)
    bottom = (rows - 1) * cols + np.arange(cols)
    left = np.arange(rows) * cols
    right = np.arange(rows) * cols + (cols - 1)
    pin(top, 1, np.full(cols, rest[0, 0, 1]))
    pin(bottom, 1, np.full(cols, rest[-1, 0, 1]))
    pin(left, 0, np.full(rows, rest[0, 0, 0]))
    pin(right, 0, np.full(rows, rest[0, -1, 0]))


def _line_samples(mesh: MeshGrid, constraints: ConstraintSet) -> list:
    """Arc-length resample each constrained polyline to about half-cell spacing."""
    cw = mesh.rest[0, 1, 0] - mesh.rest[0, 0, 0]
    ch = mesh.rest[1, 0, 1] - mesh.rest[0, 0, 1]
    step = 0.5 * min(cw, ch)
    out = []
    for line in constraints.line_constraints:
        seg = np.diff(line, axis=0)
        arclen = float(np.hypot(seg[:, 0], seg[:, 1]).sum())
        n = max(2, int(np.ceil(arclen / step)))
        pts = sample_line(line, n)
        out.append(_attach(mesh.rest, pts))
    return out


def _add_line_rows(builder: _RowBuilder, line_attachments: list,
                   positions: np.ndarray, w_line: float) -> None:
    """Perpendicular deviation from each line's best fit at the previous iterate."""
    if w_line <= 0 or not line_attachments:
        return
    n_total = sum(ids.shape[0] for ids, _ in line_attachments)
    sw = np.sqrt(w_line / n_total)
    flat = positions.reshape(-1, 2)
    for ids, w in line_attachments:
        mapped = np.einsum("nk,nkc->nc", w, flat[ids])
        centroid = mapped.mean(axis=0)
        centered = mapped - centroid
        cov = centered.T @ centered
        eigvals, eigvecs = np.linalg.eigh(cov)
        direction = eigvecs[:, np.argmax(eigvals)]
        normal = np.array([-direction[1], direction[0]])

        cols = np.concatenate([2 * ids, 2 * ids + 1], axis=1)
        coeffs = np.concatenate([w * normal[0], w * normal[1]], axis=1) * sw
        rhs = np.full(ids.shape[0], normal @ centroid) * sw
        builder.add(cols, coeffs, rhs)


def _add_point_constraint_rows(builder: _RowBuilder, mesh: MeshGrid,
                               constraints: ConstraintSet) -> None:
    if not constraints.point_constraints:
        return
    rest = mesh.rest
    lo = rest[0, 0]
    hi = rest[-1, -1]
    anchors = np.array([p.anchor for p in constraints.point_constraints], dtype=np.float64)
    if np.any(anchors < lo) or np.any(anchors > hi):
        raise ValueError("point-constraint anchor outside the mesh rest bounds")
    targets = np.array([p.target for p in constraints.point_constraints], dtype=np.float64)
    weights = np.array([p.weight for p in constraints.point_constraints], dtype=np.float64)
    ids, w = _attach(rest, anchors)
    _add_fit_rows(builder, ids, w, targets, weights)


def assemble_system(mesh: MeshGrid, target: FlowField, heatmap: ImageBuffer,
                    constraints: ConstraintSet, weights: EnergyWeights,
                    background_target: FlowField | None = None,
                    linearize_at: np.ndarray | None = None,
                    ) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Build the weighted least-squares system A x = b for one outer iteration.

    ``linearize_at`` supplies the vertex positions around which line terms are
    linearized (defaults to ``mesh.current``).  Exposed so tests can compare
    the CG path against a dense solve of the identical system.
    """
    if (target.width, target.height) != (heatmap.width, heatmap.height):
        raise ValueError("target flow and heatmap must share a raster")
    positions = mesh.current if linearize_at is None else linearize_at

    builder = _RowBuilder()
    _add_data_terms(builder, mesh, target, heatmap, weights, background_target)
    _add_similarity_rows(builder, mesh, weights.w_regularity)
    _add_boundary_rows(builder, mesh, weights.w_boundary)
    _add_line_rows(builder, _line_samples(mesh, constraints), positions,
                   weights.w_line)
    _add_point_constraint_rows(builder, mesh, constraints)
    return builder.build(2 * mesh.rows * mesh.cols)


def _add_data_terms(builder: _RowBuilder, mesh: MeshGrid, target: FlowField,
                    heatmap: ImageBuffer, weights: EnergyWeights,
                    background_target: FlowField | None) -> None:
    w, h = target.width, target.height
    px, py = np.meshgrid(np.arange(0, w, DATA_SUBSAMPLE, dtype=np.float64),
                         np.arange(0, h, DATA_SUBSAMPLE, dtype=np.float64))
    pts = np.stack([px.reshape(-1), py.reshape(-1)], axis=1)
    n_samples = pts.shape[0]
    ids, bw = _attach(mesh.rest, pts)
    ix = pts[:, 0].astype(np.intp)
    iy = pts[:, 1].astype(np.intp)
    heat = heatmap.plane(0)[iy, ix]

    if weights.w_face > 0:
        tgt = pts + target.data.astype(np.float64)[iy, ix]
        _add_fit_rows(builder, ids, bw, tgt, weights.w_face * heat / n_samples)
    if weights.w_background > 0:
        if background_target is None:
            bg = pts
        else:
            bg = pts + background_target.data.astype(np.float64)[iy, ix]
        _add_fit_rows(builder, ids, bw, bg,
                      weights.w_background * (1.0 - heat) / n_samples)


def flipped_quads(mesh: MeshGrid) -> list:
    """(row, col) indices of quads whose deformed corners are no longer convex CCW."""
    cur = mesh.current
    a = cur[:-1, :-1]
    b = cur[:-1, 1:]
    c = cur[1:, 1:]
    d = cur[1:, :-1]

    def cross(u, v):
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

    ok = ((cross(b - a, d - a) > 0) & (cross(c - b, a - b) > 0)
          & (cross(d - c, b - c) > 0) & (cross(a - d, c - d) > 0))
    bad = np.argwhere(~ok)
    return [tuple(idx) for idx in bad]


def solve(mesh: MeshGrid, target: FlowField, heatmap: ImageBuffer,
          constraints: ConstraintSet, weights: EnergyWeights = EnergyWeights(),
          iters: int = 5, background_target: FlowField | None = None,
          cg_rtol: float = CG_RTOL, cg_maxiter: int = CG_MAXITER) -> SolveResult:
    """Deform the mesh toward the target field under all energy terms.

    The face term pulls samples toward ``p + target(p)`` weighted by the
    heatmap; the background term pulls toward ``p + background_target(p)``
    (rest positions when None) weighted by ``1 - heatmap``.  Targets are
    therefore forward vertex motion; derive them from a backward sampling
    flow with ``flow.invert_flow`` so that ``mesh_to_flow`` of the solution
    reproduces that flow.  Line terms are re-linearized against the previous
    iterate each outer iteration, so the reported energies are non-increasing.
    """
    if iters < 1:
        raise ValueError("need at least one outer iteration")
    n_unknowns = 2 * mesh.rows * mesh.cols
    x = mesh.current.reshape(-1).astype(np.float64).copy()

    def build(at: np.ndarray):
        return assemble_system(mesh, target, heatmap, constraints, weights,
                               background_target=background_target,
                               linearize_at=at.reshape(mesh.rows, mesh.cols, 2))

    a_mat, b_vec = build(x)
    energies = [float(np.sum((a_mat @ x - b_vec) ** 2))]
    cg_counts = []

    for _ in range(iters):
        ata = (a_mat.T @ a_mat).tocsr()
        # Solve for the update relative to the warm start so the relative
        # residual tolerance is measured against the actual pull, not against
        # absolute pixel coordinates.
        rhs = a_mat.T @ (b_vec - a_mat @ x)
        scale = float(np.linalg.norm(a_mat.T @ b_vec))
        if float(np.linalg.norm(rhs)) <= 1e-12 * max(1.0, scale):
            cg_counts.append(0)
            a_mat, b_vec = build(x)
            energies.append(float(np.sum((a_mat @ x - b_vec) ** 2)))
            continue
        diag = ata.diagonal().copy()
        diag[diag <= 0] = 1.0
        precond = LinearOperator((n_unknowns, n_unknowns),
                                 matvec=lambda r, d=diag: r / d)
        count = [0]

        def tick(_xk, count=count):
            count[0] += 1

        delta, info = sparse_cg(ata, rhs, rtol=cg_rtol, atol=0.0,
                                maxiter=cg_maxiter, M=precond, callback=tick)
        if info != 0:
            raise SolverDiverged(f"conjugate gradient returned info={info}")
        x = x + delta
        cg_counts.append(count[0])
        a_mat, b_vec = build(x)  # refit line terms around the new iterate
        energies.append(float(np.sum((a_mat @ x - b_vec) ** 2)))

    solved = mesh.with_current(x.reshape(mesh.rows, mesh.cols, 2))
    return SolveResult(mesh=solved, energies=energies,
                       flipped_quads=flipped_quads(solved),
                       cg_iterations=cg_counts)


def _invert_in_cells(current: np.ndarray, ci: np.ndarray, cj: np.ndarray,
                     qx: np.ndarray, qy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Newton inverse-bilinear for each point inside its assigned deformed quad."""
    p00 = current[ci, cj]
    p01 = current[ci, cj + 1]
    p10 = current[ci + 1, cj]
    p11 = current[ci + 1, cj + 1]
    a = p00
    b = p01 - p00
    c = p10 - p00
    d = p11 - p01 - p10 + p00

    s = np.full(qx.shape, 0.5)
    t = np.full(qx.shape, 0.5)
    for _ in range(10):
        fx = a[..., 0] + b[..., 0] * s + c[..., 0] * t + d[..., 0] * s * t - qx
        fy = a[..., 1] + b[..., 1] * s + c[..., 1] * t + d[..., 1] * s * t - qy
        j00 = b[..., 0] + d[..., 0] * t
        j01 = c[..., 0] + d[..., 0] * s
        j10 = b[..., 1] + d[..., 1] * t
        j11 = c[..., 1] + d[..., 1] * s
        det = j00 * j11 - j01 * j10
        det = np.where(np.abs(det) < 1e-12, 1e-12, det)
        s = s + (-fx * j11 + fy * j01) / det
        t = t + (fx * j10 - fy * j00) / det
    return s, t


def mesh_to_flow(mesh: MeshGrid, out_w: int, out_h: int) -> FlowField:
    """Backward flow reproducing the mesh deformation: warp(img, flow) == deformed img.

    Each output pixel is located inside its containing deformed quad (walking
    outward from its rest cell), then displaced back to the rest position.
    """
    bad = flipped_quads(mesh)
    if bad:
        raise FlippedQuad(f"{len(bad)} inverted quads, first at {bad[0]}")
    rest = mesh.rest
    if not (np.isclose(rest[0, 0, 0], 0.0) and np.isclose(rest[0, 0, 1], 0.0)
            and np.isclose(rest[-1, -1, 0], out_w - 1.0)
            and np.isclose(rest[-1, -1, 1], out_h - 1.0)):
        raise ValueError("mesh rest grid does not cover the requested raster")

    rows, cols = mesh.rows, mesh.cols
    xs = rest[0, :, 0]
    ys = rest[:, 0, 1]
    cw = xs[1] - xs[0]
    ch = ys[1] - ys[0]

    gx, gy = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    qx = gx.reshape(-1)
    qy = gy.reshape(-1)
    cj = np.clip((qx / cw).astype(np.intp), 0, cols - 2)
    ci = np.clip((qy / ch).astype(np.intp), 0, rows - 2)

    s = t = None
    for _ in range(12):
        s, t = _invert_in_cells(mesh.current, ci, cj, qx, qy)
        move_l = (s < -1e-9) & (cj > 0)
        move_r = (s > 1 + 1e-9) & (cj < cols - 2)
        move_u = (t < -1e-9) & (ci > 0)
        move_d = (t > 1 + 1e-9) & (ci < rows - 2)
        if not (move_l.any() or move_r.any() or move_u.any() or move_d.any()):
            break
        cj = cj - move_l.astype(np.intp) + move_r.astype(np.intp)
        ci = ci - move_u.astype(np.intp) + move_d.astype(np.intp)

    # rest grid is uniform, so the rest position is affine in (s, t); points
    # in border slivers extrapolate continuously.
    rest_x = xs[cj] + s * cw
    rest_y = ys[ci] + t * ch
    flow = np.stack([(rest_x - qx).reshape(out_h, out_w),
                     (rest_y - qy).reshape(out_h, out_w)], axis=-1)
    return FlowField(flow.astype(np.float32))


def build_target_flow(cam: CameraModel, faces: AnnotationSet, out_w: int,
                      out_h: int) -> tuple[FlowField, ImageBuffer]:
    """Blend of perspective and stereographic flows weighted by the face heatmap."""
    heat = face_heatmap(faces, out_w, out_h)
    persp = perspective_undistort_flow(cam, out_w, out_h)
    stereo = stereographic_flow(cam, out_w, out_h)
    return blend_flows(persp, stereo, heat), heat


def face_residual_target(cam: CameraModel, faces: AnnotationSet, out_w: int,
                         out_h: int) -> tuple[FlowField, ImageBuffer]:
    """Stage-2 target on an already-rectilinear frame: stereographic pull on
    faces, zero elsewhere."""
    heat = face_heatmap(faces, out_w, out_h)
    stereo = stereographic_flow(cam, out_w, out_h)
    return blend_flows(zero_flow(out_w, out_h), stereo, heat), heat
