// Payload shapes of the widewarp session service. Field names mirror the
// server JSON exactly; the editor never re-derives any of this locally.

export interface MeshJson {
  rows: number;
  cols: number;
  rest: number[][][];     // [row][col][x, y]
  current: number[][][];
}

export interface PointConstraintJson {
  anchor: [number, number];
  target: [number, number];
  weight: number;
}

export interface ConstraintsJson {
  point_constraints: PointConstraintJson[];
  line_constraints: number[][][];
}

export interface WeightsJson {
  w_face: number;
  w_background: number;
  w_line: number;
  w_regularity: number;
  w_boundary: number;
}

export interface SolveDiagnostics {
  energies: number[];
  flipped_quads: number[][];
  cg_iterations: number[];
}

export interface SessionState {
  id: string;
  width: number;
  height: number;
  mesh: MeshJson;
  constraints: ConstraintsJson;
  weights: WeightsJson;
  solving: boolean;
  history_depth: number;
  diagnostics: SolveDiagnostics | null;
}

export interface CreateSessionResponse {
  id: string;
  mesh: MeshJson;
  heatmap: { width: number; height: number; max: number };
}

export interface SolveResponse extends SolveDiagnostics {
  mesh: MeshJson;
}

export interface ExportResponse {
  corr_flow: string;   // base64 PFLO
  corrected: string;   // base64 PNG
}

export interface ConstraintPatch {
  add?: {
    points?: PointConstraintJson[];
    lines?: number[][][];
  };
  remove?: {
    points?: number[];
    lines?: number[];
  };
}

export type PreviewSource = "original" | "corrected";
