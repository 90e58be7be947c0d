// Pure editor state and its transitions. Everything displayable derives from
// the last SessionState the server sent, so reconnecting and re-fetching
// /state reproduces the identical editor.

import type { SessionState, SolveDiagnostics } from "./types";

export type Tool = "drag-handle" | "line-draw" | "pan";
export type PreviewMode = "original" | "projected" | "corrected" | "split";

export interface EditorState {
  sessionId: string | null;
  server: SessionState | null;       // last authoritative snapshot
  tool: Tool;
  previewMode: PreviewMode;
  pendingLine: [number, number][];   // line-draw points not yet posted
  solving: boolean;
  lastDiagnostics: SolveDiagnostics | null;
  statusMessage: string;
}

export function initialEditorState(): EditorState {
  return {
    sessionId: null,
    server: null,
    tool: "drag-handle",
    previewMode: "corrected",
    pendingLine: [],
    solving: false,
    lastDiagnostics: null,
    statusMessage: "no session",
  };
}

export function applyServerState(state: EditorState, server: SessionState): EditorState {
  return {
    ...state,
    sessionId: server.id,
    server,
    solving: server.solving,
    lastDiagnostics: server.diagnostics,
    statusMessage: server.solving ? "solving..." : "ready",
  };
}

export function selectTool(state: EditorState, tool: Tool): EditorState {
  return { ...state, tool, pendingLine: [] };
}

export function setPreviewMode(state: EditorState, mode: PreviewMode): EditorState {
  return { ...state, previewMode: mode };
}

export function beginSolve(state: EditorState): EditorState {
  return { ...state, solving: true, statusMessage: "solving..." };
}

export function failSolve(state: EditorState, message: string): EditorState {
  return { ...state, solving: false, statusMessage: message };
}

export function pushPendingPoint(state: EditorState, pt: [number, number]): EditorState {
  return { ...state, pendingLine: [...state.pendingLine, pt] };
}

export function clearPendingLine(state: EditorState): EditorState {
  return { ...state, pendingLine: [] };
}

// A pending line is postable once it has at least two points; single points
// are rejected client-side before any request goes out.
export function pendingLineIsValid(state: EditorState): boolean {
  return state.pendingLine.length >= 2;
}

export function canEdit(state: EditorState): boolean {
  return state.sessionId !== null && !state.solving;
}

// Export stays disabled while a solve is pending.
export function canExport(state: EditorState): boolean {
  return state.sessionId !== null && !state.solving;
}

export function canUndo(state: EditorState): boolean {
  return (
    state.sessionId !== null &&
    !state.solving &&
    (state.server?.history_depth ?? 0) > 0
  );
}

export function describeEnergy(state: EditorState): string {
  const energies = state.lastDiagnostics?.energies;
  if (!energies || energies.length === 0) {
    return "no solve yet";
  }
  const first = energies[0];
  const last = energies[energies.length - 1];
  return `energy ${first.toExponential(3)} -> ${last.toExponential(3)}`;
}
