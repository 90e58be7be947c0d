import { SessionApi, base64ToBytes } from "./api";
import {
  applyServerState,
  beginSolve,
  canEdit,
  canExport,
  canUndo,
  clearPendingLine,
  describeEnergy,
  failSolve,
  initialEditorState,
  pendingLineIsValid,
  pushPendingPoint,
  selectTool,
  setPreviewMode,
  type EditorState,
  type PreviewMode,
  type Tool,
} from "./editor-state";
import { render, type PreviewBitmaps } from "./canvas-renderer";
import {
  clampToImage,
  dragToPatch,
  fitView,
  lineToPatch,
  panView,
  screenToImage,
  type PanGesture,
  type ViewTransform,
} from "./tools";

const api = new SessionApi("");
let state: EditorState = initialEditorState();
let view: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };
const bitmaps: PreviewBitmaps = { original: null, corrected: null };

const canvas = document.getElementById("editor") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const status = document.getElementById("status")!;
const solveButton = document.getElementById("solve") as HTMLButtonElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;
const fileInput = document.getElementById("file") as HTMLInputElement;

function update(next: EditorState): void {
  state = next;
  solveButton.disabled = !canEdit(state);
  undoButton.disabled = !canUndo(state);
  exportButton.disabled = !canExport(state);
  status.textContent = `${state.statusMessage} | ${describeEnergy(state)}`;
  render(ctx, state, bitmaps, view);
}

async function refreshPreviews(): Promise<void> {
  if (!state.sessionId) {
    return;
  }
  const [orig, corr] = await Promise.all([
    api.fetchPreview(state.sessionId, 1.0, "original"),
    api.fetchPreview(state.sessionId, 1.0, "corrected"),
  ]);
  bitmaps.original = await createImageBitmap(orig);
  bitmaps.corrected = await createImageBitmap(corr);
  render(ctx, state, bitmaps, view);
}

async function reconnectOrCreate(image: Blob): Promise<void> {
  const created = await api.createSession(image);
  const server = await api.getState(created.id);
  view = fitView(server.width, server.height, canvas.width, canvas.height);
  update(applyServerState(state, server));
  await refreshPreviews();
}

async function solveNow(): Promise<void> {
  if (!state.sessionId || state.solving) {
    return;
  }
  update(beginSolve(state));
  try {
    await api.solve(state.sessionId);
    const server = await api.getState(state.sessionId);
    update(applyServerState(state, server));
    await refreshPreviews();
  } catch (err) {
    update(failSolve(state, `solve failed: ${err}`));
  }
}

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (file) {
    void reconnectOrCreate(file);
  }
});

for (const tool of ["drag-handle", "line-draw", "pan"] as Tool[]) {
  document.getElementById(`tool-${tool}`)?.addEventListener("click", () => {
    update(selectTool(state, tool));
  });
}

for (const mode of ["original", "projected", "corrected", "split"] as PreviewMode[]) {
  document.getElementById(`mode-${mode}`)?.addEventListener("click", () => {
    update(setPreviewMode(state, mode));
  });
}

let dragAnchor: [number, number] | null = null;
let pan: PanGesture | null = null;

canvas.addEventListener("pointerdown", (ev) => {
  if (!state.server) {
    return;
  }
  const pt = screenToImage(view, ev.offsetX, ev.offsetY);
  const clamped = clampToImage(pt, state.server.width, state.server.height);
  if (state.tool === "pan") {
    pan = {
      startX: ev.offsetX,
      startY: ev.offsetY,
      baseOffsetX: view.offsetX,
      baseOffsetY: view.offsetY,
    };
  } else if (state.tool === "drag-handle" && canEdit(state)) {
    dragAnchor = clamped;
  } else if (state.tool === "line-draw" && canEdit(state)) {
    update(pushPendingPoint(state, clamped));
  }
});

canvas.addEventListener("pointermove", (ev) => {
  if (pan) {
    view = panView(view, pan, ev.offsetX, ev.offsetY);
    render(ctx, state, bitmaps, view);
  }
});

canvas.addEventListener("pointerup", async (ev) => {
  if (pan) {
    pan = null;
    return;
  }
  if (dragAnchor && state.sessionId && state.server) {
    const target = clampToImage(
      screenToImage(view, ev.offsetX, ev.offsetY),
      state.server.width,
      state.server.height,
    );
    const patch = dragToPatch({ anchor: dragAnchor, target });
    dragAnchor = null;
    if (patch) {
      // dragging posts the constraint and immediately requests a solve
      await api.patchConstraints(state.sessionId, patch);
      await solveNow();
    }
  }
});

canvas.addEventListener("dblclick", async () => {
  // finish the in-progress line; single points never reach the server
  if (state.tool === "line-draw" && state.sessionId) {
    if (!pendingLineIsValid(state)) {
      update({ ...clearPendingLine(state), statusMessage: "line needs 2+ points" });
      return;
    }
    const patch = lineToPatch(state.pendingLine);
    update(clearPendingLine(state));
    if (patch) {
      await api.patchConstraints(state.sessionId, patch);
      await solveNow();
    }
  }
});

solveButton.addEventListener("click", () => void solveNow());

undoButton.addEventListener("click", async () => {
  if (state.sessionId && canUndo(state)) {
    const server = await api.undo(state.sessionId);
    update(applyServerState(state, server));
    await refreshPreviews();
  }
});

exportButton.addEventListener("click", async () => {
  if (!state.sessionId || !canExport(state)) {
    return;
  }
  const exported = await api.exportSession(state.sessionId);
  for (const [name, b64, mime] of [
    ["corrected.png", exported.corrected, "image/png"],
    ["corr_flow.pflo", exported.corr_flow, "application/octet-stream"],
  ] as const) {
    const blob = new Blob([base64ToBytes(b64) as BlobPart], { type: mime });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = name;
    a.click();
    URL.revokeObjectURL(a.href);
  }
});

update(state);
