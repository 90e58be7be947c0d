import type {
  ConstraintPatch,
  CreateSessionResponse,
  ExportResponse,
  PreviewSource,
  SessionState,
  SolveResponse,
  WeightsJson,
} from "./types";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(`${status}: ${message}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    const text = await response.text();
    throw new ApiError(response.status, text);
  }
  return (await response.json()) as T;
}

export class SessionApi {
  constructor(private baseUrl: string) {}

  async createSession(
    image: Blob,
    camera?: object,
    annotations?: object,
  ): Promise<CreateSessionResponse> {
    const form = new FormData();
    form.append("image", image, "image.png");
    if (camera !== undefined) {
      form.append("camera_json", JSON.stringify(camera));
    }
    if (annotations !== undefined) {
      form.append("annotations_json", JSON.stringify(annotations));
    }
    return request<CreateSessionResponse>(`${this.baseUrl}/session`, {
      method: "POST",
      body: form,
    });
  }

  async getState(sessionId: string): Promise<SessionState> {
    return request<SessionState>(`${this.baseUrl}/session/${sessionId}/state`);
  }

  async patchConstraints(
    sessionId: string,
    patch: ConstraintPatch,
  ): Promise<SessionState> {
    return request<SessionState>(
      `${this.baseUrl}/session/${sessionId}/constraints`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(patch),
      },
    );
  }

  async solve(
    sessionId: string,
    options: { iters?: number; weights?: WeightsJson } = {},
  ): Promise<SolveResponse> {
    return request<SolveResponse>(`${this.baseUrl}/session/${sessionId}/solve`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(options),
    });
  }

  async undo(sessionId: string): Promise<SessionState> {
    return request<SessionState>(`${this.baseUrl}/session/${sessionId}/undo`, {
      method: "POST",
    });
  }

  previewUrl(sessionId: string, scale: number, source: PreviewSource): string {
    return `${this.baseUrl}/session/${sessionId}/preview?scale=${scale}&source=${source}`;
  }

  async fetchPreview(
    sessionId: string,
    scale: number,
    source: PreviewSource,
  ): Promise<Blob> {
    const response = await fetch(this.previewUrl(sessionId, scale, source));
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return response.blob();
  }

  async exportSession(sessionId: string): Promise<ExportResponse> {
    return request<ExportResponse>(`${this.baseUrl}/session/${sessionId}/export`);
  }

  async deleteSession(sessionId: string): Promise<void> {
    await request<{ deleted: string }>(`${this.baseUrl}/session/${sessionId}`, {
      method: "DELETE",
    });
  }
}

export function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) {
      out[i] = bin.charCodeAt(i);
    }
    return out;
  }
  return new Uint8Array(Buffer.from(b64, "base64"));
}
