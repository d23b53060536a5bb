// Thin typed client over the service HTTP API. The console never touches
// the device backend directly; every mutation goes through these endpoints.

import type {
  AnnotationsPayload,
  ApiError,
  ActionPayload,
  CommandOutcome,
  DeviceEntry,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    public payload: ApiError,
    public status: number,
  ) {
    super(`${payload.error}: ${payload.detail}`);
  }

  get kind(): string {
    return this.payload.error;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await response.json();
    if (!response.ok) {
      throw new ServiceError(payload as ApiError, response.status);
    }
    return payload as T;
  }

  createSession(): Promise<{ session_id: string }> {
    return this.request("POST", "/api/sessions");
  }

  setInventory(sessionId: string, text: string): Promise<{ inventory: Record<string, number> }> {
    return this.request("POST", `/api/sessions/${sessionId}/inventory`, { text });
  }

  getAnnotations(sessionId: string): Promise<AnnotationsPayload> {
    return this.request("GET", `/api/sessions/${sessionId}/annotations`);
  }

  putAnnotations(sessionId: string, payload: AnnotationsPayload): Promise<AnnotationsPayload> {
    return this.request("PUT", `/api/sessions/${sessionId}/annotations`, payload);
  }

  refreshAnnotations(sessionId: string): Promise<AnnotationsPayload> {
    return this.request("POST", `/api/sessions/${sessionId}/annotations/refresh`);
  }

  putBindings(sessionId: string, bindings: Record<string, string>): Promise<{ bindings: Record<string, string> }> {
    return this.request("PUT", `/api/sessions/${sessionId}/bindings`, { bindings });
  }

  sendCommand(sessionId: string, text: string, dryRun = false): Promise<CommandOutcome> {
    return this.request("POST", `/api/sessions/${sessionId}/command`, {
      text,
      mode: "deterministic",
      dry_run: dryRun,
    });
  }

  sendDirectCommand(sessionId: string, uuid: string, action: ActionPayload): Promise<CommandOutcome> {
    return this.request("POST", `/api/sessions/${sessionId}/command`, { uuid, action });
  }

  listDevices(): Promise<DeviceEntry[]> {
    return this.request("GET", "/api/devices");
  }

  annotatedImageUrl(sessionId: string): string {
    return `${this.baseUrl}/static/${sessionId}/annotated.png`;
  }

  async uploadImage(sessionId: string, blob: Blob): Promise<{ records: unknown[]; annotated_url: string }> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/sessions/${sessionId}/image`, {
      method: "POST",
      headers: { "Content-Type": "application/octet-stream" },
      body: blob,
    });
    const payload = await response.json();
    if (!response.ok) throw new ServiceError(payload as ApiError, response.status);
    return payload;
  }
}
