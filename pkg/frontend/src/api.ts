/** Thin typed client over the control service's HTTP API. */

import type {
  ApplyResult,
  ExperienceEntry,
  Proposal,
  SceneDoc,
  ServiceConfigDoc,
  ServiceError,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error implements ServiceError {
  status: number;
  stage?: string;

  constructor(status: number, message: string, stage?: string) {
    super(message);
    this.status = status;
    this.stage = stage;
  }
}

export class ServiceClient {
  private base: string;
  private fetchFn: FetchLike;

  constructor(base = "", fetchFn: FetchLike = (u, i) => fetch(u, i)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    let payload: any = null;
    try {
      payload = await response.json();
    } catch {
      /* non-JSON error body */
    }
    if (!response.ok) {
      const message =
        payload?.message ?? payload?.error ?? `request failed with status ${response.status}`;
      throw new ApiError(response.status, message, payload?.stage);
    }
    return payload as T;
  }

  getScene(): Promise<SceneDoc> {
    return this.request("GET", "/scene");
  }

  propose(text: string, mode: string): Promise<Proposal> {
    return this.request("POST", "/instruction", { text, mode });
  }

  apply(): Promise<ApplyResult> {
    return this.request("POST", "/apply");
  }

  reject(): Promise<{ ok: boolean }> {
    return this.request("POST", "/reject");
  }

  acceptExperience(instruction: string): Promise<{ id: string }> {
    return this.request("POST", "/experience/accept", { instruction });
  }

  async getExperiences(): Promise<ExperienceEntry[]> {
    const body = await this.request<{ experiences: ExperienceEntry[] }>("GET", "/experiences");
    return body.experiences;
  }

  reset(fixture: string): Promise<SceneDoc> {
    return this.request("POST", "/reset", { scene_fixture: fixture });
  }

  getConfig(): Promise<ServiceConfigDoc> {
    return this.request("GET", "/config");
  }
}
