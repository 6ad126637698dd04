/**
 * Thin client for the daxs service. All numbers shown in the UI originate
 * from these responses; the client never computes physics.
 */

import type { ImageDocument, JobRecord, OverlayCurve, SeedsDocument } from "./types.js";

export class ServiceError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, message: string, detail = "") {
    super(detail ? `${message}: ${detail}` : message);
    this.status = status;
    this.detail = detail;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function raise(response: Response): Promise<never> {
  let message = `HTTP ${response.status}`;
  let detail = "";
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    message = body.error ?? message;
    detail = body.detail ?? "";
  } catch {
    // non-JSON error body
  }
  throw new ServiceError(response.status, message, detail);
}

export interface JobSubmission {
  kind: "fit" | "sign-compare" | "align-average";
  image_id?: string;
  image_ids?: string[];
  seeds: SeedsDocument;
  config: Record<string, unknown>;
}

export class ServiceClient {
  readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) await raise(response);
    return response;
  }

  async uploadImage(document: string | object): Promise<string> {
    const body = typeof document === "string" ? document : JSON.stringify(document);
    const response = await this.request("/images", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
    return ((await response.json()) as { id: string }).id;
  }

  async getImage(imageId: string): Promise<ImageDocument> {
    const response = await this.request(`/images/${imageId}`);
    return (await response.json()) as ImageDocument;
  }

  imagePngUrl(imageId: string, bare = true): string {
    return `${this.baseUrl}/images/${imageId}/png${bare ? "?bare=1" : ""}`;
  }

  async submitJob(submission: JobSubmission): Promise<string> {
    const response = await this.request("/jobs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(submission),
    });
    return ((await response.json()) as { job_id: string }).job_id;
  }

  async getJob(jobId: string): Promise<JobRecord> {
    const response = await this.request(`/jobs/${jobId}`);
    return (await response.json()) as JobRecord;
  }

  async getOverlay(jobId: string): Promise<OverlayCurve[]> {
    const response = await this.request(`/fits/${jobId}/overlay`);
    return ((await response.json()) as { curves: OverlayCurve[] }).curves;
  }
}

export const MIN_POLL_INTERVAL_MS = 500;

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  signal?: AbortSignal;
  onUpdate?: (record: JobRecord) => void;
  sleep?: (ms: number, signal?: AbortSignal) => Promise<void>;
}

function defaultSleep(ms: number, signal?: AbortSignal): Promise<void> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => resolve(), ms);
    signal?.addEventListener("abort", () => {
      clearTimeout(timer);
      reject(new DOMException("poll aborted", "AbortError"));
    }, { once: true });
  });
}

/**
 * Poll a job until it finishes. The interval is clamped to >= 500 ms;
 * aborting rejects with an AbortError and stops all further requests.
 */
export async function pollJob(client: ServiceClient, jobId: string,
                              options: PollOptions = {}): Promise<JobRecord> {
  const interval = Math.max(options.intervalMs ?? MIN_POLL_INTERVAL_MS,
                            MIN_POLL_INTERVAL_MS);
  const sleep = options.sleep ?? defaultSleep;
  const deadline = options.timeoutMs === undefined
    ? undefined : Date.now() + options.timeoutMs;

  for (;;) {
    if (options.signal?.aborted) {
      throw new DOMException("poll aborted", "AbortError");
    }
    const record = await client.getJob(jobId);
    options.onUpdate?.(record);
    if (record.status === "done" || record.status === "failed") {
      return record;
    }
    if (deadline !== undefined && Date.now() >= deadline) {
      throw new Error(`job ${jobId} still ${record.status} after timeout`);
    }
    await sleep(interval, options.signal);
  }
}
