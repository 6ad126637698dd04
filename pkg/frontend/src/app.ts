/**
 * Headless application core: all state transitions of the annotation tool,
 * independent of the DOM so they are directly testable. The rendering layer
 * (main.ts) subscribes to change events and draws.
 */

import { pollJob, ServiceClient, ServiceError } from "./client.js";
import { CoordMap } from "./coords.js";
import { CurveStore, VertexResult } from "./seeds.js";
import type {
  FitResultDocument,
  ImageDocument,
  JobRecord,
  OverlayCurve,
} from "./types.js";

export type Phase = "empty" | "ready" | "submitting" | "polling" | "done" | "failed";

export interface AppState {
  phase: Phase;
  imageId: string | null;
  image: ImageDocument | null;
  activeCurve: string | null;
  jobId: string | null;
  jobStatus: string | null;
  overlay: OverlayCurve[] | null;
  fitResult: FitResultDocument | null;
  error: string | null;
  notice: string | null;
}

export class AnnotationApp {
  readonly client: ServiceClient;
  readonly curves = new CurveStore();
  coords: CoordMap | null = null;
  state: AppState = {
    phase: "empty",
    imageId: null,
    image: null,
    activeCurve: null,
    jobId: null,
    jobStatus: null,
    overlay: null,
    fitResult: null,
    error: null,
    notice: null,
  };

  private listeners: (() => void)[] = [];
  private pollAbort: AbortController | null = null;

  constructor(client: ServiceClient) {
    this.client = client;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  private setError(error: unknown): void {
    this.state.error = error instanceof ServiceError
      ? error.message
      : error instanceof Error
        ? `service unreachable: ${error.message}`
        : String(error);
    this.emit();
  }

  clearError(): void {
    this.state.error = null;
    this.emit();
  }

  /** Fetch the image document and prepare the coordinate map. */
  async loadImage(imageId: string, canvasWidth: number,
                  canvasHeight: number): Promise<boolean> {
    try {
      const image = await this.client.getImage(imageId);
      this.state.image = image;
      this.state.imageId = imageId;
      this.state.phase = "ready";
      this.state.overlay = null;
      this.state.fitResult = null;
      this.state.error = null;
      this.coords = new CoordMap(image.x_axis, image.y_axis,
                                 canvasWidth, canvasHeight);
      this.emit();
      return true;
    } catch (error) {
      this.setError(error);
      return false;
    }
  }

  startCurve(): string {
    const curve = this.curves.newCurve();
    this.state.activeCurve = curve.trackId;
    this.emit();
    return curve.trackId;
  }

  /** Canvas click while drawing: convert to data coordinates and append. */
  clickAt(px: number, py: number): VertexResult {
    if (!this.coords || this.state.activeCurve === null) {
      return { ok: false, reason: "no active curve" };
    }
    const { x, y } = this.coords.pixelToData(px, py);
    const result = this.curves.addVertex(this.state.activeCurve, x, y);
    if (result.ok) {
      this.state.notice = null;
    } else {
      this.state.notice = result.reason; // surfaced as the visual cue
    }
    this.emit();
    return result;
  }

  finishCurve(): void {
    this.state.activeCurve = null;
    this.emit();
  }

  exportSeeds(): string {
    return this.curves.exportJson();
  }

  importSeeds(text: string): boolean {
    try {
      this.curves.importJson(text);
      this.state.notice = null;
      this.state.error = null;
      this.emit();
      return true;
    } catch (error) {
      this.setError(error);
      return false;
    }
  }

  /** Submit a fit job and poll it to completion. */
  async submitFit(config: Record<string, unknown>,
                  pollIntervalMs = 500): Promise<JobRecord | null> {
    if (this.state.imageId === null) {
      this.setError(new Error("no image loaded"));
      return null;
    }
    let seeds;
    try {
      seeds = this.curves.export();
    } catch (error) {
      this.setError(error);
      return null;
    }
    this.state.phase = "submitting";
    this.state.error = null;
    this.emit();
    try {
      const jobId = await this.client.submitJob({
        kind: "fit", image_id: this.state.imageId, seeds, config,
      });
      this.state.jobId = jobId;
      this.state.phase = "polling";
      this.state.jobStatus = "queued";
      this.emit();

      this.pollAbort = new AbortController();
      const record = await pollJob(this.client, jobId, {
        intervalMs: pollIntervalMs,
        signal: this.pollAbort.signal,
        onUpdate: (update) => {
          this.state.jobStatus = update.status;
          this.emit();
        },
      });
      if (record.status === "done") {
        this.state.fitResult = record.result_document ?? null;
        this.state.overlay = await this.client.getOverlay(jobId);
        this.state.phase = "done";
      } else {
        this.state.phase = "failed";
        this.state.error = record.error ?? "fit job failed";
      }
      this.emit();
      return record;
    } catch (error) {
      if (error instanceof DOMException && error.name === "AbortError") {
        // cancelled: back to a consistent editing state
        this.state.phase = "ready";
        this.state.jobId = null;
        this.state.jobStatus = null;
        this.emit();
        return null;
      }
      this.state.phase = this.state.image ? "ready" : "empty";
      this.setError(error);
      return null;
    } finally {
      this.pollAbort = null;
    }
  }

  cancelPoll(): void {
    this.pollAbort?.abort();
  }
}
