/**
 * Client-side seed curve store.
 *
 * Curves live here until the operator submits a fit; vertices must keep
 * strictly increasing x, at most one curve may bind to a given branch, and
 * export/import is lossless against the daxs-seeds file format.
 */

import type { BranchRef, SeedCurveData, SeedsDocument } from "./types.js";
import { sameBranch } from "./types.js";

const COLORS = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4",
                "#46f0f0", "#f032e6", "#bcf60c", "#008080", "#9a6324"];

export interface CanvasCurve {
  trackId: string;
  branch: BranchRef | null;
  points: [number, number][];
  color: string;
}

export type VertexResult =
  | { ok: true }
  | { ok: false; reason: string };

export class CurveStore {
  private curves = new Map<string, CanvasCurve>();
  private counter = 0;

  list(): CanvasCurve[] {
    return [...this.curves.values()];
  }

  get(trackId: string): CanvasCurve | undefined {
    return this.curves.get(trackId);
  }

  newCurve(trackId?: string): CanvasCurve {
    let id = trackId;
    if (id === undefined) {
      do {
        id = `curve-${this.counter++}`;
      } while (this.curves.has(id));
    } else if (this.curves.has(id)) {
      throw new Error(`track id ${id} already exists`);
    }
    const curve: CanvasCurve = {
      trackId: id,
      branch: null,
      points: [],
      color: COLORS[this.curves.size % COLORS.length],
    };
    this.curves.set(id, curve);
    return curve;
  }

  deleteCurve(trackId: string): void {
    this.curves.delete(trackId);
  }

  /** Append a vertex; rejected unless its x exceeds the last vertex's x. */
  addVertex(trackId: string, x: number, delta: number): VertexResult {
    const curve = this.curves.get(trackId);
    if (!curve) return { ok: false, reason: `unknown curve ${trackId}` };
    if (!Number.isFinite(x) || !Number.isFinite(delta)) {
      return { ok: false, reason: "vertex must be finite" };
    }
    const last = curve.points[curve.points.length - 1];
    if (last && x <= last[0]) {
      return { ok: false, reason: "x must be strictly increasing along a curve" };
    }
    curve.points.push([x, delta]);
    return { ok: true };
  }

  removeLastVertex(trackId: string): void {
    this.curves.get(trackId)?.points.pop();
  }

  /** Bind a curve to a branch; a branch accepts at most one curve. */
  bindBranch(trackId: string, branch: BranchRef | null): VertexResult {
    const curve = this.curves.get(trackId);
    if (!curve) return { ok: false, reason: `unknown curve ${trackId}` };
    if (branch !== null) {
      for (const other of this.curves.values()) {
        if (other.trackId !== trackId && sameBranch(other.branch, branch)) {
          return {
            ok: false,
            reason: `branch already bound to curve ${other.trackId}`,
          };
        }
      }
    }
    curve.branch = branch;
    return { ok: true };
  }

  /** Export to the daxs-seeds document; every curve needs >= 2 vertices. */
  export(): SeedsDocument {
    const curves: SeedCurveData[] = [];
    for (const curve of this.curves.values()) {
      if (curve.points.length < 2) {
        throw new Error(`curve ${curve.trackId} needs at least 2 vertices`);
      }
      curves.push({
        track_id: curve.trackId,
        branch: curve.branch ? { ...curve.branch } : null,
        points: curve.points.map((p) => [p[0], p[1]]),
      });
    }
    return { format: "daxs-seeds", version: 1, curves };
  }

  exportJson(): string {
    return JSON.stringify(this.export(), null, 2);
  }

  /** Replace the store's contents with an imported document. */
  import(doc: SeedsDocument): void {
    if (doc.format !== "daxs-seeds") {
      throw new Error(`not a daxs-seeds document (format ${JSON.stringify(doc.format)})`);
    }
    if (doc.version !== 1) {
      throw new Error(`unsupported daxs-seeds version ${doc.version}`);
    }
    const next = new Map<string, CanvasCurve>();
    for (const [i, entry] of doc.curves.entries()) {
      if (next.has(entry.track_id)) {
        throw new Error(`duplicate track id ${entry.track_id}`);
      }
      if (entry.points.length < 2) {
        throw new Error(`curve ${entry.track_id} has fewer than 2 vertices`);
      }
      for (let k = 1; k < entry.points.length; k++) {
        if (entry.points[k][0] <= entry.points[k - 1][0]) {
          throw new Error(`curve ${entry.track_id} x values must be strictly increasing`);
        }
      }
      if (entry.branch !== null) {
        for (const other of next.values()) {
          if (sameBranch(other.branch, entry.branch)) {
            throw new Error(
              `curves ${other.trackId} and ${entry.track_id} bind the same branch`);
          }
        }
      }
      next.set(entry.track_id, {
        trackId: entry.track_id,
        branch: entry.branch ? { ...entry.branch } : null,
        points: entry.points.map((p) => [p[0], p[1]]),
        color: COLORS[i % COLORS.length],
      });
    }
    this.curves = next;
  }

  importJson(text: string): void {
    this.import(JSON.parse(text) as SeedsDocument);
  }
}
