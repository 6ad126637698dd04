/** Wire types mirrored from the service's JSON documents. */

export interface AxisDescriptor {
  name: string;
  unit: string;
  start: number;
  step: number;
  count: number;
}

export interface ImageDocument {
  format: string;
  version: number;
  x_axis: AxisDescriptor;
  y_axis: AxisDescriptor;
  data: number[][];
}

export interface BranchRef {
  sector: "triplet" | "singlet";
  index: number;
  spin_z: number;
}

export interface SeedCurveData {
  track_id: string;
  branch: BranchRef | null;
  points: [number, number][];
}

export interface SeedsDocument {
  format: "daxs-seeds";
  version: 1;
  curves: SeedCurveData[];
}

export interface OverlayCurve {
  track_id: string;
  branch: BranchRef;
  points: [number, number][];
}

export interface JobRecord {
  job_id: string;
  kind: string;
  status: "queued" | "running" | "done" | "failed";
  error: string | null;
  result: string | null;
  result_document?: FitResultDocument;
}

export interface FitResultDocument {
  couplings: Record<string, number>;
  offsets: Record<string, number>;
  zeeman: number;
  s: number;
  delta_offset: number;
  residual_rms: number;
  stderr: Record<string, number | null>;
  converged: boolean;
  iterations: number;
  sign_class: string;
  residuals: Record<string, number[]>;
}

export function branchKey(branch: BranchRef): string {
  return branch.spin_z
    ? `${branch.sector}:${branch.index}:${branch.spin_z > 0 ? "+1" : "-1"}`
    : `${branch.sector}:${branch.index}`;
}

export function sameBranch(a: BranchRef | null, b: BranchRef | null): boolean {
  if (a === null || b === null) return false;
  return a.sector === b.sector && a.index === b.index && a.spin_z === b.spin_z;
}
