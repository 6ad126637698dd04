/**
 * Overlay drawing geometry and the fitted-parameter table model. All numbers
 * come from service responses; nothing here analyzes image data.
 */

import type { CoordMap } from "./coords.js";
import type { FitResultDocument, OverlayCurve } from "./types.js";

export function overlayPath(curve: OverlayCurve, coords: CoordMap):
    { px: number; py: number }[] {
  return curve.points.map(([x, y]) => coords.dataToPixel(x, y));
}

export interface TableRow {
  name: string;
  value: number;
  stderr: number | null;
}

/**
 * Rows for the fitted-parameter table, values taken verbatim from the fit
 * result document (couplings and offsets first, then scale and offset).
 */
export function parameterTable(result: FitResultDocument): TableRow[] {
  const rows: TableRow[] = [];
  for (const name of Object.keys(result.couplings).sort()) {
    rows.push({ name, value: result.couplings[name],
                stderr: result.stderr[name] ?? null });
  }
  for (const name of Object.keys(result.offsets).sort()) {
    rows.push({ name, value: result.offsets[name],
                stderr: result.stderr[name] ?? null });
  }
  rows.push({ name: "zeeman", value: result.zeeman,
              stderr: result.stderr["zeeman"] ?? null });
  rows.push({ name: "s", value: result.s, stderr: result.stderr["s"] ?? null });
  rows.push({ name: "delta_offset", value: result.delta_offset,
              stderr: result.stderr["delta_offset"] ?? null });
  return rows;
}
