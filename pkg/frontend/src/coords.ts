/**
 * Pixel/data coordinate mapping for the heatmap canvas.
 *
 * The bare raster from the service has one PNG pixel per data pixel with the
 * first data row at the bottom, so the y mapping flips: data delta grows
 * upward while canvas y grows downward. Zoom and pan compose on top of the
 * base fit-to-canvas transform; both directions are exact algebraic
 * inverses, so screen -> data -> screen is the identity at any zoom.
 */

import type { AxisDescriptor } from "./types.js";

export interface View {
  zoom: number;
  panX: number; // canvas px offset applied after scaling
  panY: number;
}

export class CoordMap {
  readonly xAxis: AxisDescriptor;
  readonly yAxis: AxisDescriptor;
  readonly canvasWidth: number;
  readonly canvasHeight: number;
  view: View;

  constructor(xAxis: AxisDescriptor, yAxis: AxisDescriptor,
              canvasWidth: number, canvasHeight: number) {
    this.xAxis = xAxis;
    this.yAxis = yAxis;
    this.canvasWidth = canvasWidth;
    this.canvasHeight = canvasHeight;
    this.view = { zoom: 1, panX: 0, panY: 0 };
  }

  /** Canvas pixels per data pixel at zoom 1. */
  get cellWidth(): number {
    return this.canvasWidth / this.xAxis.count;
  }

  get cellHeight(): number {
    return this.canvasHeight / this.yAxis.count;
  }

  /** Fractional data-pixel column for a data x value (0 at first center). */
  columnOf(x: number): number {
    return (x - this.xAxis.start) / this.xAxis.step;
  }

  rowOf(y: number): number {
    return (y - this.yAxis.start) / this.yAxis.step;
  }

  xOfColumn(column: number): number {
    return this.xAxis.start + column * this.xAxis.step;
  }

  yOfRow(row: number): number {
    return this.yAxis.start + row * this.yAxis.step;
  }

  dataToPixel(x: number, y: number): { px: number; py: number } {
    const { zoom, panX, panY } = this.view;
    const u = this.columnOf(x) + 0.5; // raster-centered
    const v = this.rowOf(y) + 0.5;
    return {
      px: u * this.cellWidth * zoom + panX,
      py: this.canvasHeight * zoom - v * this.cellHeight * zoom + panY,
    };
  }

  pixelToData(px: number, py: number): { x: number; y: number } {
    const { zoom, panX, panY } = this.view;
    const u = (px - panX) / (this.cellWidth * zoom) - 0.5;
    const v = (this.canvasHeight * zoom - (py - panY)) / (this.cellHeight * zoom) - 0.5;
    return { x: this.xOfColumn(u), y: this.yOfRow(v) };
  }

  /** Zoom about a fixed canvas point so the data under the cursor stays put. */
  zoomAbout(factor: number, px: number, py: number): void {
    const anchor = this.pixelToData(px, py);
    this.view.zoom *= factor;
    const moved = this.dataToPixel(anchor.x, anchor.y);
    this.view.panX += px - moved.px;
    this.view.panY += py - moved.py;
  }

  pan(dx: number, dy: number): void {
    this.view.panX += dx;
    this.view.panY += dy;
  }

  reset(): void {
    this.view = { zoom: 1, panX: 0, panY: 0 };
  }

  /** Data extents of the drawn raster (pixel-edge to pixel-edge). */
  extents(): { x: [number, number]; y: [number, number] } {
    const half = 0.5;
    const xs: [number, number] = [this.xOfColumn(-half), this.xOfColumn(this.xAxis.count - 1 + half)];
    const ys: [number, number] = [this.yOfRow(-half), this.yOfRow(this.yAxis.count - 1 + half)];
    return { x: xs, y: ys };
  }
}
