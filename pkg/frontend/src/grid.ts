// Occupancy grid model and the screen<->world viewport transform.

import type { GridDoc } from "./types.js";

export type CellState = "free" | "occupied" | "unknown";

const CHAR_STATE: Record<string, CellState> = {
  ".": "free",
  "#": "occupied",
  "?": "unknown",
};

export class GridModel {
  readonly originX: number;
  readonly originY: number;
  readonly resolution: number;
  readonly width: number;
  readonly height: number;
  private readonly cells: string;

  constructor(doc: GridDoc) {
    if (doc.cells.length !== doc.width * doc.height) {
      throw new Error("grid cells length does not match width*height");
    }
    this.originX = doc.origin[0];
    this.originY = doc.origin[1];
    this.resolution = doc.resolution;
    this.width = doc.width;
    this.height = doc.height;
    this.cells = doc.cells;
  }

  inBounds(ix: number, iy: number): boolean {
    return ix >= 0 && ix < this.width && iy >= 0 && iy < this.height;
  }

  // cells are row-major: index = iy*width + ix (same as the file format)
  state(ix: number, iy: number): CellState {
    if (!this.inBounds(ix, iy)) {
      throw new RangeError(`cell (${ix}, ${iy}) outside grid`);
    }
    const ch = this.cells[iy * this.width + ix];
    const state = CHAR_STATE[ch];
    if (!state) throw new Error(`unknown cell character ${ch}`);
    return state;
  }

  // mirrors the server: cell centers sit at origin + resolution * index
  worldToCell(wx: number, wy: number): [number, number] {
    const ix = Math.round((wx - this.originX) / this.resolution);
    const iy = Math.round((wy - this.originY) / this.resolution);
    if (!this.inBounds(ix, iy)) {
      throw new RangeError(`world (${wx}, ${wy}) outside grid`);
    }
    return [ix, iy];
  }

  cellToWorld(ix: number, iy: number): [number, number] {
    return [this.originX + this.resolution * ix, this.originY + this.resolution * iy];
  }

  isFreeWorld(wx: number, wy: number): boolean {
    try {
      const [ix, iy] = this.worldToCell(wx, wy);
      return this.state(ix, iy) === "free";
    } catch {
      return false;
    }
  }
}

/**
 * Pan/zoom transform between screen pixels and world meters.
 *
 * Pan is kept in whole pixels and the scale is a power of two, so the
 * screen->world->screen round trip is bit-exact for integer pixels
 * (power-of-two multiply/divide only shifts the exponent; integer adds
 * below 2^53 are exact).
 */
export class Viewport {
  panX: number; // screen x of world origin, whole pixels
  panY: number; // screen y of world origin, whole pixels
  scale: number; // pixels per meter, power of two

  constructor(panX = 0, panY = 0, scale = 64) {
    this.panX = Math.round(panX);
    this.panY = Math.round(panY);
    this.scale = scale;
  }

  screenToWorld(px: number, py: number): [number, number] {
    return [(px - this.panX) / this.scale, (this.panY - py) / this.scale];
  }

  worldToScreen(wx: number, wy: number): [number, number] {
    return [wx * this.scale + this.panX, this.panY - wy * this.scale];
  }

  panBy(dxPixels: number, dyPixels: number): void {
    this.panX += Math.round(dxPixels);
    this.panY += Math.round(dyPixels);
  }

  /** Zoom by a power-of-two step, keeping the world point under the cursor fixed
   * (up to the 1-pixel pan rounding that preserves exact round trips). */
  zoom(direction: 1 | -1, cursorX: number, cursorY: number): void {
    const next = direction > 0 ? this.scale * 2 : this.scale / 2;
    if (next < 1 || next > 4096) return;
    const [wx, wy] = this.screenToWorld(cursorX, cursorY);
    this.scale = next;
    this.panX = Math.round(cursorX - wx * next);
    this.panY = Math.round(cursorY + wy * next);
  }

  /** Fit a grid into a canvas, centered, at the largest power-of-two scale. */
  fit(grid: GridModel, canvasWidth: number, canvasHeight: number): void {
    const worldW = grid.width * grid.resolution;
    const worldH = grid.height * grid.resolution;
    let scale = 1;
    while (scale * 2 * worldW <= canvasWidth && scale * 2 * worldH <= canvasHeight && scale < 4096) {
      scale *= 2;
    }
    this.scale = scale;
    const centerX = grid.originX + worldW / 2;
    const centerY = grid.originY + worldH / 2;
    this.panX = Math.round(canvasWidth / 2 - centerX * scale);
    this.panY = Math.round(canvasHeight / 2 + centerY * scale);
  }
}
