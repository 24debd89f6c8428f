import { describe, expect, it } from "vitest";

import { GridModel, Viewport } from "../src/grid.js";
import type { GridDoc } from "../src/types.js";

function smallGrid(): GridDoc {
  // 4x3, row-major: row iy=0 is ".#.?", iy=1 all free, iy=2 "...#"
  return {
    origin: [1.0, -2.0],
    resolution: 0.5,
    width: 4,
    height: 3,
    cells: ".#.?" + "...." + "...#",
  };
}

describe("GridModel", () => {
  it("indexes row-major cells", () => {
    const grid = new GridModel(smallGrid());
    expect(grid.state(0, 0)).toBe("free");
    expect(grid.state(1, 0)).toBe("occupied");
    expect(grid.state(3, 0)).toBe("unknown");
    expect(grid.state(3, 2)).toBe("occupied");
    expect(grid.state(2, 1)).toBe("free");
  });

  it("rejects mismatched cell text", () => {
    expect(() => new GridModel({ ...smallGrid(), cells: "..." })).toThrow();
  });

  it("maps world to cells exactly like the server", () => {
    const grid = new GridModel(smallGrid());
    expect(grid.worldToCell(1.0, -2.0)).toEqual([0, 0]);
    expect(grid.worldToCell(2.5, -1.0)).toEqual([3, 2]);
    // within half a cell of the center rounds to it
    expect(grid.worldToCell(1.24, -1.76)).toEqual([0, 0]);
    expect(() => grid.worldToCell(100, 0)).toThrow(RangeError);
  });

  it("cellToWorld inverts worldToCell on cell centers", () => {
    const grid = new GridModel(smallGrid());
    for (let ix = 0; ix < grid.width; ix++) {
      for (let iy = 0; iy < grid.height; iy++) {
        const [wx, wy] = grid.cellToWorld(ix, iy);
        expect(grid.worldToCell(wx, wy)).toEqual([ix, iy]);
      }
    }
  });

  it("refuses waypoints on occupied or unknown cells", () => {
    const grid = new GridModel(smallGrid());
    expect(grid.isFreeWorld(1.0, -2.0)).toBe(true);
    expect(grid.isFreeWorld(1.5, -2.0)).toBe(false); // occupied
    expect(grid.isFreeWorld(2.5, -2.0)).toBe(false); // unknown
    expect(grid.isFreeWorld(99, 99)).toBe(false); // outside
  });
});

describe("Viewport", () => {
  it("round-trips integer probe pixels bit-exactly", () => {
    const viewport = new Viewport(137, -42, 64);
    const probes: Array<[number, number]> = [
      [0, 0], [1, 1], [13, 977], [640, 360], [1099, 799], [3, 599],
    ];
    for (const [px, py] of probes) {
      const [wx, wy] = viewport.screenToWorld(px, py);
      const [bx, by] = viewport.worldToScreen(wx, wy);
      expect(bx).toBe(px); // exact, not approximate
      expect(by).toBe(py);
    }
  });

  it("stays exact after pan and zoom", () => {
    const viewport = new Viewport(0, 0, 64);
    viewport.panBy(33, -7);
    viewport.zoom(1, 500, 300);
    viewport.zoom(1, 100, 700);
    viewport.zoom(-1, 20, 20);
    for (const [px, py] of [[7, 11], [512, 256], [999, 1]] as Array<[number, number]>) {
      const [wx, wy] = viewport.screenToWorld(px, py);
      expect(viewport.worldToScreen(wx, wy)).toEqual([px, py]);
    }
  });

  it("world -> screen -> world is the algebraic inverse", () => {
    const viewport = new Viewport(87, 43, 128);
    for (const [wx, wy] of [[0.1, -3.7], [12.25, 0.5], [-4.125, 8.875]]) {
      const [px, py] = viewport.worldToScreen(wx, wy);
      const [bx, by] = viewport.screenToWorld(px, py);
      expect(bx).toBeCloseTo(wx, 12);
      expect(by).toBeCloseTo(wy, 12);
    }
  });

  it("zoom keeps the cursor's world point fixed within a pixel", () => {
    const viewport = new Viewport(10, 20, 64);
    const [wx, wy] = viewport.screenToWorld(400, 300);
    viewport.zoom(1, 400, 300);
    const [px, py] = viewport.worldToScreen(wx, wy);
    expect(Math.abs(px - 400)).toBeLessThanOrEqual(1);
    expect(Math.abs(py - 300)).toBeLessThanOrEqual(1);
    expect(viewport.scale).toBe(128);
  });

  it("fit centers the grid at a power-of-two scale", () => {
    const grid = new GridModel(smallGrid());
    const viewport = new Viewport();
    viewport.fit(grid, 800, 600);
    expect(Math.log2(viewport.scale) % 1).toBe(0);
    const [cx, cy] = viewport.worldToScreen(
      grid.originX + (grid.width * grid.resolution) / 2,
      grid.originY + (grid.height * grid.resolution) / 2,
    );
    expect(Math.abs(cx - 400)).toBeLessThanOrEqual(1);
    expect(Math.abs(cy - 300)).toBeLessThanOrEqual(1);
  });
});
