// NDJSON stream parsing and the execution view-state reducer.

import type { BranchOption, EventMsg } from "./types.js";

/** Splits streamed text chunks into complete JSON lines. */
export class LineSplitter {
  private remainder = "";

  push(chunk: string): EventMsg[] {
    const text = this.remainder + chunk;
    const lines = text.split("\n");
    this.remainder = lines.pop() ?? "";
    const events: EventMsg[] = [];
    for (const line of lines) {
      const trimmed = line.trim();
      if (!trimmed) continue;
      events.push(JSON.parse(trimmed) as EventMsg);
    }
    return events;
  }
}

export interface CaptureMark {
  waypoint: string;
  x: number;
  y: number;
  yaw: number;
}

export interface PendingBranch {
  node: string;
  options: BranchOption[];
}

/** Reduced view of one execution, updated in event-sequence order. */
export interface ExecutionView {
  lastSeq: number;
  phase: string;
  node: string | null;
  reason: string | null;
  robot: { x: number; y: number; yaw: number } | null;
  pathCells: Array<[number, number]>;
  pathTarget: [number, number] | null;
  captures: CaptureMark[];
  pendingBranch: PendingBranch | null;
  errors: string[];
}

export function emptyView(): ExecutionView {
  return {
    lastSeq: -1,
    phase: "idle",
    node: null,
    reason: null,
    robot: null,
    pathCells: [],
    pathTarget: null,
    captures: [],
    pendingBranch: null,
    errors: [],
  };
}

/** Apply one event; duplicates (seq <= lastSeq) are ignored, so replays
 * and reconnect overlaps are harmless. */
export function applyEvent(view: ExecutionView, event: EventMsg): ExecutionView {
  if (event.seq <= view.lastSeq) return view;
  const next: ExecutionView = { ...view, lastSeq: event.seq };
  switch (event.kind) {
    case "StateChanged": {
      next.phase = event.phase as string;
      next.node = (event.node as string | null) ?? null;
      next.reason = (event.reason as string | null) ?? null;
      if (next.phase !== "awaiting_branch") next.pendingBranch = null;
      break;
    }
    case "PoseUpdate": {
      next.robot = { x: event.x as number, y: event.y as number, yaw: event.yaw as number };
      break;
    }
    case "PathPlanned": {
      next.pathCells = event.cells as Array<[number, number]>;
      const target = event.target as [number, number, number];
      next.pathTarget = [target[0], target[1]];
      break;
    }
    case "CaptureTaken": {
      next.captures = [
        ...view.captures,
        {
          waypoint: event.waypoint as string,
          x: event.x as number,
          y: event.y as number,
          yaw: event.yaw as number,
        },
      ];
      break;
    }
    case "BranchRequested": {
      next.pendingBranch = {
        node: event.node as string,
        options: event.options as BranchOption[],
      };
      break;
    }
    case "BranchResolved": {
      next.pendingBranch = null;
      break;
    }
    case "Error": {
      next.errors = [...view.errors, String(event.error)];
      break;
    }
  }
  return next;
}

export function applyEvents(view: ExecutionView, events: EventMsg[]): ExecutionView {
  return events.reduce(applyEvent, view);
}
