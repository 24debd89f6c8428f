// Client-side mission draft: waypoints, anchors, edges, strategies.
//
// The draft mirrors the server's planning rules so a save is accepted on
// the first try: a new anchor is dropped whenever a waypoint lands more
// than the anchor radius from every existing draft anchor, and waypoint
// poses are stored relative to their nearest anchor. Draft anchors use
// identity rotation, so a waypoint's local rotation is its world heading.

import type { EdgeDoc, MissionDoc, StrategyDoc, WaypointDoc } from "./types.js";

export const ANCHOR_RADIUS = 2.5;

export interface DraftWaypoint {
  id: string;
  x: number;
  y: number;
  yaw: number;
  isInspection: boolean;
  label: string;
  anchorId: string;
}

export interface DraftAnchor {
  id: string;
  x: number;
  y: number;
}

export interface DraftEdge {
  from: string;
  to: string;
  order: number;
}

function yawQuaternion(yaw: number): [number, number, number, number] {
  return [Math.cos(yaw / 2), 0, 0, Math.sin(yaw / 2)];
}

export class MissionDraft {
  readonly missionId: string;
  waypoints: DraftWaypoint[] = [];
  anchors: DraftAnchor[] = [];
  edges: DraftEdge[] = [];
  strategies = new Map<string, StrategyDoc>();
  private counter = 0;
  private anchorCounter = 0;

  constructor(missionId: string) {
    this.missionId = missionId;
  }

  private nearestAnchor(x: number, y: number): DraftAnchor | null {
    let best: DraftAnchor | null = null;
    let bestDist = Infinity;
    for (const anchor of this.anchors) {
      const d = Math.hypot(anchor.x - x, anchor.y - y);
      if (d < bestDist) {
        best = anchor;
        bestDist = d;
      }
    }
    return bestDist <= ANCHOR_RADIUS ? best : null;
  }

  addWaypoint(x: number, y: number, yaw = 0, label = ""): DraftWaypoint {
    let anchor = this.nearestAnchor(x, y);
    if (!anchor) {
      anchor = { id: `a-${this.anchorCounter++}`, x, y };
      this.anchors.push(anchor);
    }
    const wp: DraftWaypoint = {
      id: `wp-${this.counter++}`,
      x,
      y,
      yaw,
      isInspection: false,
      label,
      anchorId: anchor.id,
    };
    this.waypoints.push(wp);
    return wp;
  }

  waypoint(id: string): DraftWaypoint {
    const wp = this.waypoints.find((w) => w.id === id);
    if (!wp) throw new Error(`unknown waypoint ${id}`);
    return wp;
  }

  setYaw(id: string, yaw: number): void {
    this.waypoint(id).yaw = yaw;
  }

  toggleInspection(id: string): boolean {
    const wp = this.waypoint(id);
    wp.isInspection = !wp.isInspection;
    return wp.isInspection;
  }

  removeWaypoint(id: string): void {
    this.waypoint(id); // existence check
    this.waypoints = this.waypoints.filter((w) => w.id !== id);
    this.edges = this.edges.filter((e) => e.from !== id && e.to !== id);
    this.strategies.delete(id);
    // anchors are kept: other waypoints may reference them, and dangling
    // anchors are dropped at serialization time
  }

  outEdges(id: string): DraftEdge[] {
    return this.edges.filter((e) => e.from === id).sort((a, b) => a.order - b.order);
  }

  connect(from: string, to: string): DraftEdge {
    this.waypoint(from);
    this.waypoint(to);
    if (from === to) throw new Error("self loops are not allowed");
    const existing = this.outEdges(from);
    if (existing.some((e) => e.to === to)) throw new Error(`duplicate edge ${from} -> ${to}`);
    const order = existing.length ? existing[existing.length - 1].order + 1 : 0;
    const edge = { from, to, order };
    this.edges.push(edge);
    return edge;
  }

  disconnect(from: string, to: string): void {
    const before = this.edges.length;
    this.edges = this.edges.filter((e) => !(e.from === from && e.to === to));
    if (this.edges.length === before) throw new Error(`no edge ${from} -> ${to}`);
  }

  /** Move an out-edge up or down in the order ranking. */
  reorderEdge(from: string, to: string, direction: 1 | -1): void {
    const ordered = this.outEdges(from);
    const index = ordered.findIndex((e) => e.to === to);
    if (index < 0) throw new Error(`no edge ${from} -> ${to}`);
    const swapWith = index + direction;
    if (swapWith < 0 || swapWith >= ordered.length) return;
    const a = ordered[index];
    const b = ordered[swapWith];
    [a.order, b.order] = [b.order, a.order];
  }

  setStrategy(node: string, strategy: StrategyDoc): void {
    this.waypoint(node);
    this.strategies.set(node, strategy);
  }

  /** Branching nodes that still need a strategy before the draft can save. */
  nodesMissingStrategy(): string[] {
    return this.waypoints
      .filter((wp) => this.outEdges(wp.id).length >= 2 && !this.strategies.has(wp.id))
      .map((wp) => wp.id);
  }

  validate(): string[] {
    const problems: string[] = [];
    if (this.waypoints.length === 0) problems.push("mission has no waypoints");
    for (const node of this.nodesMissingStrategy()) {
      problems.push(`branching waypoint ${node} needs a strategy`);
    }
    if (this.waypoints.length > 0) {
      const reachable = new Set<string>([this.waypoints[0].id]);
      const queue = [this.waypoints[0].id];
      while (queue.length) {
        const node = queue.pop()!;
        for (const edge of this.outEdges(node)) {
          if (!reachable.has(edge.to)) {
            reachable.add(edge.to);
            queue.push(edge.to);
          }
        }
      }
      for (const wp of this.waypoints) {
        if (!reachable.has(wp.id)) problems.push(`waypoint ${wp.id} is unreachable from start`);
      }
    }
    return problems;
  }

  /** Canonical mission document (the first waypoint is the start node). */
  toDocument(): MissionDoc {
    const anchorById = new Map(this.anchors.map((a) => [a.id, a]));
    const usedAnchors = this.anchors.filter((a) =>
      this.waypoints.some((wp) => wp.anchorId === a.id),
    );
    const waypoints: WaypointDoc[] = this.waypoints.map((wp) => {
      const anchor = anchorById.get(wp.anchorId)!;
      return {
        id: wp.id,
        anchor_id: wp.anchorId,
        local_pose: {
          t: [wp.x - anchor.x, wp.y - anchor.y, 0],
          q: yawQuaternion(wp.yaw),
        },
        is_inspection: wp.isInspection,
        label: wp.label,
      };
    });
    const edges: EdgeDoc[] = [...this.edges].map((e) => ({
      from: e.from,
      to: e.to,
      order: e.order,
    }));
    const strategies: Record<string, StrategyDoc> = {};
    for (const [node, strategy] of [...this.strategies.entries()].sort()) {
      if (this.waypoints.some((wp) => wp.id === node)) strategies[node] = strategy;
    }
    return {
      schema_version: 1,
      id: this.missionId,
      anchors: usedAnchors.map((a) => a.id),
      start: this.waypoints[0]?.id ?? "",
      waypoints,
      edges,
      strategies,
    };
  }
}
