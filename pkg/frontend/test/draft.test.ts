import { describe, expect, it } from "vitest";

import { ANCHOR_RADIUS, MissionDraft } from "../src/draft.js";
import type { MissionDoc } from "../src/types.js";

// mirror of the server-side integrity rules the document must satisfy
function checkSchemaValid(doc: MissionDoc): void {
  expect(doc.schema_version).toBe(1);
  expect(doc.id.length).toBeGreaterThan(0);
  const waypointIds = new Set(doc.waypoints.map((w) => w.id));
  expect(waypointIds.size).toBe(doc.waypoints.length);
  const anchorIds = new Set(doc.anchors);
  expect(anchorIds.size).toBe(doc.anchors.length);
  for (const wp of doc.waypoints) {
    expect(anchorIds.has(wp.anchor_id)).toBe(true);
    expect(wp.local_pose.t).toHaveLength(3);
    expect(wp.local_pose.q).toHaveLength(4);
    const [x, y, z] = wp.local_pose.t;
    expect(Math.hypot(x, y, z)).toBeLessThanOrEqual(ANCHOR_RADIUS + 0.5);
    const norm = Math.hypot(...wp.local_pose.q);
    expect(Math.abs(norm - 1)).toBeLessThan(1e-9);
  }
  const seenPairs = new Set<string>();
  const seenOrders = new Set<string>();
  for (const edge of doc.edges) {
    expect(waypointIds.has(edge.from)).toBe(true);
    expect(waypointIds.has(edge.to)).toBe(true);
    expect(edge.from).not.toBe(edge.to);
    expect(seenPairs.has(`${edge.from}>${edge.to}`)).toBe(false);
    seenPairs.add(`${edge.from}>${edge.to}`);
    expect(seenOrders.has(`${edge.from}#${edge.order}`)).toBe(false);
    seenOrders.add(`${edge.from}#${edge.order}`);
  }
  expect(waypointIds.has(doc.start)).toBe(true);
  // reachability from start
  const reachable = new Set([doc.start]);
  const queue = [doc.start];
  while (queue.length) {
    const node = queue.pop()!;
    for (const edge of doc.edges) {
      if (edge.from === node && !reachable.has(edge.to)) {
        reachable.add(edge.to);
        queue.push(edge.to);
      }
    }
  }
  expect(reachable.size).toBe(doc.waypoints.length);
  // every branching node carries a strategy
  for (const id of waypointIds) {
    const out = doc.edges.filter((e) => e.from === id);
    if (out.length >= 2) expect(doc.strategies[id]).toBeDefined();
  }
}

describe("MissionDraft", () => {
  it("drops a new anchor only beyond the 2.5 m radius", () => {
    const draft = new MissionDraft("m-test");
    draft.addWaypoint(0, 0);
    expect(draft.anchors).toHaveLength(1);
    draft.addWaypoint(1.0, 0); // within radius: reuse
    expect(draft.anchors).toHaveLength(1);
    draft.addWaypoint(3.0, 0); // beyond: new anchor at the waypoint
    expect(draft.anchors).toHaveLength(2);
    expect(draft.anchors[1]).toMatchObject({ x: 3.0, y: 0 });
    const last = draft.waypoints[2];
    expect(last.anchorId).toBe(draft.anchors[1].id);
  });

  it("keeps every waypoint within radius of its anchor", () => {
    const draft = new MissionDraft("m-walk");
    let x = 0;
    for (let i = 0; i < 30; i++) {
      x += 0.9;
      const wp = draft.addWaypoint(x, Math.sin(i));
      const anchor = draft.anchors.find((a) => a.id === wp.anchorId)!;
      expect(Math.hypot(anchor.x - wp.x, anchor.y - wp.y)).toBeLessThanOrEqual(ANCHOR_RADIUS);
    }
  });

  it("produces a schema-valid document for a 5-waypoint branching plan", () => {
    const draft = new MissionDraft("m-ui");
    const ids = [
      draft.addWaypoint(0.8, 0.0, 0),
      draft.addWaypoint(1.6, 0.8, Math.PI / 2),
      draft.addWaypoint(2.4, 0.0, 0),
      draft.addWaypoint(3.4, 1.2, Math.PI / 2),
      draft.addWaypoint(3.4, -1.4, -Math.PI / 2),
    ].map((wp) => wp.id);
    draft.toggleInspection(ids[1]);
    draft.toggleInspection(ids[2]);
    draft.connect(ids[0], ids[1]);
    draft.connect(ids[1], ids[2]);
    draft.connect(ids[2], ids[3]);
    draft.connect(ids[2], ids[4]);
    expect(draft.nodesMissingStrategy()).toEqual([ids[2]]);
    draft.setStrategy(ids[2], { kind: "interactive", name: "" });
    expect(draft.validate()).toEqual([]);
    const doc = draft.toDocument();
    checkSchemaValid(doc);
    expect(doc.start).toBe(ids[0]);
    expect(doc.waypoints[1].is_inspection).toBe(true);
    expect(doc.edges).toContainEqual({ from: ids[2], to: ids[3], order: 0 });
    expect(doc.edges).toContainEqual({ from: ids[2], to: ids[4], order: 1 });
  });

  it("rejects self loops and duplicate edges", () => {
    const draft = new MissionDraft("m-x");
    const a = draft.addWaypoint(0, 0);
    const b = draft.addWaypoint(1, 0);
    draft.connect(a.id, b.id);
    expect(() => draft.connect(a.id, a.id)).toThrow();
    expect(() => draft.connect(a.id, b.id)).toThrow();
  });

  it("reorders out-edges by swapping order ranks", () => {
    const draft = new MissionDraft("m-r");
    const a = draft.addWaypoint(0, 0);
    const b = draft.addWaypoint(1, 0);
    const c = draft.addWaypoint(0, 1);
    draft.connect(a.id, b.id);
    draft.connect(a.id, c.id);
    draft.reorderEdge(a.id, c.id, -1);
    expect(draft.outEdges(a.id).map((e) => e.to)).toEqual([c.id, b.id]);
    draft.reorderEdge(a.id, c.id, -1); // already first: no-op
    expect(draft.outEdges(a.id).map((e) => e.to)).toEqual([c.id, b.id]);
  });

  it("flags unreachable waypoints and missing strategies", () => {
    const draft = new MissionDraft("m-v");
    const a = draft.addWaypoint(0, 0);
    const b = draft.addWaypoint(1, 0);
    expect(draft.validate().join(" ")).toContain("unreachable");
    draft.connect(a.id, b.id);
    expect(draft.validate()).toEqual([]);
  });

  it("removing a waypoint drops its edges and strategy but keeps anchors", () => {
    const draft = new MissionDraft("m-d");
    const a = draft.addWaypoint(0, 0);
    const b = draft.addWaypoint(1, 0);
    const c = draft.addWaypoint(0.5, 0.8);
    draft.connect(a.id, b.id);
    draft.connect(a.id, c.id);
    draft.setStrategy(a.id, { kind: "first_edge", name: "" });
    draft.removeWaypoint(b.id);
    expect(draft.edges).toHaveLength(1);
    expect(draft.waypoints.map((w) => w.id)).toEqual([a.id, c.id]);
    draft.removeWaypoint(a.id);
    expect(draft.strategies.has(a.id)).toBe(false);
    expect(draft.anchors.length).toBeGreaterThan(0);
  });

  it("serializes heading as a yaw quaternion", () => {
    const draft = new MissionDraft("m-q");
    draft.addWaypoint(0, 0, Math.PI / 2);
    const q = draft.toDocument().waypoints[0].local_pose.q;
    expect(q[0]).toBeCloseTo(Math.SQRT1_2, 9);
    expect(q[3]).toBeCloseTo(Math.SQRT1_2, 9);
    expect(q[1]).toBe(0);
    expect(q[2]).toBe(0);
  });
});
