// Wire types mirroring the service's JSON formats.

export interface PoseWire {
  t: [number, number, number];
  q: [number, number, number, number];
}

export interface WaypointDoc {
  id: string;
  anchor_id: string;
  local_pose: PoseWire;
  is_inspection: boolean;
  label: string;
}

export interface EdgeDoc {
  from: string;
  to: string;
  order: number;
}

export interface StrategyDoc {
  kind: "first_edge" | "interactive" | "callback";
  name: string;
}

export interface MissionDoc {
  schema_version: number;
  id: string;
  anchors: string[];
  start: string;
  waypoints: WaypointDoc[];
  edges: EdgeDoc[];
  strategies: Record<string, StrategyDoc>;
}

export interface GridDoc {
  origin: [number, number];
  resolution: number;
  width: number;
  height: number;
  cells: string; // row-major, '.' free / '#' occupied / '?' unknown
}

export interface MissionSummary {
  id: string;
  label: string;
  waypoint_count: number;
}

export interface ExecutionSummary {
  execution_id: string;
  phase: string;
  node: string | null;
  reason: string | null;
  robot: { x: number; y: number; yaw: number };
  captures: number;
  seq: number;
}

export interface EventMsg {
  seq: number;
  t: number;
  kind: string;
  [key: string]: unknown;
}

export interface BranchOption {
  order: number;
  to: string;
}
