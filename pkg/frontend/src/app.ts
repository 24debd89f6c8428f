// Planning and monitoring console: map canvas, draft editing, live
// execution telemetry. All server interaction goes through ApiClient.

import { ApiClient, ApiError } from "./api.js";
import { MissionDraft, type DraftWaypoint } from "./draft.js";
import { applyEvent, emptyView, type ExecutionView } from "./events.js";
import { GridModel, Viewport } from "./grid.js";

const api = new ApiClient("");

interface UiState {
  grid: GridModel | null;
  gridImage: HTMLCanvasElement | null;
  draft: MissionDraft;
  selected: string | null;
  executionId: string | null;
  view: ExecutionView;
  stopStream: (() => void) | null;
  message: string;
  messageIsError: boolean;
}

const state: UiState = {
  grid: null,
  gridImage: null,
  draft: new MissionDraft(`m-ui-${Date.now().toString(36)}`),
  selected: null,
  executionId: null,
  view: emptyView(),
  stopStream: null,
  message: "loading map...",
  messageIsError: false,
};

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const viewport = new Viewport();

function say(text: string, isError = false): void {
  state.message = text;
  state.messageIsError = isError;
  const bar = document.getElementById("status")!;
  bar.textContent = text;
  bar.className = isError ? "error" : "";
}

// -- rendering ---------------------------------------------------------------

function buildGridImage(grid: GridModel): HTMLCanvasElement {
  const image = document.createElement("canvas");
  image.width = grid.width;
  image.height = grid.height;
  const ictx = image.getContext("2d")!;
  const data = ictx.createImageData(grid.width, grid.height);
  for (let iy = 0; iy < grid.height; iy++) {
    const row = grid.height - 1 - iy; // world y grows upward
    for (let ix = 0; ix < grid.width; ix++) {
      const stateChar = grid.state(ix, iy);
      const offset = (row * grid.width + ix) * 4;
      const shade = stateChar === "free" ? [28, 33, 40] : stateChar === "occupied" ? [200, 205, 215] : [90, 80, 60];
      data.data[offset] = shade[0];
      data.data[offset + 1] = shade[1];
      data.data[offset + 2] = shade[2];
      data.data[offset + 3] = 255;
    }
  }
  ictx.putImageData(data, 0, 0);
  return image;
}

function draw(): void {
  ctx.fillStyle = "#14171c";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const grid = state.grid;
  if (!grid || !state.gridImage) return;
  const res = grid.resolution;
  const [left, top] = viewport.worldToScreen(
    grid.originX - res / 2,
    grid.originY + (grid.height - 0.5) * res,
  );
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(
    state.gridImage,
    left,
    top,
    grid.width * res * viewport.scale,
    grid.height * res * viewport.scale,
  );

  drawEdges();
  for (const wp of state.draft.waypoints) drawWaypoint(wp);
  drawExecution();
}

function drawArrow(x: number, y: number, yaw: number, length: number, color: string): void {
  const [sx, sy] = viewport.worldToScreen(x, y);
  const [ex, ey] = viewport.worldToScreen(x + Math.cos(yaw) * length, y + Math.sin(yaw) * length);
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(sx, sy);
  ctx.lineTo(ex, ey);
  ctx.stroke();
}

function drawWaypoint(wp: DraftWaypoint): void {
  const [sx, sy] = viewport.worldToScreen(wp.x, wp.y);
  const radius = Math.max(5, viewport.scale * 0.12);
  ctx.beginPath();
  ctx.arc(sx, sy, radius, 0, Math.PI * 2);
  ctx.fillStyle = wp.isInspection ? "#ffb347" : "#4fa3ff";
  ctx.globalAlpha = state.selected === wp.id ? 1.0 : 0.75;
  ctx.fill();
  ctx.globalAlpha = 1.0;
  if (state.selected === wp.id) {
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 2;
    ctx.stroke();
  }
  drawArrow(wp.x, wp.y, wp.yaw, 0.45, wp.isInspection ? "#ffd699" : "#9cc9ff");
  ctx.fillStyle = "#d8dee9";
  ctx.font = "11px sans-serif";
  ctx.fillText(wp.id, sx + radius + 3, sy - 3);
}

function drawEdges(): void {
  for (const edge of state.draft.edges) {
    const a = state.draft.waypoint(edge.from);
    const b = state.draft.waypoint(edge.to);
    const [ax, ay] = viewport.worldToScreen(a.x, a.y);
    const [bx, by] = viewport.worldToScreen(b.x, b.y);
    ctx.strokeStyle = "#6a7486";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
    // arrowhead
    const angle = Math.atan2(by - ay, bx - ax);
    ctx.beginPath();
    ctx.moveTo(bx, by);
    ctx.lineTo(bx - 10 * Math.cos(angle - 0.4), by - 10 * Math.sin(angle - 0.4));
    ctx.lineTo(bx - 10 * Math.cos(angle + 0.4), by - 10 * Math.sin(angle + 0.4));
    ctx.closePath();
    ctx.fillStyle = "#6a7486";
    ctx.fill();
    const mx = (ax + bx) / 2;
    const my = (ay + by) / 2;
    ctx.fillStyle = "#8fa1bb";
    ctx.font = "10px sans-serif";
    ctx.fillText(String(edge.order), mx + 4, my - 4);
  }
}

function drawExecution(): void {
  const { grid } = state;
  const view = state.view;
  if (!grid) return;
  if (view.pathCells.length) {
    ctx.strokeStyle = "#47d16c";
    ctx.lineWidth = 2;
    ctx.beginPath();
    view.pathCells.forEach((cell, i) => {
      const [wx, wy] = grid.cellToWorld(cell[0], cell[1]);
      const [sx, sy] = viewport.worldToScreen(wx, wy);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    if (view.pathTarget) {
      const [tx, ty] = viewport.worldToScreen(view.pathTarget[0], view.pathTarget[1]);
      ctx.lineTo(tx, ty);
    }
    ctx.stroke();
  }
  for (const capture of view.captures) {
    const [sx, sy] = viewport.worldToScreen(capture.x, capture.y);
    ctx.strokeStyle = "#ffb347";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(sx - 6, sy - 6);
    ctx.lineTo(sx + 6, sy + 6);
    ctx.moveTo(sx - 6, sy + 6);
    ctx.lineTo(sx + 6, sy - 6);
    ctx.stroke();
  }
  if (view.robot) {
    const { x, y, yaw } = view.robot;
    const [sx, sy] = viewport.worldToScreen(x, y);
    ctx.save();
    ctx.translate(sx, sy);
    ctx.rotate(-yaw);
    ctx.beginPath();
    ctx.moveTo(12, 0);
    ctx.lineTo(-8, 7);
    ctx.lineTo(-8, -7);
    ctx.closePath();
    ctx.fillStyle = "#47d16c";
    ctx.fill();
    ctx.restore();
  }
}

// -- sidebar -----------------------------------------------------------------

function renderSidebar(): void {
  const info = document.getElementById("draft-info")!;
  const problems = state.draft.validate();
  info.innerHTML =
    `<b>${state.draft.missionId}</b><br>` +
    `${state.draft.waypoints.length} waypoints, ${state.draft.edges.length} edges, ` +
    `${state.draft.anchors.length} anchors` +
    (problems.length ? `<br><span class="error">${problems.join("<br>")}</span>` : "");

  const panel = document.getElementById("selection")!;
  if (!state.selected) {
    panel.innerHTML = "<i>click the map to place a waypoint;<br>click a waypoint to select it</i>";
  } else {
    const wp = state.draft.waypoint(state.selected);
    const edges = state.draft
      .outEdges(wp.id)
      .map(
        (e) =>
          `<li>#${e.order} &rarr; ${e.to} ` +
          `<button data-act="up" data-to="${e.to}">&uarr;</button>` +
          `<button data-act="down" data-to="${e.to}">&darr;</button>` +
          `<button data-act="del" data-to="${e.to}">x</button></li>`,
      )
      .join("");
    const branching = state.draft.outEdges(wp.id).length >= 2;
    const strategy = state.draft.strategies.get(wp.id);
    panel.innerHTML = `
      <b>${wp.id}</b> (${wp.x.toFixed(2)}, ${wp.y.toFixed(2)}) yaw ${wp.yaw.toFixed(2)}<br>
      inspection: <input type="checkbox" id="inspect-toggle" ${wp.isInspection ? "checked" : ""}><br>
      <small>drag from the waypoint to set heading; shift-click another waypoint to connect</small>
      <ul>${edges}</ul>
      ${branching ? `strategy:
        <select id="strategy-select">
          <option value="" ${!strategy ? "selected" : ""}>(none)</option>
          <option value="first_edge" ${strategy?.kind === "first_edge" ? "selected" : ""}>first edge</option>
          <option value="interactive" ${strategy?.kind === "interactive" ? "selected" : ""}>interactive</option>
        </select>` : ""}
      <br><button id="delete-wp">delete waypoint</button>`;
    document.getElementById("inspect-toggle")!.addEventListener("change", () => {
      state.draft.toggleInspection(wp.id);
      refresh();
    });
    document.getElementById("delete-wp")!.addEventListener("click", () => {
      state.draft.removeWaypoint(wp.id);
      state.selected = null;
      refresh();
    });
    document.getElementById("strategy-select")?.addEventListener("change", (event) => {
      const value = (event.target as HTMLSelectElement).value;
      if (value) state.draft.setStrategy(wp.id, { kind: value as "first_edge" | "interactive", name: "" });
      else state.draft.strategies.delete(wp.id);
      refresh();
    });
    panel.querySelectorAll("button[data-act]").forEach((button) => {
      button.addEventListener("click", () => {
        const to = (button as HTMLElement).dataset.to!;
        const act = (button as HTMLElement).dataset.act!;
        if (act === "del") state.draft.disconnect(wp.id, to);
        else state.draft.reorderEdge(wp.id, to, act === "up" ? -1 : 1);
        refresh();
      });
    });
  }

  const exec = document.getElementById("exec-info")!;
  const v = state.view;
  exec.innerHTML = state.executionId
    ? `<b>${state.executionId}</b>: ${v.phase}${v.node ? ` @ ${v.node}` : ""}` +
      (v.reason ? `<br><span class="error">${v.reason}</span>` : "") +
      `<br>captures: ${v.captures.length}, last seq: ${v.lastSeq}`
    : "<i>no execution</i>";
}

function renderBranchModal(): void {
  const modal = document.getElementById("branch-modal")!;
  const pending = state.view.pendingBranch;
  if (!pending || !state.executionId) {
    modal.style.display = "none";
    return;
  }
  modal.style.display = "block";
  const executionId = state.executionId;
  modal.innerHTML =
    `<b>branch at ${pending.node}</b><br>` +
    pending.options
      .map((o) => `<button data-order="${o.order}">#${o.order} &rarr; ${o.to}</button>`)
      .join(" ");
  modal.querySelectorAll("button").forEach((button) => {
    button.addEventListener("click", async () => {
      const order = Number((button as HTMLElement).dataset.order);
      try {
        await api.resolveBranch(executionId, pending.node, order);
        say(`branch ${pending.node}: took edge #${order}`);
      } catch (error) {
        say(String(error), true);
      }
    });
  });
}

function refresh(): void {
  draw();
  renderSidebar();
  renderBranchModal();
}

// -- map interactions ----------------------------------------------------------

function waypointAtScreen(px: number, py: number): DraftWaypoint | null {
  for (const wp of [...state.draft.waypoints].reverse()) {
    const [sx, sy] = viewport.worldToScreen(wp.x, wp.y);
    if (Math.hypot(sx - px, sy - py) <= Math.max(6, viewport.scale * 0.12) + 2) return wp;
  }
  return null;
}

let dragging: { kind: "pan"; lastX: number; lastY: number } | { kind: "yaw"; wp: DraftWaypoint } | null = null;

canvas.addEventListener("mousedown", (event) => {
  const rect = canvas.getBoundingClientRect();
  const px = event.clientX - rect.left;
  const py = event.clientY - rect.top;
  if (event.button === 2 || event.button === 1) {
    dragging = { kind: "pan", lastX: px, lastY: py };
    return;
  }
  const hit = waypointAtScreen(px, py);
  if (hit && state.selected === hit.id) {
    dragging = { kind: "yaw", wp: hit }; // drag out from a selected waypoint sets its heading
  }
});

canvas.addEventListener("mousemove", (event) => {
  if (!dragging) return;
  const rect = canvas.getBoundingClientRect();
  const px = event.clientX - rect.left;
  const py = event.clientY - rect.top;
  if (dragging.kind === "pan") {
    viewport.panBy(px - dragging.lastX, py - dragging.lastY);
    dragging.lastX = px;
    dragging.lastY = py;
  } else {
    const [wx, wy] = viewport.screenToWorld(px, py);
    dragging.wp.yaw = Math.atan2(wy - dragging.wp.y, wx - dragging.wp.x);
  }
  refresh();
});

window.addEventListener("mouseup", () => {
  dragging = null;
});

canvas.addEventListener("contextmenu", (event) => event.preventDefault());

canvas.addEventListener("click", (event) => {
  if (dragging) return;
  const rect = canvas.getBoundingClientRect();
  const px = event.clientX - rect.left;
  const py = event.clientY - rect.top;
  const hit = waypointAtScreen(px, py);
  if (hit) {
    if (event.shiftKey && state.selected && state.selected !== hit.id) {
      try {
        state.draft.connect(state.selected, hit.id);
        say(`connected ${state.selected} -> ${hit.id}`);
      } catch (error) {
        say(String(error), true);
      }
    } else {
      state.selected = hit.id;
    }
    refresh();
    return;
  }
  const [wx, wy] = viewport.screenToWorld(px, py);
  if (!state.grid) return;
  if (event.ctrlKey) {
    void sendAdhocGoal(wx, wy);
    return;
  }
  if (!state.grid.isFreeWorld(wx, wy)) {
    say(`(${wx.toFixed(2)}, ${wy.toFixed(2)}) is not a free cell - waypoint refused`, true);
    return;
  }
  const wp = state.draft.addWaypoint(wx, wy);
  if (state.selected) {
    try {
      state.draft.connect(state.selected, wp.id);
    } catch {
      /* keep the waypoint even if the edge is a duplicate */
    }
  }
  state.selected = wp.id;
  say(`placed ${wp.id} at (${wx.toFixed(2)}, ${wy.toFixed(2)})`);
  refresh();
});

canvas.addEventListener("dblclick", (event) => {
  const rect = canvas.getBoundingClientRect();
  const hit = waypointAtScreen(event.clientX - rect.left, event.clientY - rect.top);
  if (hit) {
    state.draft.toggleInspection(hit.id);
    refresh();
  }
});

canvas.addEventListener("wheel", (event) => {
  event.preventDefault();
  const rect = canvas.getBoundingClientRect();
  viewport.zoom(event.deltaY < 0 ? 1 : -1, event.clientX - rect.left, event.clientY - rect.top);
  refresh();
});

// -- execution wiring -----------------------------------------------------------

function subscribe(executionId: string): void {
  state.stopStream?.();
  state.executionId = executionId;
  state.view = emptyView();
  state.stopStream = api.streamEvents(
    executionId,
    (event) => {
      state.view = applyEvent(state.view, event);
      refresh();
    },
    () => say(`stream for ${executionId} ended (${state.view.phase})`),
  );
}

async function runMission(missionId: string): Promise<void> {
  try {
    const executionId = await api.startExecution(missionId);
    say(`started ${executionId} for ${missionId}`);
    subscribe(executionId);
  } catch (error) {
    say(String(error), true);
  }
}

async function sendAdhocGoal(wx: number, wy: number): Promise<void> {
  try {
    if (!state.executionId || state.view.phase === "completed" || state.view.phase === "failed") {
      subscribe(await api.startExecution(null));
    }
    await api.sendGoal(state.executionId!, wx, wy);
    say(`goal (${wx.toFixed(2)}, ${wy.toFixed(2)}) sent`);
  } catch (error) {
    say(String(error), true);
  }
}

async function refreshMissionList(): Promise<void> {
  const list = document.getElementById("mission-list")!;
  try {
    const missions = await api.listMissions();
    list.innerHTML = missions
      .map(
        (m) =>
          `<li>${m.id} (${m.waypoint_count} wp) ` +
          `<button data-mission="${m.id}">run</button></li>`,
      )
      .join("");
    list.querySelectorAll("button").forEach((button) => {
      button.addEventListener("click", () =>
        void runMission((button as HTMLElement).dataset.mission!),
      );
    });
  } catch (error) {
    say(String(error), true);
  }
}

document.getElementById("save-draft")!.addEventListener("click", async () => {
  const problems = state.draft.validate();
  if (problems.length) {
    say(problems.join("; "), true);
    return;
  }
  try {
    await api.putMission(state.draft.toDocument());
    say(`saved ${state.draft.missionId}`);
    await refreshMissionList();
  } catch (error) {
    if (error instanceof ApiError) say(`save rejected (${error.status}): ${error.message}`, true);
    else say(String(error), true);
  }
});

document.getElementById("new-draft")!.addEventListener("click", () => {
  state.draft = new MissionDraft(`m-ui-${Date.now().toString(36)}`);
  state.selected = null;
  refresh();
});

document.getElementById("preempt")!.addEventListener("click", async () => {
  if (!state.executionId) return;
  try {
    await api.preempt(state.executionId);
    say(`preempted ${state.executionId}`);
  } catch (error) {
    say(String(error), true);
  }
});

// -- boot -------------------------------------------------------------------

async function boot(): Promise<void> {
  try {
    const doc = await api.getMap();
    state.grid = new GridModel(doc);
    state.gridImage = buildGridImage(state.grid);
    viewport.fit(state.grid, canvas.width, canvas.height);
    say(
      `map ${state.grid.width}x${state.grid.height} @ ${state.grid.resolution} m ` +
      `- click to plan, ctrl-click to send the robot, right-drag to pan`,
    );
  } catch (error) {
    say(`failed to load map: ${String(error)}`, true);
  }
  await refreshMissionList();
  refresh();
}

void boot();
