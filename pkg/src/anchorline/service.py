"""HTTP/JSON facade: mission CRUD, map asset, execution control, events.

Built on the stdlib threading HTTP server: every request runs in its own
thread, so long-lived event streams do not block other endpoints. Event
streams are newline-delimited JSON with a `?from=seq` resume cursor.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import nav
from .anchors import AnchorStore, RelocModel
from .executor import (
    Execution,
    MissionActive,
    NotAwaitingBranch,
    TERMINAL_PHASES,
    UnknownEdge,
)
from .geometry import Pose
from .mission import (
    IntegrityViolation,
    MalformedDocument,
    MissionStore,
    SchemaVersionUnsupported,
    UnknownMission,
    deserialize,
)
from .occupancy import load_grid

CONFIG_ENV_VAR = "ANCHORLINE_CONFIG"


@dataclass
class ApiConfig:
    mission_dir: str
    anchor_path: str
    grid_path: str
    host: str = "127.0.0.1"
    port: int = 8750
    reloc: RelocModel = field(default_factory=RelocModel)
    seed: int = 0
    start_x: float = 0.0
    start_y: float = 0.0
    start_yaw: float = 0.0
    tick_dt: float = 0.05
    tick_interval: float = 0.002
    static_dir: str | None = None

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ApiConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        reloc = RelocModel(**doc.pop("reloc", {}))
        return cls(reloc=reloc, **doc)

    @classmethod
    def from_env(cls) -> "ApiConfig":
        path = os.environ.get(CONFIG_ENV_VAR)
        if not path:
            raise ValueError(f"{CONFIG_ENV_VAR} is not set")
        return cls.from_file(path)


class Service:
    """Owns the stores, the map, and all live executions."""

    def __init__(self, cfg: ApiConfig):
        self.cfg = cfg
        self.missions = MissionStore(cfg.mission_dir)
        self.anchors = AnchorStore.open(cfg.anchor_path)
        self.grid_text = Path(cfg.grid_path).read_text(encoding="utf-8")
        self.grid = load_grid(cfg.grid_path)
        self.executions: dict[str, Execution] = {}
        self._lock = threading.Lock()
        self._counter = 0
        self._stopping = threading.Event()

    @property
    def start_pose(self) -> Pose:
        return Pose.from_xyz_yaw(self.cfg.start_x, self.cfg.start_y, yaw=self.cfg.start_yaw)

    def create_execution(self, mission_id: str | None) -> tuple[str, Execution]:
        if mission_id is None:
            ex = Execution.adhoc(self.grid, start_pose=self.start_pose)
        else:
            ex = Execution.start(
                self.missions,
                self.anchors,
                self.grid,
                mission_id,
                self.cfg.reloc,
                start_pose=self.start_pose,
            )
        with self._lock:
            self._counter += 1
            exec_id = f"exec-{self._counter}"
            self.executions[exec_id] = ex
        ticker = threading.Thread(target=self._tick_loop, args=(ex,), daemon=True)
        ticker.start()
        return exec_id, ex

    def _tick_loop(self, ex: Execution) -> None:
        while not self._stopping.is_set():
            state = ex.tick(self.cfg.tick_dt)
            if state.phase in TERMINAL_PHASES:
                return
            time.sleep(self.cfg.tick_interval)

    def get_execution(self, exec_id: str) -> Execution:
        with self._lock:
            if exec_id not in self.executions:
                raise KeyError(exec_id)
            return self.executions[exec_id]

    def stop(self) -> None:
        self._stopping.set()


_ERROR_CODES: list[tuple[type, int]] = [
    (UnknownMission, 404),
    (UnknownEdge, 404),
    (NotAwaitingBranch, 409),
    (MissionActive, 409),
    (MalformedDocument, 422),
    (SchemaVersionUnsupported, 422),
    (IntegrityViolation, 422),
    (nav.GoalOccupied, 422),
    (nav.GoalOutsideMap, 422),
    (nav.PlanningError, 422),
]


def _status_for(exc: Exception) -> int:
    for typ, code in _ERROR_CODES:
        if isinstance(exc, typ):
            return code
    return 500


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "anchorline"

    @property
    def service(self) -> Service:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt: str, *args) -> None:  # quiet by default
        pass

    # -- plumbing -------------------------------------------------------

    def _send_json(self, code: int, obj) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_text(self, code: int, text: str, content_type: str) -> None:
        body = text.encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_domain_error(self, exc: Exception) -> None:
        detail = str(exc)
        self._send_json(_status_for(exc), {"error": type(exc).__name__, "detail": detail})

    def _read_json_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise MalformedDocument("empty request body")
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"invalid JSON body: {exc}") from exc
        if not isinstance(doc, dict):
            raise MalformedDocument("body must be a JSON object")
        return doc

    def _query(self) -> dict[str, str]:
        if "?" not in self.path:
            return {}
        out = {}
        for pair in self.path.split("?", 1)[1].split("&"):
            if "=" in pair:
                key, value = pair.split("=", 1)
                out[key] = value
        return out

    @property
    def route(self) -> str:
        return self.path.split("?", 1)[0]

    def _dispatch(self, table) -> None:
        for pattern, fn in table:
            match = re.fullmatch(pattern, self.route)
            if match:
                try:
                    fn(self, *match.groups())
                except (BrokenPipeError, ConnectionResetError):
                    pass
                except Exception as exc:  # domain errors -> typed JSON
                    code = _status_for(exc)
                    if code != 500:
                        self._send_domain_error(exc)
                    elif type(exc) is KeyError:  # unknown execution id
                        self._send_json(404, {"error": "NotFound", "detail": str(exc)})
                    else:
                        raise
                return
        self._send_json(404, {"error": "NotFound", "detail": self.route})

    # -- endpoints --------------------------------------------------------

    def _list_missions(self) -> None:
        store = self.service.missions
        out = []
        for mission_id in store.ids():
            m = store.load(mission_id)
            out.append({"id": m.id, "label": m.id, "waypoint_count": len(m.waypoints)})
        self._send_json(200, out)

    def _get_mission(self, mission_id: str) -> None:
        self._send_text(200, self.service.missions.load_text(mission_id), "application/json")

    def _put_mission(self, mission_id: str) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        m = deserialize(raw)
        if m.id != mission_id:
            raise IntegrityViolation(
                f"document id {m.id!r} does not match path id {mission_id!r}"
            )
        self.service.missions.save(m)
        self._send_json(200, {"id": m.id})

    def _delete_mission(self, mission_id: str) -> None:
        self.service.missions.delete(mission_id)
        self._send_json(200, {"deleted": mission_id})

    def _get_map(self) -> None:
        self._send_text(200, self.service.grid_text, "application/json")

    def _post_execution(self) -> None:
        body = self._read_json_body()
        if "mission_id" not in body:
            raise MalformedDocument("body needs a mission_id (string or null)")
        mission_id = body["mission_id"]
        if mission_id is not None and not isinstance(mission_id, str):
            raise MalformedDocument("mission_id must be a string or null")
        exec_id, _ = self.service.create_execution(mission_id)
        self._send_json(201, {"execution_id": exec_id})

    def _get_execution(self, exec_id: str) -> None:
        ex = self.service.get_execution(exec_id)
        self._send_json(200, {"execution_id": exec_id, **ex.state_summary()})

    def _stream_events(self, exec_id: str) -> None:
        ex = self.service.get_execution(exec_id)
        try:
            cursor = int(self._query().get("from", "0"))
        except ValueError:
            raise MalformedDocument("from must be an integer") from None
        self.send_response(200)
        self.send_header("Content-Type", "application/x-ndjson")
        self.send_header("Cache-Control", "no-store")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Connection", "close")
        self.end_headers()
        try:
            while True:
                events = ex.events.wait_since(cursor, timeout=0.2)
                for event in events:
                    self.wfile.write(json.dumps(event.to_wire()).encode("utf-8") + b"\n")
                    cursor = event.seq + 1
                self.wfile.flush()
                if ex.state.phase in TERMINAL_PHASES and cursor >= len(ex.events):
                    return
                if self.service._stopping.is_set():
                    return
        except (BrokenPipeError, ConnectionResetError):
            return

    def _post_branch(self, exec_id: str) -> None:
        ex = self.service.get_execution(exec_id)
        body = self._read_json_body()
        node, order = body.get("node"), body.get("order")
        if not isinstance(node, str) or not isinstance(order, int):
            raise MalformedDocument("body needs node (string) and order (integer)")
        ex.resolve_branch(node, order)
        self._send_json(200, {"execution_id": exec_id, **ex.state_summary()})

    def _post_preempt(self, exec_id: str) -> None:
        ex = self.service.get_execution(exec_id)
        ex.preempt()
        self._send_json(200, {"execution_id": exec_id, **ex.state_summary()})

    def _post_command(self, exec_id: str) -> None:
        from .gestures.commands import Goal, Preempt

        ex = self.service.get_execution(exec_id)
        body = self._read_json_body()
        kind = body.get("kind")
        if kind == "goal":
            try:
                cmd = Goal(float(body["x"]), float(body["y"]), float(body.get("yaw", 0.0)))
            except (KeyError, TypeError, ValueError):
                raise MalformedDocument("goal command needs numeric x and y") from None
        elif kind == "preempt":
            cmd = Preempt()
        else:
            raise MalformedDocument(f"unknown command kind {kind!r}")
        ex.inject_command(cmd)
        self._send_json(200, {"execution_id": exec_id, **ex.state_summary()})

    def _static(self, name: str) -> None:
        static_dir = self.service.cfg.static_dir
        if static_dir is None:
            self._send_json(404, {"error": "NotFound", "detail": "no static dir configured"})
            return
        target = (Path(static_dir) / (name or "index.html")).resolve()
        if not str(target).startswith(str(Path(static_dir).resolve())) or not target.is_file():
            self._send_json(404, {"error": "NotFound", "detail": name})
            return
        content_types = {".html": "text/html", ".js": "text/javascript", ".css": "text/css"}
        self._send_text(200, target.read_text(encoding="utf-8"),
                        content_types.get(target.suffix, "text/plain"))

    _GET_ROUTES = [
        (r"/missions", _list_missions),
        (r"/missions/([^/]+)", _get_mission),
        (r"/map", _get_map),
        (r"/executions/([^/]+)/events", _stream_events),
        (r"/executions/([^/]+)", _get_execution),
        (r"/", lambda self: self._static("index.html")),
        (r"/([A-Za-z0-9._-]+)", _static),
    ]
    _POST_ROUTES = [
        (r"/executions", _post_execution),
        (r"/executions/([^/]+)/branch", _post_branch),
        (r"/executions/([^/]+)/preempt", _post_preempt),
        (r"/executions/([^/]+)/command", _post_command),
    ]
    _PUT_ROUTES = [(r"/missions/([^/]+)", _put_mission)]
    _DELETE_ROUTES = [(r"/missions/([^/]+)", _delete_mission)]

    def do_GET(self) -> None:
        self._dispatch(self._GET_ROUTES)

    def do_POST(self) -> None:
        self._dispatch(self._POST_ROUTES)

    def do_PUT(self) -> None:
        self._dispatch(self._PUT_ROUTES)

    def do_DELETE(self) -> None:
        self._dispatch(self._DELETE_ROUTES)

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, cfg: ApiConfig, service: Service | None = None):
        self.service = service or Service(cfg)
        super().__init__((cfg.host, cfg.port), _Handler)

    def shutdown(self) -> None:
        self.service.stop()
        super().shutdown()


def serve(cfg: ApiConfig) -> ApiServer:
    """Blocking server; Ctrl-C (or .shutdown() from another thread) stops it."""
    server = ApiServer(cfg)
    try:
        server.serve_forever(poll_interval=0.1)
    except KeyboardInterrupt:
        pass
    finally:
        server.service.stop()
        server.server_close()
    return server


def start_background(cfg: ApiConfig) -> tuple[ApiServer, threading.Thread, str]:
    """Non-blocking server for tests and embedding; returns its base URL."""
    server = ApiServer(cfg)
    thread = threading.Thread(target=server.serve_forever, kwargs={"poll_interval": 0.05})
    thread.daemon = True
    thread.start()
    host, port = server.server_address[:2]
    return server, thread, f"http://{host}:{port}"
