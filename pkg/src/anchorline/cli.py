"""Command-line entry points.

Exit codes: 0 success, 1 domain error (printed to stderr), 2 usage error
(argparse). Subcommands: convert-map, execute, train-gestures, classify,
serve.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import mesh as meshio
from . import nav
from .anchors import AnchorStore, RelocModel, UnknownAnchor, StoreWriteFailure
from .executor import Execution, ExecutorConfig, ExecutorError, Phase
from .geometry import Pose
from .gestures import (
    ClassMissing,
    GestureLabel,
    NonFiniteLoss,
    TooFewFrames,
    TrainConfig,
    infer,
    load_dataset,
    load_net,
    save_net,
    train,
    window_stream,
    windows_by_subject,
)
from .mission import MissionError, MissionStore, UnknownMission
from .occupancy import SliceConfig, SliceOutOfRange, extract_slice, load_grid, save_grid
from .sdf import sdf_from_mesh
from .service import CONFIG_ENV_VAR, ApiConfig, serve

DOMAIN_ERRORS = (
    MissionError,
    UnknownMission,
    UnknownAnchor,
    StoreWriteFailure,
    meshio.ParseError,
    meshio.EmptyMesh,
    SliceOutOfRange,
    nav.PlanningError,
    ExecutorError,
    ClassMissing,
    NonFiniteLoss,
    TooFewFrames,
    ValueError,
    OSError,
)


def _cmd_convert_map(args: argparse.Namespace) -> int:
    mesh = meshio.load_mesh(args.mesh)
    if mesh.dropped_faces:
        print(f"dropped {mesh.dropped_faces} degenerate faces", file=sys.stderr)
    band = args.occupied_band if args.occupied_band is not None else args.resolution
    sdf = sdf_from_mesh(mesh, args.resolution, margin_voxels=args.margin)
    grid = extract_slice(sdf, SliceConfig(z_height=args.slice_height, occupied_band=band))
    save_grid(grid, args.out)
    print(
        json.dumps(
            {
                "out": args.out,
                "width": grid.width,
                "height": grid.height,
                "resolution": grid.resolution,
                "origin": grid.origin_xy.tolist(),
            }
        )
    )
    return 0


def _cmd_execute(args: argparse.Namespace) -> int:
    store = MissionStore(args.missions_dir)
    anchors = AnchorStore.open(args.anchors)
    grid = load_grid(args.grid)
    model = RelocModel(sigma_t0=args.sigma_t, sigma_r0=args.sigma_r, seed=args.seed)
    choices: dict[str, int] = {}
    for spec in args.choose or []:
        node, _, order = spec.partition("=")
        if not order:
            raise ValueError(f"--choose needs node=order, got {spec!r}")
        choices[node] = int(order)
    ex = Execution.start(
        store,
        anchors,
        grid,
        args.mission,
        model,
        cfg=ExecutorConfig(max_steps=args.max_steps),
        start_pose=Pose.from_xyz_yaw(args.start_x, args.start_y, yaw=args.start_yaw),
    )

    def on_branch(node: str, options: list[dict]) -> int:
        if node not in choices:
            raise ExecutorError(
                f"interactive branch at {node!r}; pass --choose {node}=<order> "
                f"(options: {[o['order'] for o in options]})"
            )
        return choices[node]

    state = ex.run(dt=args.dt, on_branch=on_branch)
    print(
        json.dumps(
            {
                "state": state.phase.value,
                "reason": state.reason,
                "robot": {"x": ex.robot.x, "y": ex.robot.y, "yaw": ex.robot.yaw},
                "captures": [
                    {"waypoint": c.waypoint_id, "x": c.x, "y": c.y, "yaw": c.yaw}
                    for c in ex.captures
                ],
                "events": len(ex.events),
            }
        )
    )
    return 0 if state.phase == Phase.COMPLETED else 1


def _cmd_train_gestures(args: argparse.Namespace) -> int:
    recordings = load_dataset(args.data)
    grouped = windows_by_subject(recordings)
    cfg = TrainConfig(
        epochs=args.epochs, learning_rate=args.lr, batch_size=args.batch, seed=args.seed
    )
    net, report = train(grouped, args.holdout, cfg)
    save_net(net, args.out)
    print(
        json.dumps(
            {
                "out": args.out,
                "holdout": report.holdout_subject,
                "initial_loss": report.initial_loss,
                "final_loss": report.final_loss,
                "holdout_accuracy": report.holdout_accuracy,
                "train_windows": report.n_train,
                "holdout_windows": report.n_holdout,
            }
        )
    )
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    net = load_net(args.net)
    for recording in load_dataset(args.data):
        for window in window_stream(recording.hand_frames()):
            confidences, label = infer(net, window)
            print(
                json.dumps(
                    {
                        "t": window.end_time,
                        "label": label.wire,
                        "confidences": [float(c) for c in confidences],
                    }
                )
            )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    if args.config:
        cfg = ApiConfig.from_file(args.config)
        if args.static:
            cfg.static_dir = args.static
    elif os.environ.get(CONFIG_ENV_VAR):
        cfg = ApiConfig.from_env()
        if args.static:
            cfg.static_dir = args.static
    else:
        for name in ("missions_dir", "anchors", "grid"):
            if getattr(args, name) is None:
                raise ValueError(f"--{name.replace('_', '-')} is required without --config")
        cfg = ApiConfig(
            mission_dir=args.missions_dir,
            anchor_path=args.anchors,
            grid_path=args.grid,
            host=args.host,
            port=args.port,
            reloc=RelocModel(seed=args.seed),
            static_dir=args.static,
        )
    print(f"listening on http://{cfg.host}:{cfg.port}", file=sys.stderr)
    serve(cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anchorline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert-map", help="mesh -> SDF -> 2D occupancy grid")
    p.add_argument("--mesh", required=True)
    p.add_argument("--resolution", type=float, default=0.05)
    p.add_argument("--slice-height", type=float, default=0.5)
    p.add_argument("--occupied-band", type=float, default=None,
                   help="defaults to the resolution")
    p.add_argument("--margin", type=int, default=1, help="outside margin in voxels")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_convert_map)

    p = sub.add_parser("execute", help="run a stored mission headless")
    p.add_argument("--mission", required=True)
    p.add_argument("--missions-dir", required=True)
    p.add_argument("--anchors", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-t", type=float, default=0.0)
    p.add_argument("--sigma-r", type=float, default=0.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--start-x", type=float, default=0.0)
    p.add_argument("--start-y", type=float, default=0.0)
    p.add_argument("--start-yaw", type=float, default=0.0)
    p.add_argument("--choose", action="append", metavar="NODE=ORDER",
                   help="answer for an interactive branch; repeatable")
    p.set_defaults(fn=_cmd_execute)

    p = sub.add_parser("train-gestures", help="train the gesture classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--holdout", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train_gestures)

    p = sub.add_parser("classify", help="classify recordings window by window")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None, help=f"JSON config (or ${CONFIG_ENV_VAR})")
    p.add_argument("--missions-dir", default=None)
    p.add_argument("--anchors", default=None)
    p.add_argument("--grid", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--static", default=None, help="directory of UI files to serve at /")
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
