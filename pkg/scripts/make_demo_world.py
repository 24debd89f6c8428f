#!/usr/bin/env python3
"""Build a self-contained demo world: a walled room mesh, its occupancy
grid, an anchor store, a branching inspection mission, and a service
config. Everything lands in one directory ready for `anchorline serve`.
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np

from anchorline.anchors import AnchorPolicy, AnchorStore
from anchorline.geometry import Pose
from anchorline.mesh import save_obj
from anchorline.mission import INTERACTIVE, MissionStore, add_waypoint, connect, new_mission, with_strategy
from anchorline.occupancy import SliceConfig, extract_slice, save_grid
from anchorline.sdf import sdf_from_mesh
from anchorline.shapes import walled_room

# waypoints inside the 10x10 room, with two inspection poses and one
# interactive branch at the third node
WAYPOINTS = [
    (3.8, 5.0, 0.0, False),
    (4.6, 5.8, math.pi / 2, True),
    (5.4, 5.0, 0.0, True),
    (6.4, 6.2, math.pi / 2, False),
    (6.4, 3.6, -math.pi / 2, False),
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--resolution", type=float, default=0.05)
    parser.add_argument("--slice-height", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    room = walled_room(10.0, 10.0, 3.0, 0.2)
    save_obj(room, out / "room.obj")
    print(f"wrote {out / 'room.obj'} ({len(room.triangles)} triangles)")

    sdf = sdf_from_mesh(room, args.resolution, margin_voxels=2)
    grid = extract_slice(
        sdf, SliceConfig(z_height=args.slice_height, occupied_band=args.resolution)
    )
    save_grid(grid, out / "map.grid.json")
    print(f"wrote {out / 'map.grid.json'} ({grid.width}x{grid.height} @ {grid.resolution} m)")

    rng = np.random.default_rng(args.seed)
    anchors = AnchorStore(out / "anchors.json")
    mission = new_mission("m-demo")
    wps = []
    for x, y, yaw, inspect in WAYPOINTS:
        mission, wp = add_waypoint(
            mission, anchors, Pose.from_xyz_yaw(x, y, 0.0, yaw),
            is_inspection=inspect, policy=AnchorPolicy(), rng=rng,
        )
        wps.append(wp)
    for a, b in zip(wps, wps[1:3]):
        mission = connect(mission, a.id, b.id)
    mission = connect(mission, wps[2].id, wps[3].id)
    mission = connect(mission, wps[2].id, wps[4].id)
    mission = with_strategy(mission, wps[2].id, INTERACTIVE)
    missions = MissionStore(out / "missions")
    missions.save(mission)
    print(f"wrote mission {mission.id} with {len(anchors)} anchors")

    config = {
        "mission_dir": str(out / "missions"),
        "anchor_path": str(out / "anchors.json"),
        "grid_path": str(out / "map.grid.json"),
        "host": "127.0.0.1",
        "port": 8750,
        "start_x": 3.0,
        "start_y": 5.0,
        "start_yaw": 0.0,
        "reloc": {"sigma_t0": 0.01, "sigma_r0": 0.01, "seed": args.seed},
    }
    (out / "config.json").write_text(json.dumps(config, indent=2))
    print(f"wrote {out / 'config.json'}")
    print()
    print("next steps:")
    print(f"  anchorline serve --config {out / 'config.json'} --static frontend/dist")
    print(f"  anchorline execute --mission {mission.id} --missions-dir {out / 'missions'} "
          f"--anchors {out / 'anchors.json'} --grid {out / 'map.grid.json'} "
          f"--start-x 3 --start-y 5 --choose {wps[2].id}=0")


if __name__ == "__main__":
    main()
