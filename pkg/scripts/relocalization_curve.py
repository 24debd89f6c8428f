#!/usr/bin/env python3
"""Monte Carlo sweep of the relocalization model: recall and mean pose
error as a function of query distance."""

import argparse

import numpy as np

from anchorline.anchors import AnchorStore, RelocModel, create_anchor, query
from anchorline.geometry import Pose


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sigma-t", type=float, default=0.01)
    parser.add_argument("--sigma-r", type=float, default=0.01)
    args = parser.parse_args()

    model = RelocModel(sigma_t0=args.sigma_t, sigma_r0=args.sigma_r, seed=args.seed)
    print(f"{'d [m]':>6} {'recall':>8} {'mean |err| [m]':>15}")
    for d in np.arange(0.5, 9.1, 0.5):
        store = AnchorStore()
        create_anchor(store, Pose.identity(), rng=np.random.default_rng(0), anchor_id="a")
        device = Pose.from_xyz_yaw(float(d), 0.0, 0.0)
        true_t = np.array([-float(d), 0.0, 0.0])
        errors = []
        hits = 0
        for _ in range(args.samples):
            result = query(store, "a", device, model)
            if result is None:
                continue
            hits += 1
            errors.append(np.linalg.norm(result.anchor_in_query.t - true_t))
        recall = hits / args.samples
        mean_err = float(np.mean(errors)) if errors else float("nan")
        print(f"{d:6.1f} {recall:8.3f} {mean_err:15.4f}")


if __name__ == "__main__":
    main()
