#!/usr/bin/env python3
"""Generate the synthetic multi-subject gesture dataset (and optionally
train a classifier on it, withholding one subject for validation)."""

import argparse

from anchorline.gestures import (
    TrainConfig,
    default_subjects,
    generate_dataset,
    save_dataset,
    save_net,
    train,
    windows_by_subject,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/gestures.jsonl")
    parser.add_argument("--subjects", type=int, default=6)
    parser.add_argument("--reps", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--train", metavar="NET_PATH", default=None,
                        help="also train and save a network here")
    parser.add_argument("--holdout", default="subject-5")
    args = parser.parse_args()

    recordings = generate_dataset(default_subjects(args.subjects, seed=args.seed), reps=args.reps)
    save_dataset(recordings, args.out)
    print(f"wrote {len(recordings)} recordings to {args.out}")

    if args.train:
        grouped = windows_by_subject(recordings)
        net, report = train(grouped, holdout=args.holdout, cfg=TrainConfig())
        save_net(net, args.train)
        print(
            f"trained on {report.n_train} windows, holdout {report.holdout_subject}: "
            f"loss {report.initial_loss:.3f} -> {report.final_loss:.3f}, "
            f"accuracy {report.holdout_accuracy:.3f}; wrote {args.train}"
        )


if __name__ == "__main__":
    main()
