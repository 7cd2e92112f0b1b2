#!/usr/bin/env python3
"""Sweep load conditions against a quiet baseline and tabulate costs.

Runs one quiet session plus one session per load condition (busy sound,
busy visual, cognitive task, all three combined) for each seed, then prints
the per-metric cost averaged across seeds. Positive cost always means worse
under load.
"""

from __future__ import annotations

import argparse
import statistics

from gaitway.session import (COMPARE_METRICS, SessionConfig, compare_sessions,
                             run_session)

CONDITIONS = [
    ("busy sound", {"sound": {"level": "busy", "source_count": 4,
                              "loudness_tier": "high",
                              "spectral_tier": "broad"}}),
    ("busy visual", {"visual": {"level": "busy", "avatar_count": 6,
                                "avatar_speed": 1.2}}),
    ("cognitive", {"cognitive": True}),
    ("combined", {"sound": {"level": "busy", "source_count": 4,
                            "loudness_tier": "high",
                            "spectral_tier": "broad"},
                  "visual": {"level": "busy", "avatar_count": 6,
                             "avatar_speed": 1.2},
                  "cognitive": True}),
]


def session_report(base: dict, condition: dict | None, seed: int):
    cfg = dict(base, seed=seed)
    if condition is not None:
        cfg["condition"] = condition
    _, report = run_session(SessionConfig.from_dict(cfg))
    return report


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=3,
                        help="number of seeds to average over")
    parser.add_argument("--first-seed", type=int, default=0)
    parser.add_argument("--tiles", type=int, default=12)
    parser.add_argument("--obstacles", type=int, default=2)
    parser.add_argument("--mode", choices=("anticipated", "unanticipated"),
                        default="unanticipated",
                        help="unanticipated fills the art column")
    args = parser.parse_args()

    base = {
        "walkway": {"tile_count": args.tiles},
        "duration": 60.0,
        "obstacle": {"mode": args.mode, "height_mm": 100,
                     "count": args.obstacles},
    }
    seeds = range(args.first_seed, args.first_seed + args.seeds)
    metric_names = [name for name, _, _ in COMPARE_METRICS]

    # condition -> metric -> list of per-seed costs (None dropped)
    sweep: dict[str, dict[str, list[float]]] = {
        label: {m: [] for m in metric_names} for label, _ in CONDITIONS}
    for seed in seeds:
        baseline = session_report(base, None, seed)
        for label, condition in CONDITIONS:
            loaded = session_report(base, condition, seed)
            costs = compare_sessions(baseline, loaded)["costs"]
            for name, value in costs.items():
                if value is not None:
                    sweep[label][name].append(value)

    width = max(len(label) for label, _ in CONDITIONS)
    header = f"{'condition':<{width}}" + "".join(
        f"  {m:>{max(len(m), 7)}}" for m in metric_names)
    print(f"load costs in %, averaged over seeds "
          f"{seeds.start}..{seeds.stop - 1} (positive = worse)")
    print(header)
    print("-" * len(header))
    for label, _ in CONDITIONS:
        cells = []
        for m in metric_names:
            values = sweep[label][m]
            text = f"{statistics.mean(values):+.1f}" if values else "n/a"
            cells.append(f"  {text:>{max(len(m), 7)}}")
        print(f"{label:<{width}}" + "".join(cells))


if __name__ == "__main__":
    main()
