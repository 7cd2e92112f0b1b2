"""Command line front end: simulate, serve, analyze, export-heatmap.

Exit codes: 0 success, 1 runtime/IO failure, 2 configuration errors
(including argparse usage errors and unknown scenario kinds). Structured
output (--format structured) is canonical JSON so identical inputs print
identical bytes.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path

from .errors import ConfigError, RecordingError
from .session import SessionConfig, compute_report, run_session
from .simulator import Scenario, WalkerParams
from .streamio import export_heatmap, load_recording, save_recording

DATA_DIR_ENV = "GAITWAY_DATA_DIR"


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "gaitway-data"))


def _load_config_file(path) -> tuple[SessionConfig, WalkerParams | None, Scenario | None]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(doc) - {"session", "params", "scenario"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    session = SessionConfig.from_dict(doc.get("session", {}))
    params = None
    if "params" in doc:
        try:
            params = WalkerParams(**doc["params"])
        except TypeError as err:
            raise ConfigError(f"bad walker params: {err}") from err
    scenario = None
    if "scenario" in doc:
        try:
            scenario = Scenario(**doc["scenario"])
        except TypeError as err:
            raise ConfigError(f"bad scenario: {err}") from err
    return session, params, scenario


def _resolve_inputs(args) -> tuple[SessionConfig, WalkerParams | None, Scenario | None]:
    if args.config:
        config, params, scenario = _load_config_file(args.config)
    else:
        config, params, scenario = SessionConfig(), None, None
    if args.seed is not None:
        config = SessionConfig.from_dict({**config.to_dict(), "seed": args.seed})
    return config, params, scenario


def _print_structured(report) -> None:
    sys.stdout.buffer.write(report.to_json_bytes() + b"\n")
    sys.stdout.buffer.flush()


def _fmt(value, unit="", digits=3):
    if value is None:
        return "n/a"
    return f"{value:.{digits}f}{unit}"


def _human_report(report, header: str) -> str:
    g = report.gait
    lines = [header,
             f"engine {report.engine_version}   seed {report.config['seed']}",
             f"flags: {', '.join(report.flags) if report.flags else 'none'}",
             "",
             f"steps {g['step_count']:>4}      cadence {_fmt(g['cadence'], ' steps/min', 2)}",
             f"speed {_fmt(g['mean_speed'], ' m/s')}   step length {_fmt(g['step_length_mean'], ' m')}"
             f" (sd {_fmt(g['step_length_sd'], ' m', 4)})",
             f"step width {_fmt(g['step_width_mean'], ' m')}   symmetry index {_fmt(g['symmetry_index'], '', 4)}"]
    if report.head is not None:
        h = report.head
        lines.append(f"head speed {_fmt(h['mean_speed'], ' m/s')}   "
                     f"rms ml {_fmt(h['rms_ml'], ' m', 4)}   "
                     f"yaw range {_fmt(h['yaw_range'], ' deg', 4)}")
    if report.trials:
        lines.append("")
        lines.append(f"obstacles: {len(report.trials)} trials, "
                     f"success rate {_fmt(report.success_rate, '', 2)}, "
                     f"lead clearance mean {_fmt(report.clearance_mean, ' m')}")
        if report.art.get("mean") is not None:
            lines.append(f"response time mean {_fmt(report.art['mean'], ' s')}"
                         f"   min {_fmt(report.art['min'], ' s')}")
    if report.recall is not None:
        r = report.recall
        lines.append("")
        lines.append(f"recall {r['correct']}/{r['total']} "
                     f"(accuracy {_fmt(r['accuracy'], '', 2)})")
    if report.costs:
        lines.append("")
        lines.append(f"dual-task costs vs {report.baseline}:")
        for metric, cost in sorted(report.costs.items()):
            lines.append(f"  {metric:<16} {_fmt(cost, ' %', 2)}")
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    config, params, scenario = _resolve_inputs(args)
    recording, report = run_session(config, params=params, scenario=scenario)
    out = Path(args.out) if args.out else default_data_dir() / f"session-{config.seed}"
    save_recording(recording, out, report=report)
    if args.format == "structured":
        _print_structured(report)
    else:
        print(_human_report(report, f"simulated session -> {out}"))
    return 0


def cmd_analyze(args) -> int:
    recording = load_recording(args.recording)
    report = compute_report(recording)
    if args.baseline:
        from .session import compare_sessions
        base = compute_report(load_recording(args.baseline))
        report.costs = compare_sessions(base, report)
        report.baseline = str(args.baseline)
    if args.out:
        Path(args.out).write_bytes(report.to_json_bytes() + b"\n")
    if args.format == "structured":
        _print_structured(report)
    else:
        print(_human_report(report, f"analysis of {args.recording}"))
    return 0


def cmd_export_heatmap(args) -> int:
    recording = load_recording(args.recording)
    if not recording.frames:
        raise RecordingError("recording holds no pressure frames")
    out = Path(args.out) if args.out else Path(args.recording) / "heatmap.pgm"
    _, stats = export_heatmap(recording.frames, args.mode, out)
    if args.format == "structured":
        sys.stdout.buffer.write(json.dumps(stats, sort_keys=True,
                                           separators=(",", ":")).encode() + b"\n")
    else:
        print(f"wrote {out} ({stats['width_px']}x{stats['height_px']}, "
              f"{args.mode} of {stats['frame_count']} frames, "
              f"max raw {stats['max']})")
    return 0


def cmd_serve(args) -> int:
    from .server import SessionServer, serve_control_channel

    config, params, scenario = _resolve_inputs(args)
    server = SessionServer(source=args.source, params=params, scenario=scenario,
                           pace=args.pace, default_config=config)

    async def _main():
        try:
            ws_server = await serve_control_channel(server, args.host, args.port)
        except OSError as err:
            print(f"cannot bind {args.host}:{args.port}: {err}", file=sys.stderr)
            return 1
        print(f"gaitway serving on ws://{args.host}:{args.port} "
              f"(source {args.source}, pace {args.pace}, seed {config.seed})",
              flush=True)
        await ws_server.wait_closed()
        return 0

    try:
        return asyncio.run(_main())
    except KeyboardInterrupt:
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaitway",
        description="Walking-balance assessment: simulate, serve, analyze.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("human", "structured"),
                       default="human", help="output style")

    p = sub.add_parser("simulate", help="run a synthetic session and save it")
    p.add_argument("--config", help="JSON file with session/params/scenario")
    p.add_argument("--seed", type=int, help="override the session seed")
    p.add_argument("--out", help="recording directory "
                   f"(default ${DATA_DIR_ENV} or ./gaitway-data)")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the live WebSocket control channel")
    p.add_argument("--config", help="JSON file with session/params/scenario")
    p.add_argument("--seed", type=int, help="override the session seed")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--source", default="sim",
                   help="'sim' or 'replay:<recording dir>'")
    p.add_argument("--pace", type=float, default=1.0,
                   help="playback speed multiplier")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("analyze", help="recompute the report for a recording")
    p.add_argument("recording", help="recording directory")
    p.add_argument("--baseline", help="baseline recording for dual-task costs")
    p.add_argument("--out", help="also write the report JSON here")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("export-heatmap", help="render a recording to 16-bit PGM")
    p.add_argument("recording", help="recording directory")
    p.add_argument("--mode", choices=("mean", "max"), default="mean")
    p.add_argument("--out", help="output .pgm path")
    common(p)
    p.set_defaults(func=cmd_export_heatmap)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (RecordingError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
