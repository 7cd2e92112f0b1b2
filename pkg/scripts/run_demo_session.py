#!/usr/bin/env python3
"""Drive one live session end to end over the WebSocket control channel.

Spawns an in-process server (unless --uri points at a running one), then
subscribes to frames, configures, starts, streams to completion, and prints
the report summary. When the server was spawned here, the live report is
also checked byte-for-byte against an offline recompute of the same
configuration; a mismatch exits nonzero.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import websockets

from gaitway.server import SessionServer, serve_control_channel
from gaitway.session import SessionConfig, run_session

RECV_TIMEOUT_S = 30.0


def build_config(args) -> dict:
    config = {
        "walkway": {"tile_count": args.tiles},
        "duration": 60.0,
        "countdown_s": args.countdown,
        "seed": args.seed,
        "obstacle": {"mode": args.mode, "height_mm": args.height,
                     "count": args.count},
    }
    if args.cognitive:
        config["condition"] = {"cognitive": True}
    return config


async def drive(uri: str, config: dict, fps: float) -> tuple[dict, list[int], int]:
    """Run the session; returns (report, presented numbers, frame count)."""
    presented: list[int] = []
    frames = 0
    async with websockets.connect(uri) as ws:
        async def send(obj):
            await ws.send(json.dumps(obj))

        await send({"type": "subscribe_frames", "fps": fps})
        await send({"type": "configure_session", "config": config})
        await send({"type": "start_session"})

        while True:
            raw = await asyncio.wait_for(ws.recv(), RECV_TIMEOUT_S)
            if isinstance(raw, (bytes, bytearray)):
                frames += 1
                continue
            msg = json.loads(raw)
            mtype = msg["type"]
            if mtype == "hello":
                print(f"connected: engine {msg['engine_version']}")
            elif mtype == "error":
                print(f"server error: {msg['message']}", file=sys.stderr)
                raise SystemExit(2)
            elif mtype == "state_update":
                print(f"state -> {msg['state']}")
                if msg["state"] == "recall":
                    print(f"submitting recall: {presented}")
                    await send({"type": "submit_recall", "numbers": presented})
            elif mtype == "metrics_update":
                head = msg["head_x"]
                print(f"  t={msg['time']:5.2f}s  head_x="
                      f"{'n/a' if head is None else f'{head:.2f}'}"
                      f"  spawned={msg['spawned']}"
                      f"  resolved={msg['trials_resolved']}")
            elif mtype == "obstacle_event":
                if msg["event"] == "spawn":
                    print(f"  obstacle {msg['obstacle_id']} spawned at "
                          f"x={msg['x_position']} ({msg['height_mm']} mm)")
                elif msg["event"] == "result":
                    verdict = "success" if msg["success"] else "collision"
                    print(f"  obstacle {msg['obstacle_id']}: {verdict}")
            elif mtype == "sentence_event" and msg["edge"] == "start":
                presented.extend(msg["numbers"])
                print(f"  sentence {msg['sentence_id']}: {msg['text']!r}")
            elif mtype == "session_report":
                return msg["report"], presented, frames


def summarize(report: dict, frames: int) -> None:
    gait = report["gait"]
    print()
    print(f"frames received: {frames}")
    cadence = gait["cadence"]
    speed = gait["mean_speed"]
    print(f"steps {gait['step_count']}, "
          f"cadence {'n/a' if cadence is None else f'{cadence:.1f}'}, "
          f"speed {'n/a' if speed is None else f'{speed:.3f} m/s'}")
    if report["success_rate"] is not None:
        print(f"obstacle success rate {report['success_rate']:.2f}")
    if report["recall"] is not None:
        recall = report["recall"]
        print(f"recall {recall['correct']}/{recall['total']} "
              f"(accuracy {recall['accuracy']:.2f})")
    print(f"flags: {report['flags'] or 'none'}")


async def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--uri", help="connect here instead of spawning a server")
    parser.add_argument("--port", type=int, default=0,
                        help="port for the spawned server (0 = ephemeral)")
    parser.add_argument("--pace", type=float, default=25.0)
    parser.add_argument("--fps", type=float, default=15.0)
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--tiles", type=int, default=9)
    parser.add_argument("--mode", choices=("anticipated", "unanticipated"),
                        default="anticipated")
    parser.add_argument("--height", type=int, default=100)
    parser.add_argument("--count", type=int, default=1)
    parser.add_argument("--countdown", type=float, default=0.2)
    parser.add_argument("--cognitive", action="store_true")
    args = parser.parse_args()

    config = build_config(args)
    ws_server = None
    uri = args.uri
    if uri is None:
        server = SessionServer(source="sim", pace=args.pace)
        ws_server = await serve_control_channel(server, "127.0.0.1", args.port)
        port = ws_server.sockets[0].getsockname()[1]
        uri = f"ws://127.0.0.1:{port}"
        print(f"spawned server on {uri} (pace {args.pace})")

    try:
        report, presented, frames = await drive(uri, config, args.fps)
    finally:
        if ws_server is not None:
            ws_server.close()
            await ws_server.wait_closed()

    summarize(report, frames)

    if args.uri is None:
        # same config, batch speed: the live report must recompute exactly
        reported = presented if config.get("condition", {}).get("cognitive") else "auto"
        _, offline = run_session(SessionConfig.from_dict(config),
                                 reported_numbers=reported)
        live_bytes = json.dumps(report, sort_keys=True,
                                separators=(",", ":")).encode()
        if live_bytes != offline.to_json_bytes():
            print("MISMATCH: live report != offline recompute", file=sys.stderr)
            return 1
        print("live report == offline recompute")
    return 0


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
