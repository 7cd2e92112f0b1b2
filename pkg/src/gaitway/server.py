"""Live session service: a WebSocket endpoint speaking JSON control messages
and binary pressure frames.

Text messages carry control (configure_session, start_session, abort,
submit_recall, subscribe_frames, spawn_obstacle); binary messages are wire
frames pushed at each client's requested decimation. One controller at a
time; any number of observers. Every client message is acknowledged or
answered with an error naming the offending field. Slow consumers lose
frames, never control messages, and never block ingestion.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
from pathlib import Path

import websockets

from . import __version__
from .errors import ConfigError, SessionStateError
from .pressure import center_of_force
from .session import SessionConfig, SessionEngine, compute_report
from .simulator import Scenario, WalkerParams, apply_load_modifiers, simulate
from .streamio import encode_frame, load_recording

DEFAULT_FRAME_FPS = 15.0
METRICS_INTERVAL_S = 0.5
_FIELD_HINTS = ("height", "duration", "count", "mode", "tile_count", "seed",
                "countdown", "numbers", "fps")


def _field_hint(message: str) -> str | None:
    for hint in _FIELD_HINTS:
        if hint in message:
            return hint
    return None


class _Client:
    _ids = 0

    def __init__(self, ws):
        _Client._ids += 1
        self.id = _Client._ids
        self.ws = ws
        self.frame_fps: float | None = None
        self.last_frame_time: float | None = None
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=64)

    def send_json(self, obj: dict) -> None:
        """Control messages are never dropped; block-free via unbounded put."""
        self.queue.put_nowait(json.dumps(obj))

    def send_frame(self, frame_time: float, payload: bytes) -> None:
        """Frames are decimated to the requested rate and dropped when the
        client's queue is saturated."""
        if self.frame_fps is None:
            return
        if (self.last_frame_time is not None
                and frame_time - self.last_frame_time < 1.0 / self.frame_fps - 1e-9):
            return
        try:
            self.queue.put_nowait(payload)
            self.last_frame_time = frame_time
        except asyncio.QueueFull:
            pass

    async def pump(self):
        while True:
            item = await self.queue.get()
            await self.ws.send(item)


class SessionServer:
    """Holds one engine at a time; a fresh engine per configured session."""

    def __init__(self, source: str = "sim", params: WalkerParams | None = None,
                 scenario: Scenario | None = None, pace: float = 1.0,
                 default_config: SessionConfig | None = None):
        if pace <= 0:
            raise ConfigError("pace must be positive")
        self.source = source
        self.params = params
        self.scenario = scenario or Scenario.clean()
        self.pace = pace
        self.default_config = default_config
        self.replay = None
        if source.startswith("replay:"):
            directory = Path(source.split(":", 1)[1])
            if not directory.is_dir():
                raise ConfigError(f"replay directory {directory} does not exist")
            self.replay = load_recording(directory)
        elif source != "sim":
            raise ConfigError(f"unknown source {source!r}")
        self.engine = SessionEngine()
        self.clients: set[_Client] = set()
        self.controller: _Client | None = None
        self._run_task: asyncio.Task | None = None
        self._last_frame = None

    # -- broadcast plumbing -------------------------------------------------

    def _broadcast(self, obj: dict) -> None:
        for client in list(self.clients):
            client.send_json(obj)

    def _broadcast_frame(self, frame) -> None:
        self._last_frame = frame
        payload = encode_frame(frame)
        for client in list(self.clients):
            client.send_frame(frame.time_s, payload)

    def _emit_events(self, events) -> None:
        for event in events:
            msg = _event_message(event)
            if msg is not None:
                self._broadcast(msg)

    def _state_message(self) -> dict:
        return {"type": "state_update", "state": self.engine.state}

    # -- session run loop ---------------------------------------------------

    def _fresh_engine_if_done(self) -> None:
        if self.engine.state == "complete":
            self.engine = SessionEngine(bank=self.engine._bank)

    def _make_streams(self, config: SessionConfig):
        if self.replay is not None:
            rec = self.replay
            return rec.frames, rec.head_poses, rec.foot_poses, None
        params = self.params or WalkerParams(speed=1.2, cadence=110.0,
                                             noise_seed=config.seed)
        params = apply_load_modifiers(params, config.condition)
        windows = ()
        if self.engine.schedule is not None:
            windows = tuple((e.start_time, e.end_time)
                            for e in self.engine.schedule.entries)
        sim = simulate(params, self.scenario, walkway=config.walkway,
                       duration=config.duration,
                       obstacles=tuple(self.engine.obstacles),
                       sentence_windows=windows)
        return sim.frames, sim.head_poses, sim.foot_poses, sim.end_time

    async def _run_session(self) -> None:
        engine = self.engine
        config = engine.config
        self._emit_events(engine.start())
        await asyncio.sleep(config.countdown_s / self.pace)
        self._emit_events(engine.begin_walking())

        frames, head, feet, end_time = self._make_streams(config)
        feed = []
        feed.extend((p.time, 0, "head", p) for p in head)
        feed.extend((p.time, 1, "foot", p) for p in feet)
        feed.extend((f.time_s, 2, "frame", f) for f in frames)
        feed.sort(key=lambda item: (item[0], item[1]))

        loop = asyncio.get_running_loop()
        t0 = loop.time()
        next_metrics = 0.0
        for t, _, kind, item in feed:
            delay = t / self.pace - (loop.time() - t0)
            if delay > 0:
                await asyncio.sleep(delay)
            if kind == "head":
                self._emit_events(engine.ingest_head(item))
            elif kind == "foot":
                self._emit_events(engine.ingest_foot(item))
            else:
                self._emit_events(engine.ingest_frame(item))
                self._broadcast_frame(item)
            if t >= next_metrics:
                self._broadcast(self._metrics_message(t))
                next_metrics = t + METRICS_INTERVAL_S

        self._emit_events(engine.end_walking(end_time))
        if engine.state == "complete":
            self._broadcast({"type": "session_report",
                             "report": engine.report.to_dict()})

    def _metrics_message(self, t: float) -> dict:
        engine = self.engine
        rec = engine.recording
        head_x = head_speed = None
        if rec.head_poses:
            head_x = rec.head_poses[-1].position[0]
            if len(rec.head_poses) >= 2:
                a, b = rec.head_poses[-2], rec.head_poses[-1]
                dt = b.time - a.time
                if dt > 0:
                    head_speed = (b.position[0] - a.position[0]) / dt
        cof = center_of_force(self._last_frame) if self._last_frame is not None else None
        results = [e for e in rec.events if e.kind == "crossing_result"]
        succeeded = sum(1 for e in results if e.payload.get("success"))
        clearances = [e.payload.get("lead_clearance") for e in results
                      if e.payload.get("lead_clearance") is not None]
        return {
            "type": "metrics_update",
            "time": t,
            "head_x": head_x,
            "head_speed": head_speed,
            "cof": list(cof) if cof is not None else None,
            "trials_resolved": len(results),
            "trials_succeeded": succeeded,
            "last_clearance": clearances[-1] if clearances else None,
            "spawned": sum(1 for e in rec.events if e.kind == "obstacle_spawn"),
        }

    # -- control handling ---------------------------------------------------

    async def handle_message(self, client: _Client, raw) -> None:
        if isinstance(raw, (bytes, bytearray)):
            client.send_json({"type": "error",
                              "message": "binary messages are server-to-client only"})
            return
        try:
            msg = json.loads(raw)
            if not isinstance(msg, dict) or "type" not in msg:
                raise ValueError("message must be an object with a 'type'")
        except ValueError as err:
            client.send_json({"type": "error", "message": f"malformed message: {err}"})
            return
        mtype = msg["type"]
        try:
            await self._dispatch(client, mtype, msg)
        except (ConfigError, SessionStateError, ValueError) as err:
            client.send_json({"type": "error", "message": str(err),
                              "field": _field_hint(str(err)), "of": mtype})

    async def _dispatch(self, client: _Client, mtype: str, msg: dict) -> None:
        if mtype == "subscribe_frames":
            fps = float(msg.get("fps", DEFAULT_FRAME_FPS))
            if not 0 < fps <= 100:
                raise ConfigError("fps must be in (0, 100]")
            client.frame_fps = fps
            client.last_frame_time = None
            client.send_json({"type": "ack", "of": mtype, "fps": fps})
            return

        if mtype in ("configure_session", "start_session", "abort",
                     "submit_recall", "spawn_obstacle"):
            if self.controller is None:
                self.controller = client
            if self.controller is not client:
                client.send_json({"type": "error", "of": mtype,
                                  "message": "busy: another controller is active"})
                return

        if mtype == "configure_session":
            self._fresh_engine_if_done()
            if self.replay is not None:
                config = self.replay.config
            else:
                config = SessionConfig.from_dict(msg.get("config", {}))
            self.engine.configure(config)
            client.send_json({"type": "ack", "of": mtype,
                              "config": config.to_dict()})
            self._broadcast(self._state_message())
        elif mtype == "start_session":
            if self.engine.state != "idle" or self.engine.config is None:
                raise SessionStateError("configure_session before start_session")
            client.send_json({"type": "ack", "of": mtype})
            self._run_task = asyncio.create_task(self._run_session())
        elif mtype == "abort":
            if self._run_task is not None:
                self._run_task.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await self._run_task
                self._run_task = None
            events = self.engine.abort()
            client.send_json({"type": "ack", "of": mtype})
            self._emit_events(events)
            self._broadcast({"type": "session_report",
                             "report": self.engine.report.to_dict()})
        elif mtype == "submit_recall":
            numbers = msg.get("numbers")
            if (not isinstance(numbers, list)
                    or any(not isinstance(n, int) for n in numbers)):
                raise ConfigError("numbers must be a list of integers")
            events = self.engine.submit_recall(numbers)
            client.send_json({"type": "ack", "of": mtype})
            self._emit_events(events)
            self._broadcast({"type": "session_report",
                             "report": self.engine.report.to_dict()})
        elif mtype == "spawn_obstacle":
            event = self._force_spawn()
            client.send_json({"type": "ack", "of": mtype,
                              "spawned": event is not None})
            if event is not None:
                self._emit_events([event])
        else:
            client.send_json({"type": "error", "of": mtype,
                              "message": f"unknown message type {mtype!r}"})

    def _force_spawn(self):
        engine = self.engine
        if engine.state != "walking":
            raise SessionStateError("obstacles can spawn only during walking")
        for monitor in engine._monitors:
            if monitor.spec.mode == "unanticipated" and monitor.spawn_time is None:
                monitor.spawn_time = engine._clock
                return engine._emit(engine._clock, "obstacle_spawn", {
                    "obstacle_id": monitor.spec.id,
                    "x_position": monitor.spec.x_position,
                    "height_mm": monitor.spec.height_mm,
                    "manual": True})
        return None

    # -- connection lifecycle -----------------------------------------------

    async def handler(self, ws) -> None:
        client = _Client(ws)
        self.clients.add(client)
        pump = asyncio.create_task(client.pump())
        client.send_json({"type": "hello", "engine_version": __version__,
                          "state": self.engine.state})
        try:
            async for raw in ws:
                await self.handle_message(client, raw)
        except websockets.ConnectionClosed:
            pass
        finally:
            pump.cancel()
            self.clients.discard(client)
            if self.controller is client:
                self.controller = None


def _event_message(event) -> dict | None:
    kind = event.kind
    if kind == "state_change":
        return {"type": "state_update", "state": event.payload["to"],
                "time": event.time}
    if kind == "obstacle_spawn":
        return {"type": "obstacle_event", "event": "spawn", "time": event.time,
                **event.payload}
    if kind == "crossing_result":
        return {"type": "obstacle_event", "event": "result", "time": event.time,
                **event.payload}
    if kind == "cue":
        return {"type": "obstacle_event", "event": "cue", "time": event.time,
                **event.payload}
    if kind in ("sentence_start", "sentence_end"):
        return {"type": "sentence_event", "edge": kind.split("_")[1],
                "time": event.time, **event.payload}
    return None


async def serve_control_channel(server: SessionServer, host: str = "127.0.0.1",
                                port: int = 8765):
    """Bind the control channel; returns the listening websocket server."""
    return await websockets.serve(server.handler, host, port, max_size=2 ** 24)
