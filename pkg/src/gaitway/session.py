"""Session orchestration: the assessment state machine, the recording it
persists, the deterministic report, and session-to-session comparison.

State order is fixed: idle -> countdown -> walking -> recall (only when the
cognitive condition is on) -> complete. Session time zero is the start of
Walking; countdown bookkeeping is stamped 0. The live path and the offline
path share compute_report, so a report recomputed from a recording is
byte-identical to the one returned at session end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__ as ENGINE_VERSION
from .dualtask import (
    LoadCondition,
    PlaybackSchedule,
    load_sentence_bank,
    presented_numbers,
    schedule_sentences,
    score_recall,
)
from .errors import ConfigError, SessionStateError
from .gait import detect_events, foot_angle, gait_summary, head_kinematics, step_metrics
from .obstacles import (
    ObstacleSpec,
    TrialResult,
    check_crossing,
    make_schedule,
    success_rate,
)
from .poses import FootPose, HeadPose
from .pressure import FootTracker, cluster_feet, segment_blobs, side_force_series
from .walkway import WalkwayConfig, contact_mask

STATES = ("idle", "countdown", "walking", "recall", "complete")
STREAM_GAP_S = 0.5
DEFAULT_COUNTDOWN_S = 3.0


@dataclass(frozen=True)
class ObstaclePlan:
    mode: str = "anticipated"      # anticipated | unanticipated
    height_mm: int = 100
    count: int = 4


@dataclass(frozen=True)
class SessionConfig:
    walkway: WalkwayConfig = field(default_factory=lambda: WalkwayConfig(tile_count=20))
    duration: float = 60.0
    obstacle: ObstaclePlan | None = field(default_factory=ObstaclePlan)
    condition: LoadCondition = field(default_factory=LoadCondition)
    seed: int = 0
    participant: str = "anon"
    countdown_s: float = DEFAULT_COUNTDOWN_S

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("session duration must be positive")
        if self.countdown_s < 0:
            raise ConfigError("countdown must be nonnegative")

    def to_dict(self) -> dict:
        cond = self.condition
        return {
            "walkway": {"tile_count": self.walkway.tile_count,
                        "origin": self.walkway.origin},
            "duration": self.duration,
            "obstacle": None if self.obstacle is None else {
                "mode": self.obstacle.mode,
                "height_mm": self.obstacle.height_mm,
                "count": self.obstacle.count,
            },
            "condition": {
                "sound": {"level": cond.sound.level,
                          "source_count": cond.sound.source_count,
                          "loudness_tier": cond.sound.loudness_tier,
                          "spectral_tier": cond.sound.spectral_tier},
                "visual": {"level": cond.visual.level,
                           "avatar_count": cond.visual.avatar_count,
                           "avatar_speed": cond.visual.avatar_speed},
                "cognitive": cond.cognitive,
            },
            "seed": self.seed,
            "participant": self.participant,
            "countdown_s": self.countdown_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        """Accepts partial dicts; missing keys fall back to the defaults.
        An explicit null obstacle means no obstacles at all."""
        from .dualtask import SoundLevel, VisualLoad

        if not isinstance(d, dict):
            raise ConfigError("session config must be an object")
        unknown = set(d) - {"walkway", "duration", "obstacle", "condition",
                            "seed", "participant", "countdown_s"}
        if unknown:
            raise ConfigError(f"unknown session config keys: {sorted(unknown)}")
        cond = d.get("condition") or {}
        sound = cond.get("sound") or {}
        visual = cond.get("visual") or {}
        walkway = d.get("walkway") or {}
        obstacle = d.get("obstacle", "default")
        if obstacle == "default":
            obstacle = {}
        return cls(
            walkway=WalkwayConfig(tile_count=walkway.get("tile_count", 20),
                                  origin=walkway.get("origin", 0.0)),
            duration=d.get("duration", 60.0),
            obstacle=None if obstacle is None else ObstaclePlan(
                mode=obstacle.get("mode", "anticipated"),
                height_mm=obstacle.get("height_mm", 100),
                count=obstacle.get("count", 4)),
            condition=LoadCondition(
                sound=SoundLevel(sound.get("level", "quiet"),
                                 sound.get("source_count", 1),
                                 sound.get("loudness_tier", "low"),
                                 sound.get("spectral_tier", "narrow")),
                visual=VisualLoad(visual.get("level", "empty"),
                                  visual.get("avatar_count", 0),
                                  visual.get("avatar_speed", 0.0)),
                cognitive=cond.get("cognitive", False)),
            seed=d.get("seed", 0),
            participant=d.get("participant", "anon"),
            countdown_s=d.get("countdown_s", DEFAULT_COUNTDOWN_S),
        )


@dataclass(frozen=True)
class SessionEvent:
    time: float
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {"time": self.time, "kind": self.kind, "payload": self.payload}


@dataclass
class Recording:
    config: SessionConfig
    frames: list = field(default_factory=list)
    head_poses: list = field(default_factory=list)
    foot_poses: list = field(default_factory=list)
    events: list = field(default_factory=list)
    aborted: bool = False

    @property
    def walking_end(self) -> float | None:
        for e in self.events:
            if e.kind == "state_change" and e.payload.get("from") == "walking":
                return e.time
        return None


@dataclass
class SessionReport:
    config: dict
    gait: dict
    head: dict | None
    trials: list
    success_rate: float | None
    art: dict
    recall: dict | None
    clearance_mean: float | None
    flags: list
    engine_version: str = ENGINE_VERSION
    baseline: str | None = None
    costs: dict | None = None

    def to_dict(self) -> dict:
        return {
            "engine_version": self.engine_version,
            "config": self.config,
            "gait": self.gait,
            "head": self.head,
            "trials": self.trials,
            "success_rate": self.success_rate,
            "art": self.art,
            "recall": self.recall,
            "clearance_mean": self.clearance_mean,
            "flags": self.flags,
            "baseline": self.baseline,
            "costs": self.costs,
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":")).encode()


def _f(value) -> float | None:
    """JSON-safe float: plain float or None, never numpy scalars or NaN."""
    if value is None:
        return None
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        return None
    return value


class _ObstacleMonitor:
    """Incremental trial evaluation; resolves with the same pure
    check_crossing the offline path uses, so live results match recomputes."""

    def __init__(self, spec: ObstacleSpec):
        self.spec = spec
        self.spawn_time = 0.0 if spec.mode == "anticipated" else None
        self.passed = {}
        self.result: TrialResult | None = None

    def on_head(self, pose: HeadPose) -> bool:
        """True when this head sample makes the obstacle spawn."""
        if self.spec.mode != "unanticipated" or self.spawn_time is not None:
            return False
        if pose.position[0] >= self.spec.x_position - self.spec.trigger_distance:
            self.spawn_time = pose.time
            return True
        return False

    def on_foot(self, pose: FootPose) -> bool:
        """True when this foot sample resolves the trial."""
        if self.result is not None:
            return False
        if pose.position[0] >= self.spec.trailing_edge:
            self.passed.setdefault(pose.foot, pose.time)
        return len(self.passed) == 2

    def resolve(self, recording: Recording) -> TrialResult:
        left = [p for p in recording.foot_poses if p.foot == "left"]
        right = [p for p in recording.foot_poses if p.foot == "right"]
        head_t = [p.time for p in recording.head_poses]
        head_x = [p.position[0] for p in recording.head_poses]
        self.result = check_crossing(self.spec, left, right, head_times=head_t,
                                     head_xs=head_x, spawn_time=self.spawn_time)
        return self.result


class SessionEngine:
    """The state machine. Batch and live callers feed the same methods; the
    live server only adds pacing and transport."""

    def __init__(self, bank=None):
        self.state = "idle"
        self.config: SessionConfig | None = None
        self.recording: Recording | None = None
        self.report: SessionReport | None = None
        self.obstacles: list[ObstacleSpec] = []
        self.schedule: PlaybackSchedule | None = None
        self._bank = bank
        self._monitors: list[_ObstacleMonitor] = []
        self._pending_sentences: list = []
        self._last_frame_time: float | None = None
        self._last_frame_seq: int | None = None
        self._clock = 0.0

    def _require(self, *states):
        if self.state not in states:
            raise SessionStateError(
                f"command not allowed in state {self.state!r}")

    def _emit(self, time: float, kind: str, payload: dict) -> SessionEvent:
        event = SessionEvent(float(time), kind, payload)
        self.recording.events.append(event)
        return event

    def _transition(self, to: str, time: float) -> SessionEvent:
        event = self._emit(time, "state_change",
                           {"from": self.state, "to": to})
        self.state = to
        return event

    @property
    def bank(self):
        if self._bank is None:
            self._bank = load_sentence_bank()
        return self._bank

    def configure(self, config: SessionConfig) -> None:
        self._require("idle")
        if config.obstacle is not None and config.obstacle.count > 0:
            self.obstacles = make_schedule(config.obstacle.mode,
                                           config.obstacle.height_mm,
                                           config.obstacle.count,
                                           config.walkway, config.seed)
        else:
            self.obstacles = []
        if config.condition.cognitive:
            self.schedule = schedule_sentences(self.bank, config.seed)
        self.config = config
        self.recording = Recording(config=config)
        self._monitors = [_ObstacleMonitor(spec) for spec in self.obstacles]
        if self.schedule is not None:
            self._pending_sentences = [
                ("start", e.start_time, e) for e in self.schedule.entries
            ] + [
                ("end", e.end_time, e) for e in self.schedule.entries
            ]
            self._pending_sentences.sort(key=lambda x: x[1])

    def start(self) -> list[SessionEvent]:
        self._require("idle")
        if self.config is None:
            raise SessionStateError("configure before start")
        return [self._transition("countdown", 0.0)]

    def begin_walking(self) -> list[SessionEvent]:
        self._require("countdown")
        return [self._transition("walking", 0.0)]

    def _advance_clock(self, time: float) -> list[SessionEvent]:
        self._clock = max(self._clock, time)
        events = []
        while self._pending_sentences and self._pending_sentences[0][1] <= time:
            edge, t, entry = self._pending_sentences.pop(0)
            sentence = next(s for s in self.bank if s.id == entry.sentence_id)
            payload = {"sentence_id": entry.sentence_id}
            if edge == "start":
                payload["text"] = sentence.text
                payload["numbers"] = list(sentence.numbers)
            events.append(self._emit(t, f"sentence_{edge}", payload))
        return events

    def ingest_frame(self, frame) -> list[SessionEvent]:
        self._require("walking")
        time = frame.time_s
        events = self._advance_clock(time)
        if self._last_frame_time is not None:
            if time - self._last_frame_time > STREAM_GAP_S:
                events.append(self._emit(time, "stream_gap", {
                    "gap_s": time - self._last_frame_time}))
            if self._last_frame_seq is not None and frame.seq > self._last_frame_seq + 1:
                events.append(self._emit(time, "stream_gap", {
                    "expected_seq": self._last_frame_seq + 1,
                    "got_seq": frame.seq}))
        self._last_frame_time = time
        self._last_frame_seq = frame.seq
        self.recording.frames.append(frame)
        return events

    def ingest_head(self, pose: HeadPose) -> list[SessionEvent]:
        self._require("walking")
        events = self._advance_clock(pose.time)
        self.recording.head_poses.append(pose)
        for m in self._monitors:
            if m.on_head(pose):
                events.append(self._emit(pose.time, "obstacle_spawn", {
                    "obstacle_id": m.spec.id,
                    "x_position": m.spec.x_position,
                    "height_mm": m.spec.height_mm}))
        return events

    def ingest_foot(self, pose: FootPose) -> list[SessionEvent]:
        self._require("walking")
        events = self._advance_clock(pose.time)
        self.recording.foot_poses.append(pose)
        for m in self._monitors:
            if m.on_foot(pose):
                result = m.resolve(self.recording)
                events.append(self._emit(pose.time, "crossing_result",
                                         _trial_dict(result)))
                events.append(self._emit(pose.time, "cue", {
                    "obstacle_id": result.obstacle_id,
                    "success": result.success}))
        return events

    def end_walking(self, time: float | None = None) -> list[SessionEvent]:
        self._require("walking")
        if time is None:
            time = self._clock
        events = []
        for m in self._monitors:
            if m.result is None:
                result = m.resolve(self.recording)
                events.append(self._emit(time, "crossing_result",
                                         _trial_dict(result)))
        if self.config.condition.cognitive:
            events.append(self._transition("recall", time))
        else:
            events.append(self._transition("complete", time))
            self.report = compute_report(self.recording)
        return events

    def submit_recall(self, numbers, time: float | None = None) -> list[SessionEvent]:
        self._require("recall")
        if time is None:
            time = self._clock + 5.0
        events = [self._emit(time, "recall_submitted",
                             {"reported": [int(n) for n in numbers]})]
        events.append(self._transition("complete", time))
        self.report = compute_report(self.recording)
        return events

    def abort(self, time: float | None = None) -> list[SessionEvent]:
        self._require("countdown", "walking", "recall")
        if time is None:
            time = self._clock
        self.recording.aborted = True
        events = [self._emit(time, "state_change",
                             {"from": self.state, "to": "complete",
                              "reason": "abort"})]
        self.state = "complete"
        self.report = compute_report(self.recording)
        return events


def _trial_dict(r: TrialResult) -> dict:
    return {
        "obstacle_id": r.obstacle_id,
        "crossed": r.crossed,
        "success": r.success,
        "collision_foot": r.collision_foot,
        "lead_foot": r.lead_foot,
        "lead_clearance": _f(r.lead_clearance),
        "trail_clearance": _f(r.trail_clearance),
        "art": _f(r.art),
        "art_head": _f(r.art_head),
        "crossing_speed": _f(r.crossing_speed),
        "spawn_time": _f(r.spawn_time),
        "reliable": r.reliable,
    }


def _gait_dict(summary) -> dict:
    return {
        "step_count": summary.step_count,
        "mean_speed": _f(summary.mean_speed),
        "cadence": _f(summary.cadence),
        "step_length_mean": _f(summary.step_length_mean),
        "step_length_sd": _f(summary.step_length_sd),
        "step_width_mean": _f(summary.step_width_mean),
        "step_width_sd": _f(summary.step_width_sd),
        "stride_length_mean": _f(summary.stride_length_mean),
        "stance_time_mean": _f(summary.stance_time_mean),
        "foot_angle_left": _f(summary.foot_angle_left),
        "foot_angle_right": _f(summary.foot_angle_right),
        "symmetry_index": _f(summary.symmetry_index),
        "flags": list(summary.flags),
    }


def analyze_pressure(frames):
    """Frames -> (tracks, times, per-side force/COF series, gait events)."""
    tracker = FootTracker()
    times = []
    for frame in frames:
        t = frame.time_s
        times.append(t)
        blobs = segment_blobs(contact_mask(frame), frame)
        tracker.update(t, cluster_feet(blobs))
    tracks = tracker.finish()
    times = np.asarray(times)
    series = side_force_series(tracks, times)
    events = []
    for side in ("left", "right"):
        force, cof = series[side]
        events.extend(detect_events(times, force, side, cof))
    events.sort(key=lambda e: (e.time, e.foot))
    return tracks, times, series, events


def compute_report(recording: Recording) -> SessionReport:
    """Pure function of the recording; equal recordings give equal bytes."""
    config = recording.config
    flags: list[str] = []
    if recording.aborted:
        flags.extend(["aborted", "incomplete"])
    if any(e.kind == "stream_gap" for e in recording.events):
        flags.append("stream_gap")

    tracks, times, series, events = analyze_pressure(recording.frames)
    steps, strides = step_metrics(events)
    angles = {"left": [], "right": []}
    for track in tracks:
        if track.side in angles:
            angle = foot_angle(track.peak_sample().cluster, track.side)
            if angle is not None and angle.confident:
                angles[track.side].append(angle)
    summary = gait_summary(steps, strides, events,
                           left_force=series["left"][0],
                           right_force=series["right"][0],
                           angles_left=angles["left"],
                           angles_right=angles["right"])

    head = None
    if len(recording.head_poses) >= 2:
        kin = head_kinematics([p.time for p in recording.head_poses],
                              [p.position for p in recording.head_poses],
                              [p.yaw for p in recording.head_poses])
        head = {"path_length": _f(kin.path_length),
                "mean_speed": _f(kin.mean_speed),
                "rms_ml": _f(kin.rms_ml),
                "rms_vertical": _f(kin.rms_vertical),
                "yaw_range": _f(kin.yaw_range)}
    else:
        flags.append("no_head_stream")

    trials = []
    if config.obstacle is not None and config.obstacle.count > 0:
        specs = make_schedule(config.obstacle.mode, config.obstacle.height_mm,
                              config.obstacle.count, config.walkway, config.seed)
        # Recorded spawn events win over re-deriving from the head stream so
        # manually cued obstacles recompute to the same trial results.
        spawn_times: dict[int, float] = {}
        for e in recording.events:
            if e.kind == "obstacle_spawn":
                spawn_times.setdefault(e.payload.get("obstacle_id"), e.time)
        left = [p for p in recording.foot_poses if p.foot == "left"]
        right = [p for p in recording.foot_poses if p.foot == "right"]
        head_t = [p.time for p in recording.head_poses]
        head_x = [p.position[0] for p in recording.head_poses]
        trials = [check_crossing(s, left, right, head_times=head_t, head_xs=head_x,
                                 spawn_time=spawn_times.get(s.id))
                  for s in specs]

    crossed = [t for t in trials if t.crossed]
    rate = None
    if crossed:
        rate = success_rate(trials)
    else:
        flags.append("no_crossed_trials")

    arts = [t.art for t in trials if t.art is not None]
    art = {"per_trial": [_f(t.art) for t in trials],
           "mean": _f(np.mean(arts)) if arts else None,
           "min": _f(min(arts)) if arts else None}

    clearances = [t.lead_clearance for t in crossed if t.lead_clearance is not None]
    clearance_mean = _f(np.mean(clearances)) if clearances else None

    recall = None
    if config.condition.cognitive:
        bank = load_sentence_bank()
        schedule = schedule_sentences(bank, config.seed)
        walking_end = recording.walking_end
        heard = [e for e in schedule.entries
                 if walking_end is None or e.start_time <= walking_end]
        presented = []
        by_id = {s.id: s for s in bank}
        for entry in heard:
            presented.extend(by_id[entry.sentence_id].numbers)
        reported = None
        for e in recording.events:
            if e.kind == "recall_submitted":
                reported = e.payload.get("reported", [])
        if reported is None:
            flags.append("no_recall")
        elif presented:
            score = score_recall(presented, reported)
            recall = {"correct": score.correct, "total": score.total,
                      "accuracy": _f(score.accuracy),
                      "ordered_correct": score.ordered_correct,
                      "presented": [int(n) for n in presented],
                      "reported": [int(n) for n in reported]}
        else:
            flags.append("no_sentences_played")

    if summary.step_count == 0 and "no_steps" not in flags:
        flags.append("no_steps")

    return SessionReport(config=config.to_dict(), gait=_gait_dict(summary),
                         head=head, trials=[_trial_dict(t) for t in trials],
                         success_rate=_f(rate), art=art, recall=recall,
                         clearance_mean=clearance_mean, flags=sorted(set(flags)))


def run_session(config: SessionConfig, params=None, scenario=None,
                reported_numbers="auto") -> tuple[Recording, SessionReport]:
    """Run one simulated session through the engine at batch speed.

    `reported_numbers` controls the recall submission when the cognitive
    condition is on: "auto" reports every presented number (perfect recall),
    None skips the submission, and an explicit list is taken as-is.
    """
    from .simulator import Scenario, WalkerParams, apply_load_modifiers, simulate

    if params is None:
        params = WalkerParams(speed=1.2, cadence=110.0,
                              noise_seed=config.seed)
    if scenario is None:
        scenario = Scenario.clean()
    params = apply_load_modifiers(params, config.condition)

    engine = SessionEngine()
    engine.configure(config)
    windows = ()
    if engine.schedule is not None:
        windows = tuple((e.start_time, e.end_time) for e in engine.schedule.entries)
    sim = simulate(params, scenario, walkway=config.walkway,
                   duration=config.duration, obstacles=tuple(engine.obstacles),
                   sentence_windows=windows)

    engine.start()
    engine.begin_walking()
    feed = []
    feed.extend((p.time, 0, "head", p) for p in sim.head_poses)
    feed.extend((p.time, 1, "foot", p) for p in sim.foot_poses)
    feed.extend((f.time_s, 2, "frame", f) for f in sim.frames)
    feed.sort(key=lambda item: (item[0], item[1]))
    for _, _, kind, item in feed:
        if kind == "head":
            engine.ingest_head(item)
        elif kind == "foot":
            engine.ingest_foot(item)
        else:
            engine.ingest_frame(item)
    engine.end_walking(sim.end_time)

    if engine.state == "recall":
        if reported_numbers is None:
            # leave recall unanswered; close the session out directly
            engine._transition("complete", engine._clock)
            engine.report = compute_report(engine.recording)
        else:
            if reported_numbers == "auto":
                walking_end = engine.recording.walking_end
                heard = [e for e in engine.schedule.entries
                         if e.start_time <= walking_end]
                by_id = {s.id: s for s in engine.bank}
                reported_numbers = [n for e in heard
                                    for n in by_id[e.sentence_id].numbers]
            engine.submit_recall(reported_numbers)
    return engine.recording, engine.report


COMPARE_METRICS = (
    # (name, extractor, higher_is_better)
    ("speed", lambda r: r.gait.get("mean_speed"), True),
    ("step_length", lambda r: r.gait.get("step_length_mean"), True),
    ("step_length_sd", lambda r: r.gait.get("step_length_sd"), False),
    ("cadence", lambda r: r.gait.get("cadence"), True),
    ("success_rate", lambda r: r.success_rate, True),
    ("clearance", lambda r: r.clearance_mean, True),
    ("art", lambda r: r.art.get("mean"), False),
)


def compare_sessions(baseline: SessionReport, loaded: SessionReport) -> dict:
    """Per-metric dual-task/load costs of `loaded` relative to `baseline`.

    Positive cost always means worse under load; lower-is-better metrics
    have their sign flipped accordingly. Metrics missing from either report
    are marked unavailable (None).
    """
    from .dualtask import dual_task_cost

    warnings = []
    if baseline.config.get("walkway") != loaded.config.get("walkway"):
        warnings.append("walkway configurations differ")
    costs = {}
    for name, extract, higher_better in COMPARE_METRICS:
        base, dual = extract(baseline), extract(loaded)
        if base is None or dual is None or base <= 0:
            costs[name] = None
            continue
        cost = dual_task_cost(base, dual)
        costs[name] = _f(cost if higher_better else -cost)
    return {"baseline": baseline.config.get("participant", "baseline"),
            "costs": costs, "warnings": warnings}
