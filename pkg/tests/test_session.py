"""Session orchestration: state machine legality, stream-integrity events,
report determinism (live == recompute == persisted), recall rules, and
session comparison."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import blank_values, make_frame
from gaitway import __version__
from gaitway.dualtask import schedule_sentences
from gaitway.errors import ConfigError, SessionStateError
from gaitway.poses import FootPose, HeadPose
from gaitway.session import (
    Recording,
    SessionConfig,
    SessionEngine,
    SessionReport,
    compare_sessions,
    compute_report,
    run_session,
)
from gaitway.simulator import Scenario, WalkerParams, apply_load_modifiers, simulate
from gaitway.streamio import load_recording, save_recording

# short mats keep the state-machine tests cheap; the size advisory is expected
pytestmark = pytest.mark.filterwarnings("ignore:walkway length")


def config_dict(**over) -> dict:
    d = {
        "walkway": {"tile_count": 12},
        "duration": 60.0,
        "obstacle": {"mode": "anticipated", "height_mm": 100, "count": 2},
        "seed": 3,
    }
    d.update(over)
    return d


@pytest.fixture(scope="module")
def clean_run():
    cfg = SessionConfig.from_dict(config_dict())
    rec, rep = run_session(cfg)
    return cfg, rec, rep


@pytest.fixture(scope="module")
def cog_run():
    cfg = SessionConfig.from_dict(config_dict(condition={"cognitive": True}))
    rec, rep = run_session(cfg)
    return cfg, rec, rep


class TestSessionConfig:
    def test_defaults(self):
        cfg = SessionConfig()
        assert cfg.duration == 60.0
        assert cfg.countdown_s == 3.0
        assert cfg.obstacle is not None and cfg.obstacle.mode == "anticipated"
        assert cfg.walkway.tile_count == 20
        assert not cfg.condition.cognitive

    def test_duration_must_be_positive(self):
        with pytest.raises(ConfigError):
            SessionConfig(duration=0.0)

    def test_countdown_nonnegative(self):
        with pytest.raises(ConfigError):
            SessionConfig(countdown_s=-1.0)

    def test_from_dict_roundtrip(self):
        cfg = SessionConfig.from_dict({
            "walkway": {"tile_count": 8, "origin": 1.5},
            "duration": 30.0,
            "obstacle": {"mode": "unanticipated", "height_mm": 150, "count": 1},
            "condition": {
                "sound": {"level": "busy", "source_count": 4,
                          "loudness_tier": "high", "spectral_tier": "broad"},
                "visual": {"level": "busy", "avatar_count": 6,
                           "avatar_speed": 1.1},
                "cognitive": True,
            },
            "seed": 42, "participant": "p9", "countdown_s": 1.0,
        })
        assert SessionConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_partial_uses_defaults(self):
        assert SessionConfig.from_dict({}) == SessionConfig()
        cfg = SessionConfig.from_dict({"seed": 5})
        assert cfg.seed == 5
        assert cfg.obstacle == SessionConfig().obstacle

    def test_from_dict_null_obstacle_means_none(self):
        assert SessionConfig.from_dict({"obstacle": None}).obstacle is None

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown"):
            SessionConfig.from_dict({"walkwayy": {}})

    def test_from_dict_rejects_non_object(self):
        with pytest.raises(ConfigError):
            SessionConfig.from_dict([1, 2])

    def test_to_dict_is_json_serializable(self):
        json.dumps(SessionConfig().to_dict())


def walking_engine(cognitive: bool = False, bank=None) -> SessionEngine:
    eng = SessionEngine(bank=bank)
    eng.configure(SessionConfig.from_dict({
        "walkway": {"tile_count": 2}, "obstacle": None,
        "condition": {"cognitive": cognitive}}))
    eng.start()
    eng.begin_walking()
    return eng


class TestStateMachine:
    def test_initial_state_idle(self):
        assert SessionEngine().state == "idle"

    def test_happy_path_states(self):
        eng = SessionEngine()
        eng.configure(SessionConfig.from_dict({"walkway": {"tile_count": 2},
                                               "obstacle": None}))
        assert eng.state == "idle"
        eng.start()
        assert eng.state == "countdown"
        eng.begin_walking()
        assert eng.state == "walking"
        eng.end_walking()
        assert eng.state == "complete"
        transitions = [(e.payload["from"], e.payload["to"])
                       for e in eng.recording.events if e.kind == "state_change"]
        assert transitions == [("idle", "countdown"), ("countdown", "walking"),
                               ("walking", "complete")]

    def test_cognitive_path_goes_through_recall(self, sentence_bank):
        eng = walking_engine(cognitive=True, bank=sentence_bank)
        eng.end_walking()
        assert eng.state == "recall"
        assert eng.report is None
        eng.submit_recall([1, 2, 3])
        assert eng.state == "complete"
        assert eng.report is not None

    def test_non_cognitive_skips_recall(self):
        eng = walking_engine()
        eng.end_walking()
        assert eng.state == "complete"
        assert eng.report is not None

    def test_start_requires_configure(self):
        with pytest.raises(SessionStateError):
            SessionEngine().start()

    def test_configure_only_in_idle(self):
        eng = SessionEngine()
        cfg = SessionConfig.from_dict({"walkway": {"tile_count": 2},
                                       "obstacle": None})
        eng.configure(cfg)
        eng.start()
        with pytest.raises(SessionStateError):
            eng.configure(cfg)

    def test_begin_walking_requires_countdown(self):
        with pytest.raises(SessionStateError):
            SessionEngine().begin_walking()

    def test_ingest_requires_walking(self):
        eng = SessionEngine()
        with pytest.raises(SessionStateError):
            eng.ingest_frame(make_frame(blank_values(2)))
        with pytest.raises(SessionStateError):
            eng.ingest_head(HeadPose(0.0, (0.0, 0.2, 1.7), 0.0))
        with pytest.raises(SessionStateError):
            eng.ingest_foot(FootPose(0.0, "left", (0.0, 0.25, 0.06), 0.0))

    def test_submit_recall_requires_recall_state(self):
        eng = walking_engine()
        with pytest.raises(SessionStateError):
            eng.submit_recall([1])

    def test_abort_requires_active_session(self):
        with pytest.raises(SessionStateError):
            SessionEngine().abort()
        eng = walking_engine()
        eng.end_walking()
        with pytest.raises(SessionStateError):
            eng.abort()

    def test_abort_from_countdown(self):
        eng = SessionEngine()
        eng.configure(SessionConfig.from_dict({"walkway": {"tile_count": 2},
                                               "obstacle": None}))
        eng.start()
        eng.abort()
        assert eng.state == "complete"
        assert eng.recording.aborted
        assert eng.report is not None

    def test_abort_from_recall(self, sentence_bank):
        eng = walking_engine(cognitive=True, bank=sentence_bank)
        eng.end_walking()
        eng.abort()
        assert eng.state == "complete"
        assert "aborted" in eng.report.flags

    def test_abort_sets_flags(self):
        eng = walking_engine()
        for n in range(3):
            eng.ingest_frame(make_frame(blank_values(2), seq=n, time_s=0.01 * n))
        eng.abort()
        assert eng.recording.aborted
        assert eng.state == "complete"
        assert {"aborted", "incomplete"} <= set(eng.report.flags)
        last = eng.recording.events[-1]
        assert last.kind == "state_change"
        assert last.payload.get("reason") == "abort"

    OPS = ("configure", "start", "begin_walking", "frame", "head", "foot",
           "end_walking", "submit_recall", "abort")
    ORDER = {"idle": 0, "countdown": 1, "walking": 2, "recall": 3, "complete": 4}

    @staticmethod
    def _legal(op: str, state: str, configured: bool) -> bool:
        return {
            "configure": state == "idle",
            "start": state == "idle" and configured,
            "begin_walking": state == "countdown",
            "frame": state == "walking",
            "head": state == "walking",
            "foot": state == "walking",
            "end_walking": state == "walking",
            "submit_recall": state == "recall",
            "abort": state in ("countdown", "walking", "recall"),
        }[op]

    @staticmethod
    def _apply(eng: SessionEngine, op: str, cfg: SessionConfig, n: int):
        t = 0.01 * n
        if op == "configure":
            eng.configure(cfg)
        elif op == "start":
            eng.start()
        elif op == "begin_walking":
            eng.begin_walking()
        elif op == "frame":
            eng.ingest_frame(make_frame(blank_values(2), seq=n, time_s=t))
        elif op == "head":
            eng.ingest_head(HeadPose(t, (0.0, 0.2, 1.7), 0.0))
        elif op == "foot":
            eng.ingest_foot(FootPose(t, "left", (0.0, 0.25, 0.06), 0.0))
        elif op == "end_walking":
            eng.end_walking()
        elif op == "submit_recall":
            eng.submit_recall([1, 2])
        elif op == "abort":
            eng.abort()

    @settings(max_examples=100, deadline=None)
    @given(ops=st.lists(st.sampled_from(OPS), min_size=1, max_size=12),
           cognitive=st.booleans())
    def test_op_sequences_never_corrupt_state(self, ops, cognitive, sentence_bank):
        cfg = SessionConfig.from_dict({"walkway": {"tile_count": 2},
                                       "obstacle": None,
                                       "condition": {"cognitive": cognitive}})
        eng = SessionEngine(bank=sentence_bank)
        state, configured = "idle", False
        for n, op in enumerate(ops):
            if self._legal(op, state, configured):
                self._apply(eng, op, cfg, n)
                if op == "configure":
                    configured = True
                else:
                    state = {"start": "countdown", "begin_walking": "walking",
                             "frame": "walking", "head": "walking",
                             "foot": "walking",
                             "end_walking": "recall" if cognitive else "complete",
                             "submit_recall": "complete",
                             "abort": "complete"}[op]
            else:
                with pytest.raises(SessionStateError):
                    self._apply(eng, op, cfg, n)
            assert eng.state == state
        if eng.recording is not None:
            # states only ever move forward; no state is entered twice
            for e in eng.recording.events:
                if e.kind == "state_change":
                    assert self.ORDER[e.payload["to"]] > self.ORDER[e.payload["from"]]


class TestStreamIntegrity:
    def test_time_gap_emits_event(self):
        eng = walking_engine()
        assert eng.ingest_frame(make_frame(blank_values(2), seq=0, time_s=0.0)) == []
        events = eng.ingest_frame(make_frame(blank_values(2), seq=1, time_s=0.7))
        assert [e.kind for e in events] == ["stream_gap"]
        assert events[0].payload["gap_s"] == pytest.approx(0.7)

    def test_seq_jump_emits_event(self):
        eng = walking_engine()
        eng.ingest_frame(make_frame(blank_values(2), seq=0, time_s=0.0))
        events = eng.ingest_frame(make_frame(blank_values(2), seq=5, time_s=0.01))
        assert [e.kind for e in events] == ["stream_gap"]
        assert events[0].payload == {"expected_seq": 1, "got_seq": 5}

    def test_adjacent_frames_are_silent(self):
        eng = walking_engine()
        for n in range(5):
            assert eng.ingest_frame(
                make_frame(blank_values(2), seq=n, time_s=0.01 * n)) == []

    def test_exact_half_second_gap_is_silent(self):
        eng = walking_engine()
        eng.ingest_frame(make_frame(blank_values(2), seq=0, time_s=0.75))
        assert eng.ingest_frame(
            make_frame(blank_values(2), seq=1, time_s=1.25)) == []

    def test_gap_sets_report_flag(self):
        eng = walking_engine()
        eng.ingest_frame(make_frame(blank_values(2), seq=0, time_s=0.0))
        eng.ingest_frame(make_frame(blank_values(2), seq=1, time_s=0.7))
        eng.end_walking()
        assert "stream_gap" in eng.report.flags


class TestSentencePlayback:
    def test_sentence_edges_emitted_with_payload(self, sentence_bank):
        eng = walking_engine(cognitive=True, bank=sentence_bank)
        entry = eng.schedule.entries[0]
        sentence = next(s for s in sentence_bank if s.id == entry.sentence_id)
        events = eng.ingest_frame(
            make_frame(blank_values(2), seq=0, time_s=entry.end_time + 0.01))
        assert [e.kind for e in events] == ["sentence_start", "sentence_end"]
        start, end = events
        assert start.time == pytest.approx(entry.start_time)
        assert start.payload["sentence_id"] == entry.sentence_id
        assert start.payload["text"] == sentence.text
        assert start.payload["numbers"] == list(sentence.numbers)
        assert end.time == pytest.approx(entry.end_time)
        assert end.payload == {"sentence_id": entry.sentence_id}


class TestReportDeterminism:
    def test_live_equals_recompute(self, clean_run):
        _, rec, rep = clean_run
        assert compute_report(rec).to_json_bytes() == rep.to_json_bytes()

    def test_recompute_twice_is_byte_identical(self, clean_run):
        _, rec, _ = clean_run
        assert (compute_report(rec).to_json_bytes()
                == compute_report(rec).to_json_bytes())

    def test_persisted_recompute_equals_live(self, clean_run, tmp_path):
        _, rec, rep = clean_run
        save_recording(rec, tmp_path / "s", report=rep)
        loaded = load_recording(tmp_path / "s")
        assert compute_report(loaded).to_json_bytes() == rep.to_json_bytes()

    def test_run_session_is_deterministic(self, clean_run):
        cfg, _, rep = clean_run
        _, again = run_session(cfg)
        assert again.to_json_bytes() == rep.to_json_bytes()

    def test_unanticipated_live_equals_recompute(self):
        cfg = SessionConfig.from_dict(config_dict(
            obstacle={"mode": "unanticipated", "height_mm": 100, "count": 2},
            seed=7))
        rec, rep = run_session(cfg)
        spawns = [e for e in rec.events if e.kind == "obstacle_spawn"]
        assert len(spawns) == 2
        assert compute_report(rec).to_json_bytes() == rep.to_json_bytes()

    def test_report_shape(self, clean_run):
        _, _, rep = clean_run
        d = json.loads(rep.to_json_bytes())
        assert set(d) == {"engine_version", "config", "gait", "head", "trials",
                          "success_rate", "art", "recall", "clearance_mean",
                          "flags", "baseline", "costs"}
        assert d["engine_version"] == __version__
        assert d["flags"] == sorted(d["flags"])
        assert len(d["flags"]) == len(set(d["flags"]))
        assert len(d["trials"]) == 2
        assert d["success_rate"] == 1.0

    def test_blank_session_flags(self):
        eng = SessionEngine()
        eng.configure(SessionConfig.from_dict(config_dict()))
        eng.start()
        eng.begin_walking()
        for n in range(3):
            eng.ingest_frame(make_frame(blank_values(12), seq=n, time_s=0.01 * n))
        eng.end_walking()
        flags = set(eng.report.flags)
        assert {"no_steps", "no_head_stream", "no_crossed_trials"} <= flags
        assert eng.report.head is None
        assert eng.report.success_rate is None
        assert eng.report.gait["step_count"] == 0

    def test_walking_end(self, clean_run):
        _, rec, _ = clean_run
        ends = [e.time for e in rec.events if e.kind == "state_change"
                and e.payload.get("from") == "walking"]
        assert rec.walking_end == ends[0]
        assert Recording(config=SessionConfig()).walking_end is None


class TestRecall:
    def test_auto_recall_is_perfect(self, cog_run):
        _, _, rep = cog_run
        assert rep.recall is not None
        assert rep.recall["correct"] == rep.recall["total"] >= 1
        assert rep.recall["accuracy"] == 1.0

    def test_only_played_sentences_count(self, cog_run, sentence_bank):
        cfg, rec, rep = cog_run
        schedule = schedule_sentences(sentence_bank, cfg.seed)
        heard = [e for e in schedule.entries if e.start_time <= rec.walking_end]
        assert 1 <= len(heard) < len(schedule.entries)
        by_id = {s.id: s for s in sentence_bank}
        expected = [n for e in heard for n in by_id[e.sentence_id].numbers]
        assert rep.recall["presented"] == expected
        assert rep.recall["total"] == len(expected)

    def test_unanswered_recall_flag(self):
        cfg = SessionConfig.from_dict(config_dict(condition={"cognitive": True}))
        _, rep = run_session(cfg, reported_numbers=None)
        assert rep.recall is None
        assert "no_recall" in rep.flags

    def test_no_sentences_played_flag(self):
        cfg = SessionConfig.from_dict(config_dict(
            condition={"cognitive": True}, duration=1.5, seed=0))
        _, rep = run_session(cfg, reported_numbers=[1, 2, 3])
        assert rep.recall is None
        assert "no_sentences_played" in rep.flags

    def test_non_cognitive_has_no_recall_section(self, clean_run):
        _, _, rep = clean_run
        assert rep.recall is None
        assert "no_recall" not in rep.flags


class TestManualSpawn:
    def test_forced_spawn_recomputes_identically(self):
        cfg = SessionConfig.from_dict(config_dict(
            obstacle={"mode": "unanticipated", "height_mm": 100, "count": 2},
            seed=7))
        engine = SessionEngine()
        engine.configure(cfg)
        params = apply_load_modifiers(
            WalkerParams(speed=1.2, cadence=110.0, noise_seed=cfg.seed),
            cfg.condition)
        sim = simulate(params, Scenario.clean(), walkway=cfg.walkway,
                       duration=cfg.duration, obstacles=tuple(engine.obstacles))
        engine.start()
        engine.begin_walking()
        feed = [(p.time, 0, "head", p) for p in sim.head_poses]
        feed += [(p.time, 1, "foot", p) for p in sim.foot_poses]
        feed += [(f.time_s, 2, "frame", f) for f in sim.frames]
        feed.sort(key=lambda item: (item[0], item[1]))

        forced = None
        for _, _, kind, item in feed:
            # cue the next pending obstacle early, the way an operator would
            if forced is None and kind == "head" and item.position[0] >= 0.5:
                monitor = next(m for m in engine._monitors
                               if m.spawn_time is None)
                monitor.spawn_time = item.time
                engine._emit(item.time, "obstacle_spawn", {
                    "obstacle_id": monitor.spec.id,
                    "x_position": monitor.spec.x_position,
                    "height_mm": monitor.spec.height_mm,
                    "manual": True})
                forced = (monitor.spec.id, item.time)
            if kind == "head":
                engine.ingest_head(item)
            elif kind == "foot":
                engine.ingest_foot(item)
            else:
                engine.ingest_frame(item)
        engine.end_walking(sim.end_time)

        forced_id, forced_time = forced
        trial = engine.report.trials[forced_id]
        assert trial["spawn_time"] == pytest.approx(forced_time)
        spawns = [e for e in engine.recording.events if e.kind == "obstacle_spawn"]
        assert sum(1 for e in spawns if e.payload.get("manual")) == 1
        assert (compute_report(engine.recording).to_json_bytes()
                == engine.report.to_json_bytes())

        # the early cue leaves more time to respond than the natural trigger
        _, natural = run_session(cfg)
        assert trial["art"] > natural.trials[forced_id]["art"]


def stub_report(**over) -> SessionReport:
    fields = dict(
        config={"walkway": {"tile_count": 20, "origin": 0.0},
                "participant": "base"},
        gait={"mean_speed": 1.2, "step_length_mean": 0.65,
              "step_length_sd": 0.05, "cadence": 110.0},
        head=None, trials=[], success_rate=1.0,
        art={"per_trial": [], "mean": 1.0, "min": 1.0},
        recall=None, clearance_mean=0.05, flags=[])
    fields.update(over)
    return SessionReport(**fields)


class TestCompareSessions:
    def test_cost_signs(self):
        base = stub_report()
        loaded = stub_report(
            gait={"mean_speed": 1.0, "step_length_mean": 0.65,
                  "step_length_sd": 0.06, "cadence": 110.0},
            success_rate=0.5, clearance_mean=0.04,
            art={"per_trial": [], "mean": 0.8, "min": 0.8})
        costs = compare_sessions(base, loaded)["costs"]
        assert costs["speed"] == pytest.approx(100.0 * (1.0 - 1.0 / 1.2))
        assert costs["step_length"] == 0.0
        assert costs["cadence"] == 0.0
        assert costs["success_rate"] == pytest.approx(50.0)
        assert costs["clearance"] == pytest.approx(20.0)
        # variability rose under load: positive cost despite lower-is-better
        assert costs["step_length_sd"] == pytest.approx(20.0)
        # faster reactions under load count as improvement: negative cost
        assert costs["art"] == pytest.approx(-20.0)

    def test_missing_metric_is_none(self):
        loaded = stub_report(clearance_mean=None, success_rate=None)
        costs = compare_sessions(stub_report(), loaded)["costs"]
        assert costs["clearance"] is None
        assert costs["success_rate"] is None

    def test_zero_baseline_is_none(self):
        base = stub_report(gait={"mean_speed": 0.0, "step_length_mean": 0.65,
                                 "step_length_sd": 0.05, "cadence": 110.0})
        costs = compare_sessions(base, stub_report())["costs"]
        assert costs["speed"] is None

    def test_walkway_mismatch_warns(self):
        loaded = stub_report(config={"walkway": {"tile_count": 10,
                                                 "origin": 0.0},
                                     "participant": "p2"})
        out = compare_sessions(stub_report(), loaded)
        assert out["warnings"]
        assert compare_sessions(stub_report(), stub_report())["warnings"] == []

    def test_baseline_name_comes_from_config(self):
        out = compare_sessions(stub_report(), stub_report())
        assert out["baseline"] == "base"
