"""Synthetic walker: kinematic programming, pressure rendering, scenarios."""

import numpy as np
import pytest

from gaitway.dualtask import BUSY_SOUND, BUSY_VISUAL, LoadCondition
from gaitway.errors import ConfigError
from gaitway.obstacles import make_schedule
from gaitway.simulator import (
    FRAME_RATE_HZ,
    POSE_RATE_HZ,
    Scenario,
    WalkerParams,
    apply_load_modifiers,
    simulate,
)
from gaitway.walkway import WalkwayConfig, raw_to_force

PARAMS = WalkerParams(speed=1.2, cadence=110.0, noise_seed=1)
SHORT = WalkwayConfig(tile_count=9)


def small_sim(**kwargs):
    kwargs.setdefault("walkway", SHORT)
    kwargs.setdefault("duration", 30.0)
    return simulate(kwargs.pop("params", PARAMS),
                    kwargs.pop("scenario", Scenario.clean()), **kwargs)


class TestParams:
    def test_step_length_derived_from_speed_and_cadence(self):
        assert PARAMS.step_length == pytest.approx(0.6545454545454545, abs=1e-12)
        assert PARAMS.step_period == pytest.approx(60.0 / 110.0, abs=1e-15)

    def test_consistency_equation(self):
        # speed = cadence/60 * step_length, by construction
        assert PARAMS.cadence / 60.0 * PARAMS.step_length == pytest.approx(
            PARAMS.speed, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ConfigError):
            WalkerParams(speed=0.0, cadence=110.0)
        with pytest.raises(ConfigError):
            WalkerParams(speed=1.2, cadence=-5.0)
        with pytest.raises(ConfigError):
            WalkerParams(speed=1.2, cadence=110.0, double_support_fraction=0.6)
        with pytest.raises(ConfigError):
            WalkerParams(speed=1.2, cadence=110.0, step_width=0.5)

    def test_weight(self):
        assert PARAMS.weight_g == 70000.0


class TestScenario:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            Scenario("moonwalk")

    def test_trip_requires_target(self):
        with pytest.raises(ConfigError):
            Scenario("trip")
        with pytest.raises(ConfigError):
            Scenario("trip", obstacle_index=0, apex_override=0.0)

    def test_speed_factor_bounds(self):
        with pytest.raises(ConfigError):
            Scenario.hesitation(speed_factor=0.0)
        with pytest.raises(ConfigError):
            Scenario.dual_task_slowdown(speed_factor=1.5)

    def test_trip_against_missing_obstacle_rejected(self):
        with pytest.raises(ConfigError):
            simulate(PARAMS, Scenario.trip(3, 0.08), walkway=SHORT,
                     obstacles=())


class TestStreams:
    def test_frame_rate(self):
        sim = small_sim()
        times = [f.time_s for f in sim.frames]
        deltas = np.diff(times)
        assert np.allclose(deltas, 1.0 / FRAME_RATE_HZ, atol=1e-9)

    def test_pose_rate_and_interleaving(self):
        sim = small_sim()
        head_times = [p.time for p in sim.head_poses]
        assert np.allclose(np.diff(head_times), 1.0 / POSE_RATE_HZ, atol=1e-9)
        for foot in ("left", "right"):
            ts = [p.time for p in sim.foot_poses if p.foot == foot]
            assert all(b > a for a, b in zip(ts, ts[1:]))

    def test_sequence_numbers_monotone(self):
        sim = small_sim()
        seqs = [f.seq for f in sim.frames]
        assert seqs == list(range(len(seqs)))

    def test_session_ends_at_walkway_end(self):
        sim = small_sim()
        last_x = max(p.position[0] for p in sim.foot_poses)
        # the walk uses the lane up to the protected end margin and stops
        assert last_x <= SHORT.length + 0.01
        assert SHORT.length - sim.footfalls[-1].x <= 2 * PARAMS.step_length
        assert sim.end_time < SHORT.length / PARAMS.speed

    def test_duration_cap(self):
        sim = small_sim(duration=1.5)
        assert sim.end_time <= 1.5 + 1e-9
        assert max(f.time_s for f in sim.frames) <= 1.5

    def test_head_bobs_around_nominal_height(self):
        sim = small_sim()
        zs = np.array([p.position[2] for p in sim.head_poses])
        assert zs.max() <= 1.72 + 1e-9
        assert zs.min() >= 1.68 - 1e-9

    def test_head_moves_at_walking_speed(self):
        sim = small_sim()
        a, b = sim.head_poses[0], sim.head_poses[-1]
        v = (b.position[0] - a.position[0]) / (b.time - a.time)
        assert v == pytest.approx(PARAMS.speed, rel=1e-6)


class TestDeterminism:
    def test_identical_inputs_identical_streams(self):
        a = small_sim()
        b = small_sim()
        assert len(a.frames) == len(b.frames)
        assert all(np.array_equal(x.values, y.values)
                   for x, y in zip(a.frames, b.frames))
        assert [(p.time, p.foot, p.position) for p in a.foot_poses] == \
               [(p.time, p.foot, p.position) for p in b.foot_poses]

    def test_noise_seed_changes_frames_only(self):
        a = small_sim(params=WalkerParams(speed=1.2, cadence=110.0, noise_seed=1))
        b = small_sim(params=WalkerParams(speed=1.2, cadence=110.0, noise_seed=2))
        assert [(p.time, p.position) for p in a.head_poses] == \
               [(p.time, p.position) for p in b.head_poses]
        assert any(not np.array_equal(x.values, y.values)
                   for x, y in zip(a.frames, b.frames))


class TestForces:
    def test_total_force_tracks_body_weight(self):
        params = WalkerParams(speed=1.2, cadence=110.0, noise_scale=0.0)
        sim = small_sim(params=params)
        totals = np.array([raw_to_force(f.values.astype(float)).sum()
                           for f in sim.frames])
        # raw quantization only: every frame carries the full body weight
        assert np.abs(totals - params.weight_g).max() < 0.02 * params.weight_g
        assert abs(totals.mean() - params.weight_g) < 0.005 * params.weight_g

    def test_noise_only_touches_loaded_region(self):
        params = WalkerParams(speed=1.2, cadence=110.0, noise_scale=1.0)
        sim = small_sim(params=params)
        quiet = small_sim(params=WalkerParams(speed=1.2, cadence=110.0,
                                              noise_scale=0.0))
        for noisy_f, clean_f in zip(sim.frames[:80], quiet.frames[:80]):
            phantom = (noisy_f.values > 0) & (clean_f.values == 0)
            assert not phantom.any()

    def test_raw_values_stay_in_range(self):
        sim = small_sim()
        for f in sim.frames[::10]:
            assert f.values.max() <= 4095


class TestFootfalls:
    def test_alternating_feet(self):
        sim = small_sim()
        feet = [f.foot for f in sim.footfalls]
        assert all(a != b for a, b in zip(feet, feet[1:]))

    def test_lateral_placement(self):
        sim = small_sim()
        center = SHORT.width / 2
        for f in sim.footfalls:
            offset = f.y - center
            assert abs(abs(offset) - PARAMS.step_width / 2) < 1e-9
            if f.foot == "left":
                assert offset > 0  # left foot on the +y side
            else:
                assert offset < 0

    def test_nominal_step_length_without_obstacles(self):
        sim = small_sim()
        xs = [f.x for f in sim.footfalls]
        gaps = np.diff(xs[1:-1])  # interior steps, steady state
        assert np.allclose(gaps, PARAMS.step_length, atol=1e-9)


class TestObstacleInteraction:
    def obstacles(self, walkway=None, count=2):
        return tuple(make_schedule("anticipated", 100, count,
                                   walkway or WalkwayConfig(tile_count=12)))

    def test_clean_crossing_clearance_margin(self):
        from gaitway.obstacles import check_crossing
        walkway = WalkwayConfig(tile_count=12)
        obstacles = self.obstacles(walkway)
        sim = simulate(PARAMS, Scenario.clean(), walkway=walkway,
                       obstacles=obstacles, duration=30.0)
        left = [p for p in sim.foot_poses if p.foot == "left"]
        right = [p for p in sim.foot_poses if p.foot == "right"]
        for spec in obstacles:
            r = check_crossing(spec, left, right)
            assert r.crossed and r.success
            assert r.lead_clearance == pytest.approx(0.05, abs=1e-9)

    def test_trip_scenario_forces_collision(self):
        from gaitway.obstacles import check_crossing
        walkway = WalkwayConfig(tile_count=12)
        obstacles = self.obstacles(walkway)
        sim = simulate(PARAMS, Scenario.trip(1, 0.08), walkway=walkway,
                       obstacles=obstacles, duration=30.0)
        left = [p for p in sim.foot_poses if p.foot == "left"]
        right = [p for p in sim.foot_poses if p.foot == "right"]
        results = [check_crossing(s, left, right) for s in obstacles]
        assert results[0].success
        assert not results[1].success
        assert results[1].collision_foot is not None
        assert results[1].lead_clearance == pytest.approx(0.08 - 0.10, abs=1e-9)


class TestLoadModifiers:
    def test_no_load_is_identity(self):
        assert apply_load_modifiers(PARAMS, LoadCondition()) == PARAMS

    def test_cognitive_slows_most(self):
        cognitive = apply_load_modifiers(
            PARAMS, LoadCondition(cognitive=True))
        sound = apply_load_modifiers(
            PARAMS, LoadCondition(sound=BUSY_SOUND))
        visual = apply_load_modifiers(
            PARAMS, LoadCondition(visual=BUSY_VISUAL))
        assert cognitive.speed < sound.speed < PARAMS.speed
        assert visual.speed < PARAMS.speed
        for p in (cognitive, sound, visual):
            assert p.step_length_jitter > 0

    def test_factors_compose_multiplicatively(self):
        both = apply_load_modifiers(
            PARAMS, LoadCondition(sound=BUSY_SOUND, visual=BUSY_VISUAL))
        assert both.speed == pytest.approx(PARAMS.speed * 0.95 * 0.97)

    def test_cadence_scales_with_speed(self):
        # slowing preserves the step-length relation direction
        slowed = apply_load_modifiers(PARAMS, LoadCondition(cognitive=True))
        assert slowed.cadence < PARAMS.cadence or \
            slowed.step_length < PARAMS.step_length


class TestSlowdownScenarios:
    def test_dual_task_slowdown_stretches_session(self):
        windows = ((1.0, 3.0), (5.0, 7.0))
        clean = small_sim()
        slow = small_sim(scenario=Scenario.dual_task_slowdown(0.7),
                         sentence_windows=windows)
        assert slow.end_time > clean.end_time

    def test_hesitation_stretches_session(self):
        clean = small_sim()
        slow = small_sim(scenario=Scenario.hesitation(0.5, onset=1.0,
                                                      duration_s=1.0))
        assert slow.end_time > clean.end_time
        assert slow.end_time == pytest.approx(clean.end_time + 1.0, abs=0.02)
