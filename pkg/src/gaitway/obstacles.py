"""Obstacle scheduling, crossing evaluation, clearance, and response time.

Obstacles are curb-like slabs spanning the lane width. Each ankle tracker
implies a rigid foot box extending forward of the ankle; collision and
clearance come from sweeping that box across the slab's x-interval. A swing
foot exerts no pressure, so none of this can come from the mat: it is all
tracker-pose geometry.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import ConfigError
from .poses import FootPose
from .walkway import WalkwayConfig

OBSTACLE_HEIGHTS_MM = (25, 50, 75, 100, 125, 150, 190)
OBSTACLE_DEPTH_M = 0.10
FIRST_OBSTACLE_X_M = 2.0
OBSTACLE_SPACING_M = 2.0
TRIGGER_MIN_M = 1.5
TRIGGER_MAX_M = 3.0

FOOT_BOX_LENGTH_M = 0.26   # forward of the ankle
FOOT_BOX_WIDTH_M = 0.10
FOOT_BOX_HEIGHT_M = 0.06   # bottom face sits at ankle z - 0.06
MAX_POSE_GAP_S = 0.1


@dataclass(frozen=True)
class ObstacleSpec:
    id: int
    x_position: float            # leading edge, meters
    height_mm: int
    depth: float = OBSTACLE_DEPTH_M
    mode: str = "anticipated"    # anticipated | unanticipated
    trigger_distance: float | None = None   # head distance that spawns it

    def __post_init__(self):
        if self.height_mm not in OBSTACLE_HEIGHTS_MM:
            raise ConfigError(
                f"obstacle height {self.height_mm} mm not in {OBSTACLE_HEIGHTS_MM}")
        if self.mode not in ("anticipated", "unanticipated"):
            raise ConfigError(f"unknown obstacle mode {self.mode!r}")
        if self.mode == "unanticipated" and self.trigger_distance is None:
            raise ConfigError("unanticipated obstacle needs a trigger_distance")

    @property
    def height_m(self) -> float:
        return self.height_mm / 1000.0

    @property
    def trailing_edge(self) -> float:
        return self.x_position + self.depth


@dataclass
class TrialResult:
    obstacle_id: int
    crossed: bool
    success: bool
    collision_foot: str | None = None
    lead_foot: str | None = None
    lead_clearance: float | None = None
    trail_clearance: float | None = None
    art: float | None = None        # lead-foot based
    art_head: float | None = None   # head based, for comparability
    crossing_speed: float | None = None
    spawn_time: float | None = None
    reliable: bool = True


@dataclass
class _FootSweep:
    overlap_times: list = field(default_factory=list)
    clearance: float | None = None
    collision_time: float | None = None
    pass_time: float | None = None   # box fully past the trailing edge
    reach_time: float | None = None  # box front at the leading edge, interpolated


def box_front(x: float) -> float:
    return x + FOOT_BOX_LENGTH_M


def box_bottom(z: float) -> float:
    return z - FOOT_BOX_HEIGHT_M


def make_schedule(mode: str, height_mm: int, count: int,
                  walkway: WalkwayConfig | float, seed: int = 0) -> list[ObstacleSpec]:
    """Lay out `count` obstacles every 2 m starting at x = 2 m.

    Unanticipated mode draws each obstacle's spawn-trigger distance from
    Uniform[1.5, 3.0] m with the seed, so equal seeds give equal schedules.
    """
    if height_mm not in OBSTACLE_HEIGHTS_MM:
        raise ConfigError(
            f"obstacle height {height_mm} mm not in {OBSTACLE_HEIGHTS_MM}")
    if mode not in ("anticipated", "unanticipated"):
        raise ConfigError(f"unknown obstacle mode {mode!r}")
    if count < 1:
        raise ConfigError("obstacle count must be >= 1")
    length = walkway.length if isinstance(walkway, WalkwayConfig) else float(walkway)
    last_edge = FIRST_OBSTACLE_X_M + (count - 1) * OBSTACLE_SPACING_M + OBSTACLE_DEPTH_M
    if last_edge > length:
        raise ConfigError(
            f"{count} obstacles need {last_edge:.2f} m but walkway is {length:.2f} m")

    rng = random.Random(seed)
    specs = []
    for k in range(count):
        trigger = rng.uniform(TRIGGER_MIN_M, TRIGGER_MAX_M) if mode == "unanticipated" else None
        specs.append(ObstacleSpec(id=k, x_position=FIRST_OBSTACLE_X_M + k * OBSTACLE_SPACING_M,
                                  height_mm=height_mm, mode=mode,
                                  trigger_distance=trigger))
    return specs


def resolve_spawn_time(spec: ObstacleSpec, head_times, head_xs) -> float | None:
    """When the obstacle appears. Anticipated slabs exist from t = 0;
    unanticipated ones pop in at the first head sample within trigger range.
    """
    if spec.mode == "anticipated":
        return 0.0
    threshold = spec.x_position - spec.trigger_distance
    for t, x in zip(head_times, head_xs):
        if x >= threshold:
            return float(t)
    return None


def _sweep_foot(poses: list[FootPose], spec: ObstacleSpec) -> _FootSweep:
    sweep = _FootSweep()
    min_gap = None
    prev = None
    for p in poses:
        x = p.position[0]
        front = box_front(x)
        bottom = box_bottom(p.position[2])
        if prev is not None:
            pf = box_front(prev.position[0])
            if pf < spec.x_position <= front and sweep.reach_time is None:
                frac = (spec.x_position - pf) / (front - pf)
                sweep.reach_time = prev.time + frac * (p.time - prev.time)
        elif front >= spec.x_position and sweep.reach_time is None:
            sweep.reach_time = p.time
        overlapping = front > spec.x_position and x < spec.trailing_edge
        if overlapping:
            sweep.overlap_times.append(p.time)
            gap = bottom - spec.height_m
            if min_gap is None or gap < min_gap:
                min_gap = gap
            if gap < 0 and sweep.collision_time is None:
                sweep.collision_time = p.time
        if x >= spec.trailing_edge and sweep.pass_time is None:
            sweep.pass_time = p.time
        prev = p
    sweep.clearance = None if min_gap is None else float(min_gap)
    return sweep


def _window_speed(times, xs, t0: float, t1: float) -> float | None:
    pairs = [(t, x) for t, x in zip(times, xs) if t0 <= t <= t1]
    if len(pairs) < 2 or pairs[-1][0] <= pairs[0][0]:
        return None
    return (pairs[-1][1] - pairs[0][1]) / (pairs[-1][0] - pairs[0][0])


def check_crossing(spec: ObstacleSpec, left: list[FootPose], right: list[FootPose],
                   head_times=None, head_xs=None,
                   spawn_time: float | None = None) -> TrialResult:
    """Sweep both foot boxes across the slab and score the trial.

    Collision means the box bottom dipped below the obstacle top while
    overlapping it in x; clearance is the minimum bottom-minus-top gap over
    those frames, so collision and clearance < 0 are the same statement.
    The lead foot is the first whose box clears the trailing edge.
    """
    if spawn_time is None:
        if spec.mode == "anticipated":
            spawn_time = 0.0
        elif head_times is not None:
            spawn_time = resolve_spawn_time(spec, head_times, head_xs)
    if spec.mode == "unanticipated" and spawn_time is None:
        # the slab never appeared, so there was nothing to cross
        return TrialResult(obstacle_id=spec.id, crossed=False, success=False)

    sweeps = {"left": _sweep_foot(left, spec), "right": _sweep_foot(right, spec)}
    result = TrialResult(obstacle_id=spec.id, crossed=False, success=False,
                         spawn_time=spawn_time)

    passed = {f: s.pass_time for f, s in sweeps.items() if s.pass_time is not None}
    result.crossed = len(passed) == 2
    if passed:
        result.lead_foot = min(passed, key=passed.get)

    collisions = {f: s.collision_time for f, s in sweeps.items()
                  if s.collision_time is not None}
    if collisions:
        result.collision_foot = min(collisions, key=collisions.get)
    result.success = result.crossed and not collisions

    if result.lead_foot is not None:
        trail = "right" if result.lead_foot == "left" else "left"
        result.lead_clearance = sweeps[result.lead_foot].clearance
        result.trail_clearance = sweeps[trail].clearance

    if spec.mode == "unanticipated" and spawn_time is not None and result.lead_foot:
        reach = sweeps[result.lead_foot].reach_time
        if reach is not None and reach >= spawn_time:
            result.art = float(reach - spawn_time)
        if head_times is not None:
            head_reach = _head_reach_time(spec, head_times, head_xs, spawn_time)
            if head_reach is not None:
                result.art_head = float(head_reach - spawn_time)

    overlap = sorted(t for s in sweeps.values() for t in s.overlap_times)
    if overlap:
        t0, t1 = overlap[0], overlap[-1]
        if head_times is not None:
            result.crossing_speed = _window_speed(head_times, head_xs, t0, t1)
        if result.crossing_speed is None:
            mids = _mean_foot_track(left, right)
            result.crossing_speed = _window_speed([t for t, _ in mids],
                                                  [x for _, x in mids], t0, t1)
        for s in sweeps.values():
            ts = s.overlap_times
            if any(b - a > MAX_POSE_GAP_S for a, b in zip(ts, ts[1:])):
                result.reliable = False
    return result


def _head_reach_time(spec, head_times, head_xs, spawn_time) -> float | None:
    prev_t = prev_x = None
    for t, x in zip(head_times, head_xs):
        if prev_x is not None and prev_x < spec.x_position <= x and t >= spawn_time:
            frac = (spec.x_position - prev_x) / (x - prev_x)
            return prev_t + frac * (t - prev_t)
        if prev_x is None and x >= spec.x_position:
            return float(t)
        prev_t, prev_x = t, x
    return None


def _mean_foot_track(left: list[FootPose], right: list[FootPose]):
    """Pelvis proxy: mean foot x at each left-sample time, right interpolated."""
    if not left or not right:
        return []
    rts = [p.time for p in right]
    rxs = [p.position[0] for p in right]
    out = []
    j = 0
    for p in left:
        while j + 1 < len(rts) and rts[j + 1] <= p.time:
            j += 1
        if j + 1 < len(rts) and rts[j] <= p.time <= rts[j + 1]:
            frac = (p.time - rts[j]) / (rts[j + 1] - rts[j])
            rx = rxs[j] + frac * (rxs[j + 1] - rxs[j])
            out.append((p.time, 0.5 * (p.position[0] + rx)))
    return out


def available_response_time(spec: ObstacleSpec, left: list[FootPose],
                            right: list[FootPose],
                            spawn_time: float | None = None,
                            head_times=None, head_xs=None) -> float:
    """Seconds between obstacle spawn and the lead foot's box front reaching
    its leading edge, interpolated between pose frames. Raises ValueError for
    anticipated obstacles or when the foot never arrives.
    """
    if spec.mode != "unanticipated":
        raise ValueError("available response time is defined only for unanticipated obstacles")
    result = check_crossing(spec, left, right, head_times=head_times,
                            head_xs=head_xs, spawn_time=spawn_time)
    if result.art is None:
        raise ValueError("obstacle was never reached after spawn")
    return result.art


def success_rate(results: list[TrialResult]) -> float:
    crossed = [r for r in results if r.crossed]
    if not crossed:
        raise ValueError("success rate undefined with zero crossed trials")
    return sum(1 for r in crossed if r.success) / len(crossed)
