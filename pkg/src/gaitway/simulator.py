"""Synthetic walker: head poses, foot poses, and pressure frames consistent
with programmed gait parameters. This is the measurement oracle the analytics
are tested against, so its guarantees are stronger than its realism.

Model notes. The gait is kinematic, not dynamic. Strikes alternate feet; a
strike at t is followed by double support of duration d = dsf * step period,
during which body weight transfers linearly between feet, so the total ground
force equals body weight at every instant. The swing foot follows a raised
cosine in x and a plateaued arc in z: the arc holds exactly its apex over the
middle 70 percent of the swing, which pins measured obstacle clearance to
apex minus obstacle height. Footfalls are planned so that crossing swings
overlap obstacles only inside that plateau. The vertical force profile is a
ramp (no M shape) with the center of force migrating heel to toe; that is
sufficient for event detection and COF analytics and is a documented
simplification.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .obstacles import FOOT_BOX_LENGTH_M, ObstacleSpec
from .poses import FootPose, HeadPose
from .walkway import (
    PITCH_M,
    RAW_MAX,
    TILE_COLS,
    TILE_ROWS,
    TILE_WIDTH_M,
    FORCE_MAX_G,
    PressureFrame,
    WalkwayConfig,
    force_to_raw,
)

FRAME_RATE_HZ = 100.0
POSE_RATE_HZ = 90.0

HEAD_HEIGHT_M = 1.7
HEAD_BOB_M = 0.02
ANKLE_HEIGHT_M = 0.06

HEEL_OFFSET_M = 0.04     # heel blob center forward of the ankle
TOE_OFFSET_M = 0.20      # forefoot blob center forward of the ankle
HEEL_SIGMA_M = 0.018
TOE_SIGMA_M = 0.022
NOISE_SD_RAW = 3.0

SWING_PLATEAU_PHASE = 0.15   # arc holds its apex for phase in [0.15, 0.85]
CROSS_MARGIN_M = 0.05        # clean crossings clear the slab by this much
PLANT_OFFSET_M = 0.45        # preferred plant distance before a slab
START_FOOT_X_M = 0.05

BUSY_SOUND_SPEED_FACTOR = 0.95
BUSY_VISUAL_SPEED_FACTOR = 0.97
COGNITIVE_SPEED_FACTOR = 0.92
LOAD_STEP_JITTER_M = 0.008


@dataclass(frozen=True)
class WalkerParams:
    speed: float                      # m/s
    cadence: float                    # steps/min
    step_width: float = 0.15
    foot_length: float = FOOT_BOX_LENGTH_M
    body_mass: float = 70.0           # kg
    swing_apex: float = 0.15          # max foot-bottom height, m
    double_support_fraction: float = 0.25
    noise_seed: int = 0
    noise_scale: float = 1.0
    step_length_jitter: float = 0.0   # sd of per-footfall placement noise, m

    def __post_init__(self):
        if self.speed <= 0:
            raise ConfigError("speed must be positive")
        if self.cadence <= 0:
            raise ConfigError("cadence must be positive")
        if not 0 < self.double_support_fraction < 0.5:
            raise ConfigError("double_support_fraction must be in (0, 0.5)")
        if self.swing_apex <= 0:
            raise ConfigError("swing_apex must be positive")
        if self.body_mass <= 0:
            raise ConfigError("body_mass must be positive")
        if self.step_width < 0 or self.step_width > TILE_WIDTH_M - 0.06:
            raise ConfigError("step_width must keep both feet on the lane")
        if self.noise_scale < 0 or self.step_length_jitter < 0:
            raise ConfigError("noise magnitudes must be nonnegative")

    @property
    def step_length(self) -> float:
        """Derived, not free: speed = cadence/60 * step_length."""
        return self.speed * 60.0 / self.cadence

    @property
    def step_period(self) -> float:
        return 60.0 / self.cadence

    @property
    def weight_g(self) -> float:
        return self.body_mass * 1000.0


@dataclass(frozen=True)
class Scenario:
    kind: str = "clean"               # clean | trip | hesitation | dual_task_slowdown
    obstacle_index: int | None = None
    apex_override: float | None = None
    speed_factor: float | None = None
    onset: object = None              # seconds, or "spawn" for hesitation
    duration_s: float | None = None

    def __post_init__(self):
        if self.kind == "clean":
            return
        if self.kind == "trip":
            if self.obstacle_index is None or self.obstacle_index < 0:
                raise ConfigError("trip scenario needs an obstacle index")
            if not self.apex_override or self.apex_override <= 0:
                raise ConfigError("trip scenario needs a positive apex override")
        elif self.kind in ("hesitation", "dual_task_slowdown"):
            if not self.speed_factor or not 0 < self.speed_factor <= 1:
                raise ConfigError("speed factor must be in (0, 1]")
            if self.kind == "hesitation" and self.onset is None:
                object.__setattr__(self, "onset", "spawn")
        else:
            raise ConfigError(f"unknown scenario kind {self.kind!r}")

    @classmethod
    def clean(cls) -> "Scenario":
        return cls("clean")

    @classmethod
    def trip(cls, obstacle_index: int, apex_override: float) -> "Scenario":
        return cls("trip", obstacle_index=obstacle_index, apex_override=apex_override)

    @classmethod
    def hesitation(cls, speed_factor: float, onset="spawn",
                   duration_s: float = 1.5) -> "Scenario":
        return cls("hesitation", speed_factor=speed_factor, onset=onset,
                   duration_s=duration_s)

    @classmethod
    def dual_task_slowdown(cls, speed_factor: float) -> "Scenario":
        return cls("dual_task_slowdown", speed_factor=speed_factor)


@dataclass(frozen=True)
class Footfall:
    index: int
    foot: str
    time: float       # strike, phase seconds (index 0 lands before t = 0)
    x: float
    y: float
    swing_apex: float # apex of the arc that arrives at this footfall


@dataclass
class SimulationResult:
    frames: list
    foot_poses: list
    head_poses: list
    footfalls: list
    params: WalkerParams
    head_start_x: float
    end_time: float


def apply_load_modifiers(params: WalkerParams, condition) -> WalkerParams:
    """Slow the walker and inflate step-length noise under load.

    Magnitudes are synthetic assumptions that exercise the dual-task-cost
    pipeline; they are not empirical claims. Modifiers compose
    multiplicatively.
    """
    factor = 1.0
    extra_jitter = 0.0
    if condition.sound.level == "busy":
        factor *= BUSY_SOUND_SPEED_FACTOR
        extra_jitter += LOAD_STEP_JITTER_M
    if condition.visual.level == "busy":
        factor *= BUSY_VISUAL_SPEED_FACTOR
        extra_jitter += LOAD_STEP_JITTER_M
    if condition.cognitive:
        factor *= COGNITIVE_SPEED_FACTOR
        extra_jitter += LOAD_STEP_JITTER_M
    if factor == 1.0 and extra_jitter == 0.0:
        return params
    return replace(params, speed=params.speed * factor,
                   step_length_jitter=params.step_length_jitter + extra_jitter)


class _TimeWarp:
    """Piecewise-linear map from wall time to gait phase time.

    Slowdown windows are given in wall time with a rate < 1; outside them
    phase advances at rate 1.
    """

    def __init__(self, windows=()):
        spans = sorted((float(a), float(b), float(r)) for a, b, r in windows
                       if b > a and r != 1.0)
        for (_, e0, _), (s1, _, _) in zip(spans, spans[1:]):
            if s1 < e0:
                raise ConfigError("slowdown windows overlap")
        self._starts = []
        self._phase_at = []
        self._rates = []
        t = 0.0
        s = 0.0
        for (a, b, r) in spans:
            if a > t:
                self._append(t, s, 1.0)
                s += a - t
                t = a
            self._append(t, s, r)
            s += (b - a) * r
            t = b
        self._append(t, s, 1.0)

    def _append(self, t, s, r):
        self._starts.append(t)
        self._phase_at.append(s)
        self._rates.append(r)

    def to_phase(self, t: float) -> float:
        i = bisect_right(self._starts, t) - 1
        return self._phase_at[i] + (t - self._starts[i]) * self._rates[i]

    def to_wall(self, s: float) -> float:
        i = bisect_right(self._phase_at, s) - 1
        i = min(i, len(self._starts) - 1)
        return self._starts[i] + (s - self._phase_at[i]) / self._rates[i]


def _plant_offset(step_length: float, depth: float) -> float:
    """Plant distance before a slab that keeps both crossing swings inside
    the arc plateau, preferring 0.45 m."""
    u_p = (1.0 - math.cos(math.pi * SWING_PLATEAU_PHASE)) / 2.0
    lo = FOOT_BOX_LENGTH_M + 2.0 * step_length * u_p + 0.01
    hi = step_length * (1.0 - 2.0 * u_p) - depth - 0.01
    if lo > hi:
        return lo
    return min(max(PLANT_OFFSET_M, lo), hi)


def plan_footfalls(params: WalkerParams, walkway_length: float,
                   obstacles: tuple[ObstacleSpec, ...] = (),
                   scenario: Scenario = Scenario("clean")) -> list[Footfall]:
    """Footfall positions and strike times for the whole walk.

    Index 0 is the pre-session plant (strike at -step/speed) so t = 0 opens
    mid double-support with full weight already on the walkway. Near each
    obstacle the approach is compressed into equal sub-steps so one footfall
    lands exactly at the plant point; the next strike lands past the slab.
    """
    L = params.step_length
    if walkway_length < START_FOOT_X_M + 2 * L + FOOT_BOX_LENGTH_M + 0.05:
        raise ConfigError(
            f"walkway {walkway_length:.2f} m too short for step length {L:.3f} m")
    max_x = walkway_length - FOOT_BOX_LENGTH_M - 0.02

    protected: set[int] = set()
    xs = [START_FOOT_X_M]
    for spec in sorted(obstacles, key=lambda o: o.x_position):
        plant = spec.x_position - _plant_offset(L, spec.depth)
        dist = plant - xs[-1]
        if dist <= 0.05:
            raise ConfigError(
                f"obstacle at {spec.x_position:.2f} m is too close to plan around")
        n = max(1, math.ceil(dist / L - 1e-9))
        base = xs[-1]
        xs.extend(base + dist * (k + 1) / n for k in range(n))
        land = max(plant + L, spec.trailing_edge + CROSS_MARGIN_M)
        if land > max_x:
            raise ConfigError(
                f"obstacle at {spec.x_position:.2f} m leaves no room to land past it")
        xs.append(land)
        protected.update({len(xs) - 2, len(xs) - 1})
    while xs[-1] + L <= max_x:
        xs.append(xs[-1] + L)
    if len(xs) < 3:
        raise ConfigError("walkway too short to take two steps")

    if params.step_length_jitter > 0:
        rng = np.random.default_rng((params.noise_seed, 17))
        noise = rng.normal(0.0, params.step_length_jitter, size=len(xs))
        for i in range(1, len(xs) - 1):
            if i not in protected and i + 1 not in protected:
                xs[i] += float(noise[i])

    times = [0.0] * len(xs)
    times[0] = -(xs[1] - xs[0]) / params.speed
    for i in range(1, len(xs)):
        dt = (xs[i] - xs[i - 1]) / params.speed
        if dt <= 0:
            raise ConfigError("footfall plan is not monotone; lower the jitter")
        times[i] = times[i - 1] + dt

    y_center = TILE_WIDTH_M / 2.0
    y_for = {"left": y_center + params.step_width / 2.0,
             "right": y_center - params.step_width / 2.0}
    first = "left"
    feet = [first if i % 2 == 0 else ("right" if first == "left" else "left")
            for i in range(len(xs))]

    falls = []
    for i, (x, t, foot) in enumerate(zip(xs, times, feet)):
        apex = params.swing_apex
        if i >= 2:
            sweep_lo, sweep_hi = xs[i - 2], x + FOOT_BOX_LENGTH_M
            for spec in obstacles:
                if sweep_lo < spec.trailing_edge and sweep_hi > spec.x_position:
                    apex = max(apex, spec.height_m + CROSS_MARGIN_M)
                    if scenario.kind == "trip" and spec.id == scenario.obstacle_index:
                        apex = scenario.apex_override
        falls.append(Footfall(i, foot, t, x, y_for[foot], apex))
    return falls


class _WalkerPlan:
    """Precomputed stance/swing schedule over phase time."""

    def __init__(self, params: WalkerParams, falls: list[Footfall]):
        self.params = params
        self.falls = falls
        n = len(falls)
        deltas = [falls[i].time - falls[i - 1].time for i in range(1, n)]
        deltas.append(deltas[-1])
        dsf = params.double_support_fraction
        # double-support duration after strike i
        self.ds = [dsf * min(deltas[i - 1] if i >= 1 else deltas[0], deltas[i])
                   for i in range(n)]
        # stance of footfall i ends when the next strike finishes its ramp
        self.stance_end = [falls[i + 1].time + self.ds[i + 1] if i + 1 < n
                           else math.inf for i in range(n)]
        self.by_foot = {"left": [f for f in falls if f.foot == "left"],
                        "right": [f for f in falls if f.foot == "right"]}
        self.end_time = falls[-1].time + self.ds[-1]

    def weight_g(self, i: int, s: float) -> float:
        """Ground force carried by footfall i's stance at phase s."""
        f = self.falls[i]
        W = self.params.weight_g
        if s < f.time or s >= self.stance_end[i]:
            return 0.0
        d_on = self.ds[i]
        if i > 0 and s < f.time + d_on:
            return W * (s - f.time) / d_on
        if i + 1 < len(self.falls):
            t_next = self.falls[i + 1].time
            if s >= t_next:
                return W * (1.0 - (s - t_next) / self.ds[i + 1])
        return W

    def active_stances(self, s: float):
        """(footfall, weight, stance progress in [0, 1]) for loaded feet."""
        out = []
        for i, f in enumerate(self.falls):
            if f.time <= s < self.stance_end[i]:
                w = self.weight_g(i, s)
                if w > 0:
                    span = self.stance_end[i] - f.time
                    if math.isinf(span):
                        span = self.falls[-1].time - f.time + 1.0
                    prog = min(1.0, (s - f.time) / span)
                    out.append((f, w, prog))
        return out

    def foot_position(self, foot: str, s: float) -> tuple[float, float, float]:
        own = self.by_foot[foot]
        idx = bisect_right([f.time for f in own], s) - 1
        if idx < 0:
            f = own[0]
            return (f.x, f.y, ANKLE_HEIGHT_M)
        cur = own[idx]
        i = cur.index
        if s < self.stance_end[i] or idx + 1 >= len(own):
            return (cur.x, cur.y, ANKLE_HEIGHT_M)
        nxt = own[idx + 1]
        lift = self.stance_end[i]
        dur = nxt.time - lift
        phi = (s - lift) / dur if dur > 0 else 1.0
        phi = min(max(phi, 0.0), 1.0)
        x = cur.x + (nxt.x - cur.x) * (1.0 - math.cos(math.pi * phi)) / 2.0
        y = cur.y + (nxt.y - cur.y) * phi
        cap = math.sin(math.pi * SWING_PLATEAU_PHASE)
        bottom = nxt.swing_apex * min(1.0, math.sin(math.pi * phi) / cap)
        return (x, y, bottom + ANKLE_HEIGHT_M)


def _slowdown_windows(scenario: Scenario, params: WalkerParams,
                      obstacles, sentence_windows, head_start_x: float):
    if scenario.kind == "dual_task_slowdown":
        return [(a, b, scenario.speed_factor) for a, b in sentence_windows]
    if scenario.kind == "hesitation":
        onset = scenario.onset
        if onset == "spawn":
            onset = 2.0
            for spec in sorted(obstacles, key=lambda o: o.x_position):
                if spec.mode == "unanticipated":
                    trigger_x = spec.x_position - spec.trigger_distance
                    onset = max(0.0, (trigger_x - head_start_x) / params.speed)
                    break
        dur = scenario.duration_s or 1.5
        return [(float(onset), float(onset) + dur / scenario.speed_factor,
                 scenario.speed_factor)]
    return []


def _render_frame(plan: _WalkerPlan, s: float, tile_count: int,
                  rng, noise_scale: float) -> np.ndarray:
    total_cols = tile_count * TILE_COLS
    lane = np.zeros((TILE_ROWS, total_cols), dtype=np.float64)
    ys = (np.arange(TILE_ROWS) + 0.5) * PITCH_M

    for fall, weight, prog in plan.active_stances(s):
        c = HEEL_OFFSET_M + (TOE_OFFSET_M - HEEL_OFFSET_M) * prog
        w_heel = (TOE_OFFSET_M - c) / (TOE_OFFSET_M - HEEL_OFFSET_M)
        for offset, sigma, share in ((HEEL_OFFSET_M, HEEL_SIGMA_M, w_heel),
                                     (TOE_OFFSET_M, TOE_SIGMA_M, 1.0 - w_heel)):
            if share <= 0:
                continue
            cx = fall.x + offset
            lo = max(0, int((cx - 4 * sigma) / PITCH_M - 0.5))
            hi = min(total_cols, int((cx + 4 * sigma) / PITCH_M + 1.5))
            if lo >= hi:
                continue
            xs = (np.arange(lo, hi) + 0.5) * PITCH_M
            gx = np.exp(-0.5 * ((xs - cx) / sigma) ** 2)
            gy = np.exp(-0.5 * ((ys - fall.y) / sigma) ** 2)
            patch = np.outer(gy, gx)
            mass = patch.sum()
            if mass > 0:
                lane[:, lo:hi] += patch * (weight * share / mass)

    raw = lane * (RAW_MAX / FORCE_MAX_G)
    # Sensor noise rides on loaded nodes only; sub-quantum gaussian tails
    # stay silent so noise cannot invent contact away from the feet.
    active = raw >= 0.5
    if noise_scale > 0 and active.any():
        raw[active] += rng.normal(0.0, NOISE_SD_RAW * noise_scale,
                                  size=int(active.sum()))
    raw = np.clip(np.rint(raw), 0, RAW_MAX).astype(np.uint16)
    return raw.reshape(TILE_ROWS, tile_count, TILE_COLS).transpose(1, 0, 2)


def simulate(params: WalkerParams, scenario: Scenario = Scenario("clean"),
             walkway: WalkwayConfig = None, duration: float = 60.0,
             obstacles: tuple[ObstacleSpec, ...] = (),
             sentence_windows: tuple[tuple[float, float], ...] = (),
             frame_rate: float = FRAME_RATE_HZ,
             pose_rate: float = POSE_RATE_HZ) -> SimulationResult:
    """Generate the three streams for one walk down the lane.

    The session ends at the walkway end or at `duration`, whichever comes
    first. Streams are deterministic for identical inputs.
    """
    if walkway is None:
        walkway = WalkwayConfig(tile_count=20)
    if duration <= 0:
        raise ConfigError("duration must be positive")
    if scenario.kind == "trip":
        if scenario.obstacle_index not in {o.id for o in obstacles}:
            raise ConfigError(
                f"trip obstacle index {scenario.obstacle_index} not in schedule")

    falls = plan_footfalls(params, walkway.length, tuple(obstacles), scenario)
    plan = _WalkerPlan(params, falls)
    head_start_x = falls[0].x + (falls[1].x - falls[0].x) / 2.0
    warp = _TimeWarp(_slowdown_windows(scenario, params, obstacles,
                                       sentence_windows, head_start_x))

    s_end = min(plan.end_time, warp.to_phase(duration))
    t_end = min(duration, warp.to_wall(s_end))
    rng = np.random.default_rng(params.noise_seed)
    step_freq = params.cadence / 60.0
    y_center = TILE_WIDTH_M / 2.0

    frames = []
    n_frames = int(math.floor(t_end * frame_rate)) + 1
    for i in range(n_frames):
        t = i / frame_rate
        values = _render_frame(plan, warp.to_phase(t), walkway.tile_count,
                               rng, params.noise_scale)
        frames.append(PressureFrame(seq=i, timestamp_us=round(t * 1e6),
                                    values=values))

    head_poses = []
    foot_poses = []
    n_poses = int(math.floor(t_end * pose_rate)) + 1
    for i in range(n_poses):
        t = i / pose_rate
        s = warp.to_phase(t)
        head_x = head_start_x + params.speed * s
        head_z = HEAD_HEIGHT_M + HEAD_BOB_M * math.sin(2 * math.pi * step_freq * s)
        head_poses.append(HeadPose(time=t, position=(head_x, y_center, head_z),
                                   yaw=0.0))
        for foot in ("left", "right"):
            x, y, z = plan.foot_position(foot, s)
            foot_poses.append(FootPose(time=t, foot=foot, position=(x, y, z),
                                       yaw=0.0))

    return SimulationResult(frames=frames, foot_poses=foot_poses,
                            head_poses=head_poses, footfalls=falls,
                            params=params, head_start_x=head_start_x,
                            end_time=t_end)
