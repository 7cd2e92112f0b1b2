"""Temporal gait analysis: contact events, step/stride metrics, foot angle,
head kinematics, and the per-session summary.

Event detection uses asymmetric force hysteresis (2000 g on, 1000 g off,
both sustained for 30 ms) so chatter near either threshold cannot produce
spurious heel-contact/toe-off pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

CONTACT_ON_G = 2000.0
CONTACT_OFF_G = 1000.0
SUSTAIN_S = 0.030
ANCHOR_WINDOW_S = 0.050
# Below this major/minor spread ratio a contact patch has no usable axis.
AXIS_RATIO_FLOOR = 1.2


@dataclass(frozen=True)
class GaitEvent:
    foot: str                     # left | right
    kind: str                     # contact_on | contact_off
    time: float
    anchor: tuple[float, float]   # early/late-stance COF, (nan, nan) if unknown


@dataclass(frozen=True)
class StepRecord:
    leading_foot: str
    length: float     # anterior displacement between contralateral contacts
    width: float      # |mediolateral| displacement of the same pair
    duration: float
    speed: float


@dataclass(frozen=True)
class StrideRecord:
    foot: str
    length: float
    duration: float


@dataclass
class FootAngle:
    degrees: float
    confident: bool


@dataclass
class GaitSummary:
    step_count: int
    mean_speed: float | None = None
    cadence: float | None = None
    step_length_mean: float | None = None
    step_length_sd: float | None = None
    step_width_mean: float | None = None
    step_width_sd: float | None = None
    stride_length_mean: float | None = None
    stance_time_mean: float | None = None
    foot_angle_left: float | None = None
    foot_angle_right: float | None = None
    symmetry_index: float | None = None
    flags: list = field(default_factory=list)


@dataclass
class HeadKinematics:
    path_length: float
    mean_speed: float
    rms_ml: float
    rms_vertical: float
    yaw_range: float


def detect_events(times, forces, foot: str = "unknown", cofs=None,
                  on_g: float = CONTACT_ON_G, off_g: float = CONTACT_OFF_G,
                  sustain_s: float = SUSTAIN_S) -> list[GaitEvent]:
    """Heel-contact / toe-off events from one foot's force series.

    contact_on fires when force stays above `on_g` for `sustain_s`;
    contact_off when it stays below `off_g` as long. The event is stamped at
    the first sample of the sustained run. A series that already starts
    above the on-threshold enters the contact state silently: the rise was
    never observed, so no event is invented for it.

    `cofs`, when given as an (n, 2) array aligned with `times`, provides the
    event anchors: the foot COF averaged over the first (on) or last (off)
    50 ms of stance.
    """
    times = np.asarray(times, dtype=float)
    forces = np.asarray(forces, dtype=float)
    if len(times) == 0:
        return []
    if cofs is not None:
        cofs = np.asarray(cofs, dtype=float)

    events: list[GaitEvent] = []
    in_contact = forces[0] > on_g
    run_start: int | None = None

    for i, (t, f) in enumerate(zip(times, forces)):
        if not in_contact:
            if f > on_g:
                if run_start is None:
                    run_start = i
                if t - times[run_start] >= sustain_s:
                    events.append(_event(foot, "contact_on", times, cofs, run_start))
                    in_contact = True
                    run_start = None
            else:
                run_start = None
        else:
            if f < off_g:
                if run_start is None:
                    run_start = i
                if t - times[run_start] >= sustain_s:
                    events.append(_event(foot, "contact_off", times, cofs, run_start))
                    in_contact = False
                    run_start = None
            else:
                run_start = None
    return events


def _event(foot, kind, times, cofs, idx) -> GaitEvent:
    t = float(times[idx])
    anchor = (math.nan, math.nan)
    if cofs is not None:
        if kind == "contact_on":
            sel = (times >= t) & (times <= t + ANCHOR_WINDOW_S)
        else:
            sel = (times >= t - ANCHOR_WINDOW_S) & (times <= t)
        pts = cofs[sel]
        pts = pts[~np.isnan(pts[:, 0])]
        if len(pts):
            anchor = (float(pts[:, 0].mean()), float(pts[:, 1].mean()))
    return GaitEvent(foot=foot, kind=kind, time=t, anchor=anchor)


def step_metrics(events: list[GaitEvent]) -> tuple[list[StepRecord], list[StrideRecord]]:
    """Steps (contralateral contact pairs) and strides (ipsilateral pairs).

    Consecutive contact_on events from the same foot do not form a step;
    they indicate a missed contralateral contact and are skipped.
    """
    ons = sorted((e for e in events if e.kind == "contact_on"), key=lambda e: e.time)
    steps: list[StepRecord] = []
    for prev, cur in zip(ons, ons[1:]):
        if prev.foot == cur.foot:
            continue
        if math.isnan(prev.anchor[0]) or math.isnan(cur.anchor[0]):
            continue
        dur = cur.time - prev.time
        if dur <= 0:
            continue
        length = cur.anchor[0] - prev.anchor[0]
        width = abs(cur.anchor[1] - prev.anchor[1])
        steps.append(StepRecord(cur.foot, float(length), float(width), float(dur),
                                float(length / dur)))

    strides: list[StrideRecord] = []
    for foot in ("left", "right"):
        own = [e for e in ons if e.foot == foot and not math.isnan(e.anchor[0])]
        for prev, cur in zip(own, own[1:]):
            strides.append(StrideRecord(foot, float(cur.anchor[0] - prev.anchor[0]),
                                        float(cur.time - prev.time)))
    return steps, strides


def foot_angle(cluster, side: str | None = None) -> FootAngle | None:
    """Angle of a foot cluster's force-weighted principal axis vs the lane.

    Geometric angle is in (-90, 90] degrees; for a known `side` the sign is
    flipped so positive always means toe-out. Near-isotropic patches
    (major/minor spread ratio under 1.2) report 0 degrees, not confident.
    Returns None when the patch has no spatial extent.
    """
    pts = []
    weights = []
    from .walkway import node_center  # local import avoids cycle at module load

    for blob in cluster.blobs:
        per_node = blob.total_force / len(blob.nodes) if blob.nodes else 0.0
        for (tile, row, col) in blob.nodes:
            pts.append(node_center(tile, row, col))
            weights.append(per_node)
    if len(pts) < 2:
        return None
    p = np.asarray(pts)
    w = np.asarray(weights, dtype=float)
    if w.sum() <= 0:
        w = np.ones(len(p))
    mu = (w[:, None] * p).sum(axis=0) / w.sum()
    d = p - mu
    cov = (w[:, None, None] * (d[:, :, None] * d[:, None, :])).sum(axis=0) / w.sum()
    evals, evecs = np.linalg.eigh(cov)
    if evals[1] <= 0:
        return None
    ratio = evals[1] / evals[0] if evals[0] > 0 else math.inf
    if ratio < AXIS_RATIO_FLOOR:
        return FootAngle(0.0, confident=False)
    axis = evecs[:, 1]
    if axis[0] < 0:
        axis = -axis
    if axis[0] == 0:
        deg = 90.0
    else:
        deg = math.degrees(math.atan2(axis[1], axis[0]))
    if side == "right":
        deg = -deg
    return FootAngle(float(deg), confident=True)


def head_kinematics(times, positions, yaws) -> HeadKinematics | None:
    """Path length, mean speed, detrended ML/vertical RMS, and yaw range.

    positions is (n, 3) as (x, y, z); returns None for fewer than 2 samples.
    """
    times = np.asarray(times, dtype=float)
    p = np.asarray(positions, dtype=float)
    if len(times) < 2:
        return None
    seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
    path = float(seg.sum())
    duration = float(times[-1] - times[0])
    mean_speed = path / duration if duration > 0 else 0.0
    rms_ml = float(np.sqrt(np.mean(signal.detrend(p[:, 1]) ** 2)))
    rms_v = float(np.sqrt(np.mean(signal.detrend(p[:, 2]) ** 2)))
    yaws = np.asarray(yaws, dtype=float)
    yaw_range = float(yaws.max() - yaws.min()) if len(yaws) else 0.0
    return HeadKinematics(path, float(mean_speed), rms_ml, rms_v, yaw_range)


def stance_times(events: list[GaitEvent]) -> list[float]:
    """contact_on -> contact_off durations, per foot, unterminated stances dropped."""
    out = []
    for foot in ("left", "right"):
        own = sorted((e for e in events if e.foot == foot), key=lambda e: e.time)
        t_on = None
        for e in own:
            if e.kind == "contact_on":
                t_on = e.time
            elif e.kind == "contact_off" and t_on is not None:
                out.append(float(e.time - t_on))
                t_on = None
    return out


def symmetry_index(left_force, right_force) -> float | None:
    """Mean |L-R|/(L+R) over double-support samples; 0 is perfect symmetry."""
    left = np.asarray(left_force, dtype=float)
    right = np.asarray(right_force, dtype=float)
    both = (left > 0) & (right > 0)
    if not both.any():
        return None
    l, r = left[both], right[both]
    return float(np.mean(np.abs(l - r) / (l + r)))


def gait_summary(steps: list[StepRecord], strides: list[StrideRecord],
                 events: list[GaitEvent], left_force=None, right_force=None,
                 angles_left=None, angles_right=None) -> GaitSummary:
    """Aggregate the walk into one summary record.

    Speed and cadence are taken over the active interval (first to last
    heel contact), so trailing quiet standing does not dilute them.
    """
    summary = GaitSummary(step_count=len(steps))
    ons = sorted((e for e in events if e.kind == "contact_on"), key=lambda e: e.time)

    if not steps:
        summary.flags.append("no_steps")
        return summary

    span = ons[-1].time - ons[0].time if len(ons) >= 2 else 0.0
    if span > 0:
        summary.cadence = float(len(steps) / span * 60.0)
        if not (math.isnan(ons[0].anchor[0]) or math.isnan(ons[-1].anchor[0])):
            summary.mean_speed = float((ons[-1].anchor[0] - ons[0].anchor[0]) / span)

    lengths = np.array([s.length for s in steps])
    widths = np.array([s.width for s in steps])
    summary.step_length_mean = float(lengths.mean())
    summary.step_length_sd = float(lengths.std())
    summary.step_width_mean = float(widths.mean())
    summary.step_width_sd = float(widths.std())
    if strides:
        summary.stride_length_mean = float(np.mean([s.length for s in strides]))
    stances = stance_times(events)
    if stances:
        summary.stance_time_mean = float(np.mean(stances))
    if left_force is not None and right_force is not None:
        summary.symmetry_index = symmetry_index(left_force, right_force)
    if angles_left:
        summary.foot_angle_left = float(np.mean([a.degrees for a in angles_left]))
    if angles_right:
        summary.foot_angle_right = float(np.mean([a.degrees for a in angles_right]))
    return summary
