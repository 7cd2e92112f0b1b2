"""Per-frame spatial analysis of pressure frames.

Pipeline: contact mask -> 8-connected blobs -> foot clusters (heel and
forefoot blobs of one foot merge) -> temporal tracks with left/right side
assignment. All positions are node-center world coordinates in meters;
forces are grams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .walkway import (
    CONTACT_THRESHOLD_G,
    TILE_COLS,
    PressureFrame,
    contact_mask,
    lane_node_coords,
    raw_to_force,
)

# Blobs whose bounding boxes are closer than this merge into one foot.
FOOT_MERGE_DISTANCE_M = 0.10
# Max COF travel between consecutive frames for a cluster to stay on a track.
TRACK_GATE_M = 0.30
# A track with no matched cluster for longer than this is closed.
TRACK_MAX_GAP_S = 0.05

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass
class Blob:
    """One 8-connected region of active nodes."""

    nodes: list  # (tile, row, col) triples
    total_force: float
    peak_force: float
    cof: tuple[float, float]
    bbox: tuple[tuple[float, float], tuple[float, float]]  # ((xmin, ymin), (xmax, ymax))


@dataclass
class FootCluster:
    """One or more blobs that together form a single foot's contact patch."""

    blobs: list
    total_force: float
    cof: tuple[float, float]
    bbox: tuple[tuple[float, float], tuple[float, float]]


@dataclass
class TrackSample:
    time: float
    cluster: FootCluster
    total_force: float
    cof: tuple[float, float]


@dataclass
class FootTrack:
    """A temporally continuous contact episode of one foot (one stance)."""

    id: int
    side: str = "unknown"  # left | right | unknown; never flips once set
    samples: list = field(default_factory=list)

    @property
    def start_time(self) -> float:
        return self.samples[0].time

    @property
    def last_time(self) -> float:
        return self.samples[-1].time

    @property
    def last_cof(self) -> tuple[float, float]:
        return self.samples[-1].cof

    def peak_sample(self) -> TrackSample:
        return max(self.samples, key=lambda s: s.total_force)


def segment_blobs(mask: np.ndarray, frame: PressureFrame) -> list[Blob]:
    """8-connected components of the mask with force-weighted centroids."""
    if not mask.any():
        return []
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    grid = frame.lane_grid()
    forces = raw_to_force(grid)
    xs, ys = lane_node_coords(frame.tile_count)
    blobs = []
    for lbl in range(1, count + 1):
        rows, gcols = np.nonzero(labels == lbl)
        f = forces[rows, gcols]
        total = float(f.sum())
        x = xs[gcols]
        y = ys[rows]
        cof = (float((f * x).sum() / total), float((f * y).sum() / total))
        nodes = [
            (int(gc) // TILE_COLS, int(r), int(gc) % TILE_COLS)
            for r, gc in zip(rows, gcols)
        ]
        blobs.append(
            Blob(
                nodes=nodes,
                total_force=total,
                peak_force=float(f.max()),
                cof=cof,
                bbox=((float(x.min()), float(y.min())), (float(x.max()), float(y.max()))),
            )
        )
    return blobs


def _bbox_distance(a, b) -> float:
    (axmin, aymin), (axmax, aymax) = a
    (bxmin, bymin), (bxmax, bymax) = b
    dx = max(0.0, max(axmin - bxmax, bxmin - axmax))
    dy = max(0.0, max(aymin - bymax, bymin - aymax))
    return float(np.hypot(dx, dy))


def cluster_feet(blobs: list[Blob], merge_distance: float = FOOT_MERGE_DISTANCE_M) -> list[FootCluster]:
    """Agglomerate blobs into foot clusters by bounding-box proximity.

    A heel and forefoot separated by an arch gap register as distinct blobs;
    anything within `merge_distance` is considered one foot.
    """
    n = len(blobs)
    if n == 0:
        return []
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if _bbox_distance(blobs[i].bbox, blobs[j].bbox) <= merge_distance:
                parent[find(i)] = find(j)

    groups: dict[int, list[Blob]] = {}
    for i, b in enumerate(blobs):
        groups.setdefault(find(i), []).append(b)

    clusters = []
    for members in groups.values():
        total = sum(b.total_force for b in members)
        cx = sum(b.total_force * b.cof[0] for b in members) / total
        cy = sum(b.total_force * b.cof[1] for b in members) / total
        xmin = min(b.bbox[0][0] for b in members)
        ymin = min(b.bbox[0][1] for b in members)
        xmax = max(b.bbox[1][0] for b in members)
        ymax = max(b.bbox[1][1] for b in members)
        clusters.append(
            FootCluster(
                blobs=members,
                total_force=float(total),
                cof=(float(cx), float(cy)),
                bbox=((xmin, ymin), (xmax, ymax)),
            )
        )
    # Deterministic output order regardless of union-find internals.
    clusters.sort(key=lambda c: (c.cof[0], c.cof[1]))
    return clusters


def center_of_force(source) -> tuple[float, float] | None:
    """Global force-weighted mean position.

    `source` may be a PressureFrame or a list of blobs/clusters. Returns
    None when nothing is in contact (distinct from a COF at the origin).
    """
    if isinstance(source, PressureFrame):
        mask = contact_mask(source)
        if not mask.any():
            return None
        source = cluster_feet(segment_blobs(mask, source))
    items = list(source)
    if not items:
        return None
    total = sum(it.total_force for it in items)
    if total <= 0:
        return None
    x = sum(it.total_force * it.cof[0] for it in items) / total
    y = sum(it.total_force * it.cof[1] for it in items) / total
    return (float(x), float(y))


class FootTracker:
    """Sequential nearest-neighbor association of foot clusters over frames.

    Feed time-ordered frames via update(); finished tracks accumulate in
    `closed`. Side assignment: the first time two tracks are concurrently
    active, the one with smaller mediolateral y is called "right" (fixed
    convention relative to the walking axis); afterwards each new track
    takes the side opposite its most recent predecessor.
    """

    def __init__(self, gate_m: float = TRACK_GATE_M, max_gap_s: float = TRACK_MAX_GAP_S):
        self.gate_m = gate_m
        self.max_gap_s = max_gap_s
        self.active: list[FootTrack] = []
        self.closed: list[FootTrack] = []
        self._next_id = 1
        self._last_spawned: FootTrack | None = None

    def update(self, time: float, clusters: list[FootCluster]) -> None:
        self._expire(time)

        # Greedy nearest-neighbor matching inside the gate.
        pairs = []
        for ci, c in enumerate(clusters):
            for t in self.active:
                d = float(np.hypot(c.cof[0] - t.last_cof[0], c.cof[1] - t.last_cof[1]))
                if d <= self.gate_m:
                    pairs.append((d, ci, t))
        pairs.sort(key=lambda p: (p[0], p[1], p[2].id))
        matched_clusters: set[int] = set()
        matched_tracks: set[int] = set()
        for d, ci, t in pairs:
            if ci in matched_clusters or t.id in matched_tracks:
                continue
            matched_clusters.add(ci)
            matched_tracks.add(t.id)
            c = clusters[ci]
            t.samples.append(TrackSample(time, c, c.total_force, c.cof))

        for ci, c in enumerate(clusters):
            if ci in matched_clusters:
                continue
            self._spawn(time, c)

    def finish(self) -> list[FootTrack]:
        """Close every remaining track and return all tracks in start order."""
        self.closed.extend(self.active)
        self.active = []
        self.closed.sort(key=lambda t: (t.start_time, t.id))
        return self.closed

    def _expire(self, time: float) -> None:
        still = []
        for t in self.active:
            if time - t.last_time > self.max_gap_s:
                self.closed.append(t)
            else:
                still.append(t)
        self.active = still

    def _spawn(self, time: float, cluster: FootCluster) -> None:
        track = FootTrack(id=self._next_id)
        self._next_id += 1
        track.samples.append(TrackSample(time, cluster, cluster.total_force, cluster.cof))

        concurrent = [t for t in self.active if t is not track]
        if len(concurrent) == 1:
            other = concurrent[0]
            if other.side in ("left", "right"):
                track.side = "left" if other.side == "right" else "right"
            else:
                # First double support resolves both by mediolateral order.
                if cluster.cof[1] < other.last_cof[1]:
                    track.side, other.side = "right", "left"
                else:
                    track.side, other.side = "left", "right"
        elif not concurrent and self._last_spawned is not None:
            prev = self._last_spawned.side
            if prev in ("left", "right"):
                track.side = "left" if prev == "right" else "right"

        self.active.append(track)
        self._last_spawned = track


def track_feet(frames_clusters: list[tuple[float, list[FootCluster]]], gate_m: float = TRACK_GATE_M,
               max_gap_s: float = TRACK_MAX_GAP_S) -> list[FootTrack]:
    """Fold a time-ordered (time, clusters) sequence into foot tracks."""
    tracker = FootTracker(gate_m=gate_m, max_gap_s=max_gap_s)
    for time, clusters in frames_clusters:
        tracker.update(time, clusters)
    return tracker.finish()


def force_distribution(tracks: list[FootTrack], time: float) -> float | None:
    """Share of total ground force on the left foot at one instant.

    1.0 when only the left foot is loaded, 0.0 when only the right;
    None when nothing (with a resolved side) is in contact.
    """
    left = right = 0.0
    seen = False
    for t in tracks:
        for s in t.samples:
            if s.time == time:
                if t.side == "left":
                    left += s.total_force
                    seen = True
                elif t.side == "right":
                    right += s.total_force
                    seen = True
    if not seen or left + right <= 0:
        return None
    return left / (left + right)


def side_force_series(tracks: list[FootTrack], times: np.ndarray):
    """Per-side force and COF series on a common time base.

    Returns {"left": (force, cof), "right": ...} where force is an array
    aligned with `times` (grams; 0 where the side has no contact) and cof is
    an (n, 2) array of NaN-padded positions.
    """
    times = np.asarray(times, dtype=float)
    index = {round(t, 9): i for i, t in enumerate(times)}
    out = {}
    for side in ("left", "right"):
        force = np.zeros(len(times))
        cof = np.full((len(times), 2), np.nan)
        weight = np.zeros(len(times))
        for t in tracks:
            if t.side != side:
                continue
            for s in t.samples:
                i = index.get(round(s.time, 9))
                if i is None:
                    continue
                force[i] += s.total_force
                if np.isnan(cof[i, 0]):
                    cof[i] = (0.0, 0.0)
                cof[i, 0] += s.total_force * s.cof[0]
                cof[i, 1] += s.total_force * s.cof[1]
                weight[i] += s.total_force
        loaded = weight > 0
        cof[loaded] /= weight[loaded, None]
        out[side] = (force, cof)
    return out
