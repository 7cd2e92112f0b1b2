"""Cognitive-load paradigm: sentence bank, playback scheduling, number
recall scoring, dual-task cost, and the sound/visual condition tags.

The condition tags are pure metadata. They are logged with the session and
parameterize the simulator's perturbation hooks; nothing here renders audio
or avatars.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass
from importlib import resources

from .errors import ConfigError

BANK_SIZE = 45
SENTENCES_PER_WALK = 7
WALK_WINDOW_S = 60.0
JITTER_S = 1.0

QUIET_SOURCE_COUNT = 1
BUSY_SOURCE_COUNT = 6


@dataclass(frozen=True)
class Sentence:
    id: int
    text: str
    numbers: tuple[int, ...]
    duration: float = 3.0

    def __post_init__(self):
        if not 1 <= self.id <= BANK_SIZE:
            raise ConfigError(f"sentence id {self.id} outside [1, {BANK_SIZE}]")
        if not self.numbers:
            raise ConfigError(f"sentence {self.id} embeds no numbers")
        if self.duration <= 0:
            raise ConfigError(f"sentence {self.id} has nonpositive duration")


@dataclass(frozen=True)
class ScheduleEntry:
    sentence_id: int
    start_time: float
    duration: float

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


@dataclass(frozen=True)
class PlaybackSchedule:
    entries: tuple[ScheduleEntry, ...]

    def __post_init__(self):
        ids = [e.sentence_id for e in self.entries]
        if len(ids) != SENTENCES_PER_WALK or len(set(ids)) != SENTENCES_PER_WALK:
            raise ConfigError(f"schedule needs {SENTENCES_PER_WALK} distinct sentences")
        spans = sorted((e.start_time, e.end_time) for e in self.entries)
        if spans[0][0] < 0 or spans[-1][1] > WALK_WINDOW_S:
            raise ConfigError("schedule spills outside the walk window")
        for (_, end), (start, _) in zip(spans, spans[1:]):
            if start < end:
                raise ConfigError("schedule entries overlap")


@dataclass(frozen=True)
class SoundLevel:
    level: str                # quiet | busy
    source_count: int
    loudness_tier: str        # low | high
    spectral_tier: str        # narrow | wide

    def __post_init__(self):
        if self.level not in ("quiet", "busy"):
            raise ConfigError(f"unknown sound level {self.level!r}")
        if self.level == "busy" and self.source_count <= QUIET_SOURCE_COUNT:
            raise ConfigError("busy sound must have more sources than quiet")


@dataclass(frozen=True)
class VisualLoad:
    level: str                # empty | busy
    avatar_count: int
    avatar_speed: float       # m/s

    def __post_init__(self):
        if self.level not in ("empty", "busy"):
            raise ConfigError(f"unknown visual load {self.level!r}")
        if self.level == "empty" and self.avatar_count != 0:
            raise ConfigError("empty scene cannot contain avatars")
        if self.level == "busy" and self.avatar_count < 1:
            raise ConfigError("busy scene needs at least one avatar")


QUIET_SOUND = SoundLevel("quiet", QUIET_SOURCE_COUNT, "low", "narrow")
BUSY_SOUND = SoundLevel("busy", BUSY_SOURCE_COUNT, "high", "wide")
EMPTY_VISUAL = VisualLoad("empty", 0, 0.0)
BUSY_VISUAL = VisualLoad("busy", 8, 1.4)


@dataclass(frozen=True)
class LoadCondition:
    sound: SoundLevel = QUIET_SOUND
    visual: VisualLoad = EMPTY_VISUAL
    cognitive: bool = False


@dataclass(frozen=True)
class RecallScore:
    correct: int
    total: int
    accuracy: float
    ordered_correct: int      # secondary, position-sensitive count


def load_sentence_bank(path=None) -> list[Sentence]:
    """Sentence bank from a JSONL file, one record per line; ships with the
    package by default."""
    if path is None:
        text = (resources.files("gaitway") / "data" / "sentences.jsonl").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    bank = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        bank.append(Sentence(id=rec["id"], text=rec["text"],
                             numbers=tuple(rec["numbers"]),
                             duration=float(rec.get("duration", 3.0))))
    return bank


def schedule_sentences(bank: list[Sentence], seed: int = 0) -> PlaybackSchedule:
    """7 distinct sentences sampled by seed, one per 60/7 s slot.

    Each start aims at its slot center minus half the sentence duration,
    gets Uniform[-1, +1] s of jitter, and is clamped into the slot so the
    entries stay disjoint and inside [0, 60).
    """
    if len(bank) != BANK_SIZE:
        raise ConfigError(f"sentence bank must hold {BANK_SIZE} entries, got {len(bank)}")
    by_id = {s.id: s for s in bank}
    if len(by_id) != BANK_SIZE:
        raise ConfigError("sentence bank contains duplicate ids")

    rng = random.Random(seed)
    chosen = rng.sample(sorted(by_id), SENTENCES_PER_WALK)
    slot = WALK_WINDOW_S / SENTENCES_PER_WALK
    entries = []
    for k, sid in enumerate(chosen):
        duration = by_id[sid].duration
        start = k * slot + slot / 2 - duration / 2 + rng.uniform(-JITTER_S, JITTER_S)
        start = min(max(start, k * slot), (k + 1) * slot - duration)
        entries.append(ScheduleEntry(sid, float(start), duration))
    return PlaybackSchedule(tuple(entries))


def presented_numbers(bank: list[Sentence], schedule: PlaybackSchedule) -> list[int]:
    """Every number the participant heard, in playback order."""
    by_id = {s.id: s for s in bank}
    out = []
    for entry in schedule.entries:
        out.extend(by_id[entry.sentence_id].numbers)
    return out


def score_recall(presented, reported) -> RecallScore:
    """Order-insensitive multiset match of reported numbers against the
    presented ones; a position-sensitive count rides along as a secondary
    statistic."""
    presented = list(presented)
    reported = list(reported)
    if not presented:
        raise ValueError("recall undefined with nothing presented")
    overlap = Counter(presented) & Counter(reported)
    correct = sum(overlap.values())
    ordered = sum(1 for p, r in zip(presented, reported) if p == r)
    return RecallScore(correct=correct, total=len(presented),
                       accuracy=correct / len(presented), ordered_correct=ordered)


def dual_task_cost(single_value: float, dual_value: float) -> float:
    """Percent change from single-task to dual-task performance.

    Positive means worse under load for higher-is-better metrics; callers
    flip the sign for lower-is-better metrics.
    """
    if single_value <= 0:
        raise ValueError("dual-task cost needs a positive single-task value")
    return (single_value - dual_value) / single_value * 100.0
