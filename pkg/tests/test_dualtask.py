"""Sentence bank, playback scheduling, recall scoring, dual-task cost."""

import pytest
from hypothesis import given, settings, strategies as st

from gaitway.dualtask import (
    BANK_SIZE,
    BUSY_SOUND,
    BUSY_VISUAL,
    EMPTY_VISUAL,
    QUIET_SOUND,
    SENTENCES_PER_WALK,
    WALK_WINDOW_S,
    LoadCondition,
    Sentence,
    SoundLevel,
    VisualLoad,
    dual_task_cost,
    presented_numbers,
    schedule_sentences,
    score_recall,
)
from gaitway.errors import ConfigError


class TestBank:
    def test_forty_five_sentences(self, sentence_bank):
        assert len(sentence_bank) == BANK_SIZE == 45

    def test_ids_unique_and_in_range(self, sentence_bank):
        ids = [s.id for s in sentence_bank]
        assert sorted(ids) == list(range(1, 46))

    def test_numbers_nonempty_small_integers(self, sentence_bank):
        for s in sentence_bank:
            assert s.numbers
            assert all(1 <= n <= 99 for n in s.numbers)

    def test_numbers_appear_in_text(self, sentence_bank):
        for s in sentence_bank:
            for n in s.numbers:
                assert str(n) in s.text

    def test_durations_fit_slots(self, sentence_bank):
        slot = WALK_WINDOW_S / SENTENCES_PER_WALK
        for s in sentence_bank:
            assert 0 < s.duration < slot - 2  # jitter room on both sides

    def test_sentence_validation(self):
        with pytest.raises(ConfigError):
            Sentence(id=0, text="x", numbers=(1,))
        with pytest.raises(ConfigError):
            Sentence(id=46, text="x", numbers=(1,))
        with pytest.raises(ConfigError):
            Sentence(id=1, text="x", numbers=())


class TestSchedule:
    def test_seven_distinct_disjoint(self, sentence_bank):
        schedule = schedule_sentences(sentence_bank, seed=0)
        ids = [e.sentence_id for e in schedule.entries]
        assert len(ids) == 7
        assert len(set(ids)) == 7
        spans = sorted((e.start_time, e.end_time) for e in schedule.entries)
        assert spans[0][0] >= 0
        assert spans[-1][1] <= 60
        for (_, end), (start, _) in zip(spans, spans[1:]):
            assert start >= end

    def test_deterministic_per_seed(self, sentence_bank):
        a = schedule_sentences(sentence_bank, seed=9)
        b = schedule_sentences(sentence_bank, seed=9)
        c = schedule_sentences(sentence_bank, seed=10)
        assert a == b
        assert a != c

    @given(st.integers(min_value=0, max_value=10 ** 9))
    @settings(max_examples=200, deadline=None)
    def test_invariants_hold_for_any_seed(self, seed):
        from gaitway.dualtask import load_sentence_bank
        schedule = schedule_sentences(load_sentence_bank(), seed=seed)
        ids = {e.sentence_id for e in schedule.entries}
        assert len(ids) == 7
        spans = sorted((e.start_time, e.end_time) for e in schedule.entries)
        assert spans[0][0] >= 0 and spans[-1][1] <= 60
        assert all(b[0] >= a[1] for a, b in zip(spans, spans[1:]))

    def test_bank_size_enforced(self, sentence_bank):
        with pytest.raises(ConfigError):
            schedule_sentences(sentence_bank[:44], seed=0)

    def test_presented_numbers_in_playback_order(self, sentence_bank):
        schedule = schedule_sentences(sentence_bank, seed=2)
        by_id = {s.id: s for s in sentence_bank}
        expect = []
        for e in schedule.entries:
            expect.extend(by_id[e.sentence_id].numbers)
        assert presented_numbers(sentence_bank, schedule) == expect


class TestRecall:
    def test_partial_recall_oracle(self):
        score = score_recall([3, 7, 12, 9, 5, 14, 2], [7, 12, 99])
        assert score.correct == 2
        assert score.total == 7
        assert score.accuracy == pytest.approx(2 / 7)

    def test_multiset_not_set(self):
        score = score_recall([5, 5, 7], [5, 5, 5])
        assert score.correct == 2

    def test_perfect_recall(self):
        score = score_recall([4, 8], [8, 4])
        assert score.accuracy == 1.0
        assert score.ordered_correct == 0  # order-sensitive count differs

    def test_ordered_correct_positional(self):
        score = score_recall([4, 8, 15], [4, 9, 15])
        assert score.ordered_correct == 2

    def test_empty_presented_raises(self):
        with pytest.raises(ValueError):
            score_recall([], [1])

    def test_empty_report_scores_zero(self):
        score = score_recall([1, 2], [])
        assert score.correct == 0
        assert score.accuracy == 0.0


class TestCost:
    def test_slowdown_oracle(self):
        assert dual_task_cost(1.2, 1.0) == pytest.approx(16.666666666666668)

    def test_improvement_is_negative(self):
        assert dual_task_cost(1.0, 1.1) == pytest.approx(-10.0)

    def test_zero_single_task_raises(self):
        with pytest.raises(ValueError):
            dual_task_cost(0.0, 1.0)


class TestLoadCondition:
    def test_busy_sound_has_more_sources(self):
        assert BUSY_SOUND.source_count > QUIET_SOUND.source_count

    def test_busy_sound_invariant_enforced(self):
        with pytest.raises(ConfigError):
            SoundLevel("busy", QUIET_SOUND.source_count, "high", "wide")

    def test_empty_scene_has_no_avatars(self):
        assert EMPTY_VISUAL.avatar_count == 0
        with pytest.raises(ConfigError):
            VisualLoad("empty", 3, 1.0)
        with pytest.raises(ConfigError):
            VisualLoad("busy", 0, 1.0)

    def test_default_condition_single_task(self):
        cond = LoadCondition()
        assert not cond.cognitive
        assert cond.sound is QUIET_SOUND
        assert cond.visual is EMPTY_VISUAL
        assert BUSY_VISUAL.avatar_count >= 1
