"""Stimulus generation and scoring for all mini-game paradigms."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gemmind.errors import ContractError, GenerationError
from gemmind.minigames.motor import ModeAlternator, build_mi_trial, evaluate_mi_trial, MiTrial
from gemmind.minigames.nback import build_nback_sequence, nback_schedule, score_nback
from gemmind.minigames.rsvp import RsvpConfig, build_rsvp_sequence, score_rsvp
from gemmind.minigames.scheduler import MinigameScheduler, ShuffledBag
from gemmind.minigames.ssvep import (
    FLASH_FREQUENCIES,
    actual_frequency,
    build_ssvep_trial,
    score_ssvep,
)


class TestRsvpGeneration:
    def test_default_sequence_statistics(self):
        for seed in range(1000):
            schedule = build_rsvp_sequence(RsvpConfig(), random.Random(seed))
            target_idx = [i for i, it in enumerate(schedule.items) if it.is_target]
            assert len(target_idx) == 6
            assert len(schedule.items) - len(target_idx) == 42
            assert all(b - a >= 4 for a, b in zip(target_idx, target_idx[1:]))
            kinds = [it.stimulus_id for it in schedule.items if it.is_target]
            assert abs(kinds.count("attack") - kinds.count("vitality")) <= 1

    def test_onsets_are_soa_grid(self):
        schedule = build_rsvp_sequence(RsvpConfig(), random.Random(0))
        for i, item in enumerate(schedule.items):
            assert item.onset == pytest.approx(i * 0.2)

    def test_zero_ratio_yields_no_targets(self):
        schedule = build_rsvp_sequence(RsvpConfig(target_ratio=0.0), random.Random(1))
        assert all(not it.is_target for it in schedule.items)

    def test_infeasible_density_raises(self):
        with pytest.raises(GenerationError):
            build_rsvp_sequence(RsvpConfig(length=8, target_ratio=0.5), random.Random(0))

    def test_too_short_raises(self):
        with pytest.raises(GenerationError):
            build_rsvp_sequence(RsvpConfig(length=7), random.Random(0))


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 10**9))
def test_rsvp_tti_property(seed):
    schedule = build_rsvp_sequence(RsvpConfig(), random.Random(seed))
    onsets = [it.onset for it in schedule.items if it.is_target]
    assert all(b - a >= 0.8 - 1e-9 for a, b in zip(onsets, onsets[1:]))


class TestRsvpScoring:
    def _schedule(self, seed=0):
        return build_rsvp_sequence(RsvpConfig(), random.Random(seed))

    def test_perfect_run_earns_two_powerups(self):
        schedule = self._schedule()
        responses = [(t.onset + 0.5, t.side) for t in schedule.targets]
        score = score_rsvp(schedule, responses)
        assert (score.hits, score.false_alarms, score.powerups) == (6, 0, 2)
        assert score.mean_rt == pytest.approx(0.5)

    def test_wrong_side_is_false_alarm_and_miss(self):
        schedule = self._schedule()
        target = schedule.targets[0]
        wrong = "right" if target.side == "left" else "left"
        score = score_rsvp(schedule, [(target.onset + 0.5, wrong)])
        assert score.hits == 0
        assert score.false_alarms == 1
        assert score.misses == 6

    def test_response_before_window_is_false_alarm(self):
        schedule = self._schedule()
        target = schedule.targets[-1]
        score = score_rsvp(schedule, [(target.onset + 0.10, target.side)])
        assert score.hits == 0
        assert score.false_alarms == 1

    def test_each_target_claims_one_response(self):
        schedule = self._schedule()
        target = schedule.targets[0]
        score = score_rsvp(schedule, [(target.onset + 0.3, target.side),
                                      (target.onset + 0.4, target.side)])
        assert score.hits == 1
        assert score.false_alarms == 1

    def test_scoring_is_pure(self):
        schedule = self._schedule()
        responses = [(t.onset + 0.4, t.side) for t in schedule.targets[:3]]
        assert score_rsvp(schedule, responses) == score_rsvp(schedule, responses)


class TestSsvep:
    def test_divisible_frequency_toggles_every_two_frames(self):
        toggles = [t for b, t in build_ssvep_trial(random.Random(0), 60.0, 13).toggle_times]
        # 15 Hz is the divisible case: synthesize directly.
        from gemmind.minigames.ssvep import _box_toggles
        times = _box_toggles(15, 60.0, 4.0)
        frames = [round(t * 60) for t in times]
        assert all(b - a == 2 for a, b in zip(frames, frames[1:]))
        assert toggles  # the built trial recorded toggles too

    def test_seven_hz_alternates_four_five_frames(self):
        from gemmind.minigames.ssvep import _box_toggles
        times = _box_toggles(7, 60.0, 4.0)
        frames = [round(t * 60) for t in times]
        gaps = [b - a for a, b in zip(frames, frames[1:])]
        assert set(gaps) == {4, 5}
        assert all(a != b for a, b in zip(gaps, gaps[1:]) if a == 5 and b == 5)
        mean_period = (times[-1] - times[0]) / (len(times) - 1)
        assert abs(mean_period - 1 / 14) < 1 / 60

    def test_toggle_oracle_fraction_arithmetic(self):
        # Independent oracle: exact rational phase accumulator.
        from gemmind.minigames.ssvep import _box_toggles
        for f in FLASH_FREQUENCIES:
            times = _box_toggles(f, 60.0, 4.0)
            expected = []
            prev = Fraction(0)
            for k in range(1, 240):
                phase = Fraction(2 * f * k, 60)
                if (phase.__floor__() % 2 == 0) != (prev.__floor__() % 2 == 0):
                    expected.append(k / 60.0)
                prev = phase
            assert times == expected

    def test_actual_frequency_lands_near_nominal(self):
        for f in FLASH_FREQUENCIES:
            trial = build_ssvep_trial(random.Random(f), 60.0, f)
            assert abs(actual_frequency(trial) - f) < 0.2

    def test_shuffled_bag_covers_all_frequencies(self):
        rng = random.Random(5)
        bag = ShuffledBag(FLASH_FREQUENCIES, rng)
        seen = {build_ssvep_trial(rng, 60.0, bag.next()).target_frequency for _ in range(4)}
        assert seen == set(FLASH_FREQUENCIES)

    def test_frequencies_are_a_permutation(self):
        trial = build_ssvep_trial(random.Random(2), 60.0, 9)
        assert sorted(trial.box_frequencies) == sorted(FLASH_FREQUENCIES)
        assert trial.target_frequency == 9

    def test_fast_click_earns_two(self):
        trial = build_ssvep_trial(random.Random(1), 60.0, 11)
        score = score_ssvep(trial, (trial.flash_duration + 0.3, trial.target_box))
        assert score.powerups == 2
        assert score.mean_rt == pytest.approx(0.3)

    def test_early_click_earns_nothing(self):
        trial = build_ssvep_trial(random.Random(1), 60.0, 11)
        score = score_ssvep(trial, (trial.flash_duration - 0.1, trial.target_box))
        assert score.powerups == 0
        assert score.false_alarms == 1

    def test_wrong_box_earns_nothing(self):
        trial = build_ssvep_trial(random.Random(1), 60.0, 11)
        wrong = (trial.target_box + 1) % 4
        score = score_ssvep(trial, (trial.flash_duration + 0.3, wrong))
        assert score.powerups == 0


class TestMotor:
    def test_modes_alternate(self):
        alt = ModeAlternator()
        t1 = build_mi_trial(random.Random(0), alt)
        t2 = build_mi_trial(random.Random(1), alt)
        assert {t1.execution_mode, t2.execution_mode} == {"execution", "imagery"}

    def test_direction_roughly_balanced(self):
        alt = ModeAlternator()
        lefts = sum(build_mi_trial(random.Random(s), alt).direction == "left"
                    for s in range(1000))
        assert 450 <= lefts <= 550

    def test_window_count_is_six(self):
        trial = build_mi_trial(random.Random(0), ModeAlternator())
        assert trial.window_count == 6

    def test_four_of_six_passes(self):
        trial = MiTrial("left", "imagery")
        outcome = evaluate_mi_trial(trial, [True, True, True, True, False, False])
        assert outcome.passed
        assert outcome.feedback_levels == (1.0, 1.0, 1.0, 1.0, 0.8, 4 / 6)

    def test_all_false_fails(self):
        outcome = evaluate_mi_trial(MiTrial("left", "imagery"), [False] * 6)
        assert not outcome.passed
        assert outcome.powerups == 0

    def test_execution_squeeze_counts(self):
        outcome = evaluate_mi_trial(MiTrial("right", "execution"), [1, 2, 1, 3, 1, 1])
        assert outcome.passed

    def test_wrong_verdict_count_raises(self):
        with pytest.raises(ContractError):
            evaluate_mi_trial(MiTrial("left", "imagery"), [True] * 5)


def scan_lag_repeats(items, n):
    return [i for i in range(n, len(items)) if items[i] == items[i - n]]


class TestNBack:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_exactly_five_planted_targets(self, n):
        for seed in range(1000):
            trial = build_nback_sequence(n, random.Random(seed))
            repeats = scan_lag_repeats(trial.items, n)
            assert repeats == sorted(trial.target_indices)
            assert len(repeats) == 5
            assert all(i >= n for i in trial.target_indices)

    def test_lag_one_no_unplanted_doubles(self):
        trial = build_nback_sequence(1, random.Random(7))
        doubles = scan_lag_repeats(trial.items, 1)
        assert doubles == sorted(trial.target_indices)

    def test_schedule_soa(self):
        trial = build_nback_sequence(2, random.Random(0))
        schedule = nback_schedule(trial)
        assert schedule.soa == pytest.approx(2.3)
        assert len(schedule.targets) == 5

    def test_invalid_n_raises(self):
        with pytest.raises(ContractError):
            build_nback_sequence(5, random.Random(0))

    def test_clicks_after_targets_are_hits(self):
        trial = build_nback_sequence(2, random.Random(3))
        schedule = nback_schedule(trial)
        clicks = [t.onset + 0.6 for t in schedule.targets]
        score = score_nback(trial, clicks)
        assert (score.hits, score.false_alarms) == (5, 0)
        assert score.powerups == 2

    def test_nontarget_click_is_false_alarm(self):
        trial = build_nback_sequence(2, random.Random(3))
        schedule = nback_schedule(trial)
        nontarget = next(it for it in schedule.items if not it.is_target
                         and all(abs(it.onset - t.onset) > 2.0 for t in schedule.targets))
        score = score_nback(trial, [nontarget.onset + 0.2])
        assert score.false_alarms == 1

    def test_silence_misses_everything(self):
        trial = build_nback_sequence(3, random.Random(9))
        score = score_nback(trial, [])
        assert (score.hits, score.misses) == (0, 5)


class TestScheduler:
    def test_eight_selections_cover_each_task_twice(self):
        sched = MinigameScheduler(random.Random(0))
        for _ in range(8):
            sched.next_minigame()
        assert all(c == 2 for c in sched.task_counts.values())

    def test_four_rsvp_selections_cover_all_coherences(self):
        sched = MinigameScheduler(random.Random(1))
        seen = []
        while len(seen) < 4:
            sel = sched.next_minigame()
            if sel.task == "rsvp":
                seen.append(sel.coherence)
        assert sorted(seen) == [1, 2, 3, 4]

    def test_balance_holds_across_seeds(self):
        for seed in range(100):
            sched = MinigameScheduler(random.Random(seed))
            for _ in range(4 * 3):
                sched.next_minigame()
            assert all(c == 3 for c in sched.task_counts.values())

    def test_nback_levels_balanced(self):
        sched = MinigameScheduler(random.Random(2))
        ns = []
        while len(ns) < 8:
            sel = sched.next_minigame()
            if sel.task == "nback":
                ns.append(sel.n)
        assert sorted(ns) == [1, 1, 2, 2, 3, 3, 4, 4]

    def test_weighted_bag_respects_weights(self):
        sched = MinigameScheduler(random.Random(3), task_weights={"rsvp": 2, "nback": 1})
        for _ in range(9):
            sched.next_minigame()
        assert sched.task_counts["rsvp"] == 6
        assert sched.task_counts["nback"] == 3
        assert sched.task_counts["ssvep"] == 0
