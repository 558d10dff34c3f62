"""n-back working-memory task over the four power-up images."""

from __future__ import annotations

import random
from dataclasses import dataclass

from gemmind.errors import ContractError
from gemmind.minigames.types import (
    POWERUP_IDS,
    StimulusItem,
    StimulusSchedule,
    TaskScore,
    claim_responses,
    detection_reward,
)

SEQUENCE_LENGTH = 22
TARGET_COUNT = 5
PRESENTATION = 0.8
ISI = 1.5
RESPONSE_WINDOW = 1.8  # presentation plus most of the ISI


@dataclass(frozen=True)
class NBackTrial:
    n: int
    items: tuple[str, ...]
    target_indices: tuple[int, ...]
    presentation: float = PRESENTATION
    isi: float = ISI

    @property
    def soa(self) -> float:
        return self.presentation + self.isi


def build_nback_sequence(n: int, rng: random.Random,
                         length: int = SEQUENCE_LENGTH,
                         n_targets: int = TARGET_COUNT) -> NBackTrial:
    """Plant exactly ``n_targets`` lag-n repeats and forbid accidental ones.

    Positions are drawn uniformly from [n, length); non-target positions
    explicitly avoid the item n back, so an exhaustive lag scan finds the
    planted repeats and nothing else. Lures at other lags are left alone.
    """
    if not 1 <= n <= 4:
        raise ContractError(f"n must be in [1, 4], got {n}")
    if n_targets > length - n:
        raise ContractError(f"cannot place {n_targets} targets in {length - n} slots")
    targets = sorted(rng.sample(range(n, length), n_targets))
    target_set = set(targets)
    items: list[str] = []
    for i in range(length):
        if i in target_set:
            items.append(items[i - n])
        elif i >= n:
            forbidden = items[i - n]
            choices = [p for p in POWERUP_IDS if p != forbidden]
            items.append(choices[rng.randrange(len(choices))])
        else:
            items.append(POWERUP_IDS[rng.randrange(len(POWERUP_IDS))])
    return NBackTrial(n=n, items=tuple(items), target_indices=tuple(targets))


def nback_schedule(trial: NBackTrial) -> StimulusSchedule:
    items = tuple(
        StimulusItem(i * trial.soa, stimulus_id, i in set(trial.target_indices))
        for i, stimulus_id in enumerate(trial.items)
    )
    return StimulusSchedule(items, trial.soa, "nback")


def score_nback(trial: NBackTrial, clicks: list[float]) -> TaskScore:
    """Clicks within (onset, onset+1.8 s] of an unclaimed target are hits."""
    schedule = nback_schedule(trial)
    hits, extras = claim_responses(schedule.targets, [(t,) for t in clicks],
                                   0.0, RESPONSE_WINDOW)
    rts = [rt for _, rt in hits]
    n_hits = len(hits)
    n_fa = len(extras)
    return TaskScore(
        hits=n_hits,
        misses=len(schedule.targets) - n_hits,
        false_alarms=n_fa,
        mean_rt=sum(rts) / len(rts) if rts else None,
        powerups=detection_reward(n_hits, len(schedule.targets), n_fa),
    )
