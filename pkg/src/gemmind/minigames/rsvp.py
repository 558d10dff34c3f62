"""Rapid serial visual presentation: rare power-up targets in a 5 Hz gem stream."""

from __future__ import annotations

import random
from dataclasses import dataclass

from gemmind.errors import ConfigError, GenerationError
from gemmind.minigames.types import (
    GEM_IDS,
    StimulusItem,
    StimulusSchedule,
    TaskScore,
    claim_responses,
    detection_reward,
)

RESPONSE_WINDOW_OPEN = 0.15
RESPONSE_WINDOW_CLOSE = 1.0


@dataclass(frozen=True)
class RsvpConfig:
    rate_hz: float = 5.0
    target_ratio: float = 0.13
    tti_min: float = 0.8
    length: int = 48
    coherence_level: int = 1
    # Two power-up kinds with their response sides, e.g. (("attack", "left"), ...)
    target_kinds: tuple[tuple[str, str], ...] = (("attack", "left"), ("vitality", "right"))

    def __post_init__(self):
        if len(self.target_kinds) != 2 or self.target_kinds[0][0] == self.target_kinds[1][0]:
            raise ConfigError("rsvp needs exactly two distinct target kinds")
        if not 1 <= self.coherence_level <= 4:
            raise ConfigError(f"coherence_level must be in [1, 4], got {self.coherence_level}")

    @property
    def soa(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def min_gap(self) -> int:
        """Minimum index distance between targets implied by the TTI floor."""
        return round(self.tti_min * self.rate_hz)


def build_rsvp_sequence(config: RsvpConfig, rng: random.Random) -> StimulusSchedule:
    """A shuffled target/non-target stream honouring the TTI floor.

    Target positions are drawn uniformly over all placements whose
    consecutive gaps are >= min_gap (the gap-removal bijection), so no
    placement is favoured. The target count splits evenly between the two
    target kinds.
    """
    if config.length < 8:
        raise GenerationError(f"sequence too short: {config.length}")
    n_targets = round(config.target_ratio * config.length)
    gap = config.min_gap
    if n_targets > 0 and (n_targets - 1) * gap + 1 > config.length:
        raise GenerationError(
            f"{n_targets} targets cannot honour a gap of {gap} in {config.length} items")

    positions: set[int] = set()
    if n_targets > 0:
        compact = sorted(rng.sample(range(config.length - (n_targets - 1) * (gap - 1)),
                                    n_targets))
        positions = {c + i * (gap - 1) for i, c in enumerate(compact)}

    kinds = [config.target_kinds[i % 2] for i in range(n_targets)]
    rng.shuffle(kinds)
    kind_iter = iter(kinds)

    items = []
    for i in range(config.length):
        onset = i * config.soa
        if i in positions:
            kind, side = next(kind_iter)
            items.append(StimulusItem(onset, kind, True, side))
        else:
            items.append(StimulusItem(onset, GEM_IDS[rng.randrange(len(GEM_IDS))], False))
    return StimulusSchedule(tuple(items), config.soa, "rsvp")


def score_rsvp(schedule: StimulusSchedule, responses: list[tuple[float, str]]) -> TaskScore:
    """Score grasp-switch responses against the target stream.

    A response hits if it lands in (onset+0.15 s, onset+1.0 s] of an
    unclaimed target on the matching side; everything else is a false
    alarm. Reward: 2 power-ups for >=80% hits with <=1 false alarm, 1 for
    >=50% with <=3.
    """
    targets = schedule.targets
    hits, extras = claim_responses(
        targets, responses, RESPONSE_WINDOW_OPEN, RESPONSE_WINDOW_CLOSE,
        match=lambda target, resp: resp[1] == target.side)
    rts = [rt for _, rt in hits]
    n_hits = len(hits)
    n_fa = len(extras)
    return TaskScore(
        hits=n_hits,
        misses=len(targets) - n_hits,
        false_alarms=n_fa,
        mean_rt=sum(rts) / len(rts) if rts else None,
        powerups=detection_reward(n_hits, len(targets), n_fa),
    )
