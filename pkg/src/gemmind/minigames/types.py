"""Shared mini-game data types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

POWERUP_IDS = ("attack", "defense", "agility", "vitality")
GEM_IDS = tuple(f"gem{i}" for i in range(7))

# Reward tiers shared by the target-detection tasks (RSVP, n-back):
# (min hit rate, max false alarms, power-ups granted), first row wins.
DETECTION_REWARD_TIERS = (
    (0.8, 1, 2),
    (0.5, 3, 1),
)


@dataclass(frozen=True)
class StimulusItem:
    onset: float
    stimulus_id: str
    is_target: bool
    side: Optional[str] = None


@dataclass(frozen=True)
class StimulusSchedule:
    """A timed stimulus list for one trial; onsets are seconds from trial start."""

    items: tuple[StimulusItem, ...]
    soa: float
    trial_kind: str

    def __post_init__(self):
        onsets = [it.onset for it in self.items]
        if any(b <= a for a, b in zip(onsets, onsets[1:])):
            raise ValueError("stimulus onsets must be strictly increasing")

    @property
    def targets(self) -> tuple[StimulusItem, ...]:
        return tuple(it for it in self.items if it.is_target)

    @property
    def duration(self) -> float:
        return self.items[-1].onset + self.soa if self.items else 0.0


@dataclass
class TaskScore:
    hits: int
    misses: int
    false_alarms: int
    mean_rt: Optional[float]
    powerups: int
    powerup_kinds: tuple[str, ...] = field(default=())


def detection_reward(hits: int, targets: int, false_alarms: int) -> int:
    hit_rate = hits / targets if targets else 1.0
    for min_rate, max_fa, reward in DETECTION_REWARD_TIERS:
        if hit_rate >= min_rate and false_alarms <= max_fa:
            return reward
    return 0


def claim_responses(targets, responses, window_open: float, window_close: float,
                    match=lambda target, response: True):
    """Greedy first-fit assignment of responses to target windows.

    A response claims the earliest unclaimed target whose window
    ``(onset + window_open, onset + window_close]`` contains it and that
    ``match`` accepts. Returns (hit pairs, unclaimed responses).
    """
    claimed = [False] * len(targets)
    hits: list[tuple[int, float]] = []
    extras = []
    for resp in sorted(responses, key=lambda r: r[0] if isinstance(r, tuple) else r):
        t = resp[0] if isinstance(resp, tuple) else resp
        for i, target in enumerate(targets):
            if claimed[i]:
                continue
            if target.onset + window_open < t <= target.onset + window_close and match(target, resp):
                claimed[i] = True
                hits.append((i, t - target.onset))
                break
        else:
            extras.append(resp)
    return hits, extras
