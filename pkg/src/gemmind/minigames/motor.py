"""Barrel-moving task, alternating motor execution and motor imagery."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from gemmind.errors import ContractError

TRIAL_DURATION = 6.0
WINDOW_LENGTH = 1.0
WINDOW_COUNT = 6
PASS_THRESHOLD = 4


@dataclass(frozen=True)
class MiTrial:
    direction: str                      # "left" heals, "right" damages
    execution_mode: str                 # "execution" or "imagery"
    duration: float = TRIAL_DURATION
    window_length: float = WINDOW_LENGTH
    pass_threshold: int = PASS_THRESHOLD

    @property
    def window_count(self) -> int:
        return round(self.duration / self.window_length)


@dataclass
class MiOutcome:
    passed: bool
    successes: int
    feedback_levels: tuple[float, ...]
    powerups: int


class ModeAlternator:
    """Strict execution/imagery interleave across trials."""

    def __init__(self, start_with: str = "execution"):
        self._next = start_with

    def next(self) -> str:
        mode = self._next
        self._next = "imagery" if mode == "execution" else "execution"
        return mode


def build_mi_trial(rng: random.Random, mode_alternator: ModeAlternator) -> MiTrial:
    direction = "left" if rng.random() < 0.5 else "right"
    return MiTrial(direction=direction, execution_mode=mode_alternator.next())


def evaluate_mi_trial(trial: MiTrial, verdicts) -> MiOutcome:
    """Pass/fail from six 1 s window verdicts.

    Verdicts are booleans (imagery: classifier agreed with the cue) or
    squeeze counts (execution: at least one squeeze per window counts).
    The feedback level after window k is the running success fraction,
    which drives the arrow darkening.
    """
    if len(verdicts) != trial.window_count:
        raise ContractError(
            f"expected {trial.window_count} window verdicts, got {len(verdicts)}")
    flags = [bool(v) if isinstance(v, bool) else v >= 1 for v in verdicts]
    running = 0
    feedback = []
    for k, ok in enumerate(flags, start=1):
        running += ok
        feedback.append(running / k)
    passed = running >= trial.pass_threshold
    return MiOutcome(passed=passed, successes=running,
                     feedback_levels=tuple(feedback), powerups=1 if passed else 0)
