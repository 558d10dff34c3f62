"""Balanced randomized task selection via shuffled bags."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence

from gemmind.minigames.motor import ModeAlternator
from gemmind.minigames.ssvep import FLASH_FREQUENCIES

TASKS = ("rsvp", "ssvep", "mi", "nback")
COHERENCE_LEVELS = (1, 2, 3, 4)
NBACK_LEVELS = (1, 2, 3, 4)


class ShuffledBag:
    """Draw without replacement, reshuffling a fresh copy when empty.

    Guarantees exact balance after every full multiple of the bag size.
    """

    def __init__(self, items: Sequence, rng: random.Random):
        self._items = list(items)
        self._rng = rng
        self._bag: list = []

    def next(self):
        if not self._bag:
            self._bag = list(self._items)
            self._rng.shuffle(self._bag)
        return self._bag.pop()


@dataclass(frozen=True)
class TaskSelection:
    task: str
    coherence: Optional[int] = None
    n: Optional[int] = None
    ssvep_target: Optional[int] = None
    mi_mode: Optional[str] = None


class MinigameScheduler:
    """Shuffled-bag selection of the next mini-game and its difficulty knobs.

    The task bag is uniform by default; ``task_weights`` repeats entries to
    skew stimulus-time toward a protocol mix (the in-bag balance guarantee
    then applies to the weighted multiset).
    """

    def __init__(self, rng: random.Random,
                 task_weights: Optional[dict[str, int]] = None):
        weights = task_weights or {t: 1 for t in TASKS}
        unknown = set(weights) - set(TASKS)
        if unknown:
            raise ValueError(f"unknown tasks in weights: {sorted(unknown)}")
        multiset = [t for t in TASKS for _ in range(weights.get(t, 0))]
        if not multiset:
            raise ValueError("task weights select no tasks")
        self._task_bag = ShuffledBag(multiset, rng)
        self._coherence_bag = ShuffledBag(COHERENCE_LEVELS, rng)
        self._nback_bag = ShuffledBag(NBACK_LEVELS, rng)
        self._ssvep_bag = ShuffledBag(FLASH_FREQUENCIES, rng)
        self._mi_alternator = ModeAlternator()
        self.task_counts = {t: 0 for t in TASKS}
        self.coherence_counts = {c: 0 for c in COHERENCE_LEVELS}

    def next_minigame(self) -> TaskSelection:
        task = self._task_bag.next()
        self.task_counts[task] += 1
        if task == "rsvp":
            coherence = self._coherence_bag.next()
            self.coherence_counts[coherence] += 1
            return TaskSelection(task, coherence=coherence)
        if task == "ssvep":
            return TaskSelection(task, ssvep_target=self._ssvep_bag.next())
        if task == "nback":
            return TaskSelection(task, n=self._nback_bag.next())
        return TaskSelection(task, mi_mode=self._mi_alternator.next())


def schedule_next_minigame(scheduler: MinigameScheduler) -> TaskSelection:
    """Pick the next task; the scheduler instance carries all balance state."""
    return scheduler.next_minigame()
