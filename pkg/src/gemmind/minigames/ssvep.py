"""Flashing-box task: four boxes flicker at 7/9/11/13 Hz, one is the target.

Toggle schedules are frame-quantized exactly the way a 60 Hz display
would show them: a box is visible on frame k iff floor(2*f*k/fps) is
even. With integer frequencies the schedule is computed in exact integer
arithmetic, so off-frequency presentation comes only from the frame grid,
never from floating-point drift.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from gemmind.errors import ContractError
from gemmind.minigames.types import TaskScore

FLASH_FREQUENCIES = (7, 9, 11, 13)
FAST_REWARD_RT = 0.4
SLOW_REWARD_RT = 0.7


@dataclass(frozen=True)
class SsvepTrial:
    box_frequencies: tuple[int, int, int, int]
    target_box: int
    flash_duration: float = 4.0
    frame_rate: float = 60.0
    toggle_times: tuple[tuple[int, float], ...] = ()

    @property
    def target_frequency(self) -> int:
        return self.box_frequencies[self.target_box]


def _box_toggles(freq: float, frame_rate: float, duration: float) -> list[float]:
    f = Fraction(freq).limit_denominator(10**6)
    fps = Fraction(frame_rate).limit_denominator(10**6)
    n_frames = int(duration * frame_rate)
    toggles = []
    prev_visible = True  # floor(0) is even
    for k in range(1, n_frames):
        visible = ((2 * f * k) // fps) % 2 == 0
        if visible != prev_visible:
            toggles.append(k / frame_rate)
        prev_visible = visible
    return toggles


def build_ssvep_trial(rng: random.Random, frame_rate: float = 60.0,
                      target_frequency: int | None = None,
                      flash_duration: float = 4.0) -> SsvepTrial:
    """Assign the four frequencies to boxes and precompute every toggle.

    ``target_frequency`` normally comes from a shuffled bag so each
    frequency serves as target equally often; without one the target is
    drawn uniformly.
    """
    if frame_rate < 2 * max(FLASH_FREQUENCIES):
        raise ContractError(f"frame rate {frame_rate} cannot render {max(FLASH_FREQUENCIES)} Hz")
    freqs = list(FLASH_FREQUENCIES)
    rng.shuffle(freqs)
    if target_frequency is None:
        target_box = rng.randrange(4)
    else:
        target_box = freqs.index(target_frequency)
    toggles: list[tuple[int, float]] = []
    for box, f in enumerate(freqs):
        toggles.extend((box, t) for t in _box_toggles(f, frame_rate, flash_duration))
    toggles.sort(key=lambda bt: (bt[1], bt[0]))
    return SsvepTrial(tuple(freqs), target_box, flash_duration, frame_rate, tuple(toggles))


def actual_frequency(trial: SsvepTrial, box: int | None = None) -> float:
    """Flash frequency realized on the frame grid, from the toggle record."""
    if box is None:
        box = trial.target_box
    times = [t for b, t in trial.toggle_times if b == box]
    if len(times) < 2:
        raise ContractError(f"box {box} has too few toggles to estimate a frequency")
    return (len(times) - 1) / (2.0 * (times[-1] - times[0]))


def score_ssvep(trial: SsvepTrial, click: tuple[float, int]) -> TaskScore:
    """Reward reaction time to flash end; early or wrong-box clicks earn nothing."""
    t, box = click
    flash_end = trial.flash_duration
    if t < flash_end or box != trial.target_box:
        return TaskScore(hits=0, misses=1, false_alarms=1, mean_rt=None, powerups=0)
    rt = t - flash_end
    if rt < FAST_REWARD_RT:
        reward = 2
    elif rt < SLOW_REWARD_RT:
        reward = 1
    else:
        reward = 0
    return TaskScore(hits=1, misses=0, false_alarms=0, mean_rt=rt, powerups=reward)
