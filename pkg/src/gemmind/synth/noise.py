"""Seed-locked background noise.

White noise comes from counter-based Philox streams keyed on
(seed, channel), so a channel's noise depends only on the seed and the
requested length, never on what else is being synthesized. Pink shaping
uses a classic 3-pole/3-zero economy filter, adequate for a 1/f fit over
the 1-40 Hz analysis band.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from gemmind.rng import substream_seed

PINK_B = (0.049922035, -0.095993537, 0.050612699, -0.004408786)
PINK_A = (1.0, -2.494956002, 2.017265875, -0.522189400)


def channel_generator(seed: int, *names) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=substream_seed(seed, *names)))


def white_noise(seed: int, channel: str, n: int) -> np.ndarray:
    return channel_generator(seed, "noise", channel).standard_normal(n)


def pink_noise(seed: int, channel: str, n: int, sigma: float) -> np.ndarray:
    """1/f-shaped noise rescaled to exactly ``sigma`` RMS."""
    if sigma <= 0 or n == 0:
        return np.zeros(n)
    shaped = lfilter(PINK_B, PINK_A, white_noise(seed, channel, n))
    rms = shaped.std()
    if rms == 0:
        return shaped
    return shaped * (sigma / rms)
