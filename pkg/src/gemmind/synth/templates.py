"""Event-locked waveform templates and their scalp weight maps.

Amplitudes, widths, and falloffs are synthesis parameters chosen so that
single trials stay buried in background noise while trial averages are
clean; none of them are claims about human EEG beyond the published
component latencies they reproduce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gemmind.errors import ContractError

TEMPLATE_DURATION = 0.8

# (latency s, amplitude uV, gaussian width s); sign carries polarity.
_COMPONENTS = {
    "p300": ((0.380, 5.0, 0.060),),
    "errp": ((0.287, -4.0, 0.030), (0.367, 3.0, 0.030), (0.486, -3.0, 0.050)),
    "visual_5hz": ((0.120, 1.5, 0.030),),
}

_WEIGHTS = {
    "p300": ({
        "Pz": 1.0, "POz": 0.8, "P3": 0.7, "P4": 0.7, "Cz": 0.5,
        "O1": 0.3, "O2": 0.3, "T5": 0.3, "T6": 0.3, "C3": 0.25, "C4": 0.25,
        "Fz": 0.15,
    }, 0.1),
    # No FCz in this montage; the complex peaks jointly at Fz and Cz.
    "errp": ({
        "Fz": 1.0, "Cz": 1.0, "F3": 0.6, "F4": 0.6, "C3": 0.6, "C4": 0.6,
        "Pz": 0.4, "Fp1": 0.35, "Fp2": 0.35, "F7": 0.3, "F8": 0.3,
        "P3": 0.25, "P4": 0.25, "T3": 0.2, "T4": 0.2, "POz": 0.2,
    }, 0.1),
    "visual_5hz": ({
        "O1": 1.0, "O2": 1.0, "POz": 0.9, "T5": 0.6, "T6": 0.6,
        "Pz": 0.5, "P3": 0.4, "P4": 0.4,
    }, 0.05),
}

BLINK_WEIGHTS = ({
    "Fp1": 1.0, "Fp2": 1.0, "F7": 0.55, "F8": 0.55, "F3": 0.5, "F4": 0.5,
    "Fz": 0.45, "T3": 0.15, "T4": 0.15, "C3": 0.12, "C4": 0.12, "Cz": 0.12,
    "P3": 0.06, "P4": 0.06, "Pz": 0.06, "T5": 0.05, "T6": 0.05,
}, 0.03)


@dataclass(frozen=True)
class ErpTemplate:
    kind: str
    components: tuple[tuple[float, float, float], ...]
    spatial_weights: dict
    default_weight: float

    def waveform(self, sample_rate: float, duration: float = TEMPLATE_DURATION) -> np.ndarray:
        t = np.arange(round(duration * sample_rate)) / sample_rate
        out = np.zeros_like(t)
        for latency, amplitude, width in self.components:
            out += amplitude * np.exp(-0.5 * ((t - latency) / width) ** 2)
        return out

    def weight(self, channel: str) -> float:
        return self.spatial_weights.get(channel, self.default_weight)

    def weights_for(self, channels) -> np.ndarray:
        return np.array([self.weight(ch) for ch in channels])


def make_template(kind: str) -> ErpTemplate:
    """The fixed template table; kinds: p300, errp, visual_5hz."""
    if kind not in _COMPONENTS:
        raise ContractError(f"unknown template kind {kind!r}")
    weights, default = _WEIGHTS[kind]
    return ErpTemplate(kind=kind, components=_COMPONENTS[kind],
                       spatial_weights=dict(weights), default_weight=default)


def blink_waveform(sample_rate: float) -> np.ndarray:
    """Biphasic ocular artifact: 100 uV lobe with a small rebound, ~300 ms."""
    t = np.arange(round(0.35 * sample_rate)) / sample_rate
    return (100.0 * np.exp(-0.5 * ((t - 0.10) / 0.045) ** 2)
            - 30.0 * np.exp(-0.5 * ((t - 0.22) / 0.050) ** 2))
