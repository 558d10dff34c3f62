"""Synthetic multichannel EEG with planted task signatures, plus the simulated player."""

from gemmind.synth.templates import ErpTemplate, make_template
from gemmind.synth.generator import (
    DEFAULT_MONTAGE,
    MultichannelRecording,
    SynthConfig,
    synthesize_recording,
)
from gemmind.synth.player import PlannedTrial, SimulatedPlayer, simulate_player_responses

__all__ = [
    "DEFAULT_MONTAGE",
    "ErpTemplate",
    "MultichannelRecording",
    "PlannedTrial",
    "SimulatedPlayer",
    "SynthConfig",
    "make_template",
    "simulate_player_responses",
    "synthesize_recording",
]
