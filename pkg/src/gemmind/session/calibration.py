"""Synthetic motor-imagery calibration data and model training.

The live study would bootstrap its classifier from pooled human data;
here a calibration recording with planted ERD fills that role. Both the
simulator and the analyzer derive the same calibration from the session's
master seed, so their models agree exactly.
"""

from __future__ import annotations

from gemmind.dsp.epochs import EpochSet, extract_epochs
from gemmind.dsp.filters import bandpass_filter
from gemmind.dsp.motor_model import MiModel, mi_train
from gemmind.rng import substream_seed
from gemmind.synth.generator import SynthConfig, synthesize_recording
from gemmind.timeline.events import MarkerEvent

CALIBRATION_EPOCHS = 200
CALIBRATION_GAP_S = 1.5


def calibration_epochs(synth: SynthConfig, seed: int,
                       n_epochs: int = CALIBRATION_EPOCHS,
                       gap_s: float = CALIBRATION_GAP_S) -> EpochSet:
    """Planted-ERD windows with alternating left/right labels."""
    events = []
    t = 3.0
    for i in range(n_epochs):
        events.append(MarkerEvent(round(t * 1e9), "game", "mi_window",
                                  {"side": "left" if i % 2 == 0 else "right",
                                   "duration_s": 1.0}))
        t += gap_s
    doc = synth.to_dict()
    doc["seed"] = substream_seed(seed, "mi_calibration")
    doc["include_blinks"] = False
    cal_synth = SynthConfig.from_dict(doc)
    recording = bandpass_filter(synthesize_recording(events, cal_synth,
                                                     duration_s=t + 2.0))
    return extract_epochs(recording, events, window=(0.0, 1.0), baseline=None,
                          label_fn=lambda e: e.payload["side"])


def train_calibrated_model(synth: SynthConfig, seed: int) -> MiModel:
    return mi_train(calibration_epochs(synth, seed))
