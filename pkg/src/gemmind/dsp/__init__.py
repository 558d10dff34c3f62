"""Analysis chain: zero-phase bandpass, blink ICA, epoching, averaging, PSD, motor LDA."""

from gemmind.dsp.filters import FilterSpec, bandpass_filter
from gemmind.dsp.ica import FastIcaResult, fast_ica, remove_blink_component
from gemmind.dsp.epochs import EpochSet, extract_epochs, grand_average
from gemmind.dsp.spectra import PsdResult, psd_peak_score, welch_psd, welch_psd_signal
from gemmind.dsp.motor_model import (
    MiModel,
    mi_classify,
    mi_train,
    mirror_channels,
    window_features,
)

__all__ = [
    "EpochSet",
    "FastIcaResult",
    "FilterSpec",
    "MiModel",
    "PsdResult",
    "bandpass_filter",
    "extract_epochs",
    "fast_ica",
    "grand_average",
    "mi_classify",
    "mi_train",
    "mirror_channels",
    "psd_peak_score",
    "remove_blink_component",
    "welch_psd",
    "welch_psd_signal",
    "window_features",
]
