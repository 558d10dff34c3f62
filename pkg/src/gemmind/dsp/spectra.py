"""Welch spectral estimation and peak scoring.

Parameters are pinned to 2 s Hann windows with 50% overlap: 0.5 Hz
resolution, enough to separate the 7/9/11/13 Hz flicker set. Density
scaling means a unit sinusoid at a bin center integrates to 0.5 uV^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import welch

from gemmind.errors import AnalysisError
from gemmind.synth.generator import MultichannelRecording

WINDOW_S = 2.0
OVERLAP = 0.5
TAPER = "hann"
PEAK_PROMINENCE_DB = 6.0
PEAK_NEIGHBORHOOD_HZ = 2.0
PEAK_EXCLUSION_HZ = 0.5


@dataclass
class PsdResult:
    frequencies: np.ndarray
    power: np.ndarray                  # uV^2/Hz
    resolution: float
    window_s: float = WINDOW_S
    overlap: float = OVERLAP
    taper: str = TAPER

    def nearest_bin(self, freq: float) -> int:
        return int(np.argmin(np.abs(self.frequencies - freq)))


def welch_psd_signal(x: np.ndarray, sample_rate: float,
                     window_s: float = WINDOW_S) -> PsdResult:
    x = np.asarray(x, dtype=np.float64)
    nperseg = round(window_s * sample_rate)
    if x.shape[-1] < nperseg:
        raise AnalysisError(
            f"need at least {window_s} s of data, got {x.shape[-1] / sample_rate:.2f} s")
    freqs, power = welch(x, fs=sample_rate, window=TAPER, nperseg=nperseg,
                         noverlap=round(nperseg * OVERLAP), scaling="density",
                         detrend=False)
    return PsdResult(frequencies=freqs, power=power,
                     resolution=float(freqs[1] - freqs[0]), window_s=window_s)


def welch_psd(recording: MultichannelRecording, channel: str,
              window_s: float = WINDOW_S) -> PsdResult:
    return welch_psd_signal(recording.channel(channel), recording.sample_rate, window_s)


def psd_peak_score(psd: PsdResult, target_freq: float,
                   prominence_db: float = PEAK_PROMINENCE_DB) -> tuple[bool, float]:
    """Peak test: target bin vs the median of its +-2 Hz surroundings.

    The exclusion zone of +-0.5 Hz keeps the peak's own skirt out of the
    reference; the median keeps one other narrowband neighbour (for
    example occipital alpha) from masking or faking a peak.
    """
    if target_freq < psd.frequencies[0] or target_freq > psd.frequencies[-1]:
        raise AnalysisError(f"target {target_freq} Hz outside the PSD grid")
    f = psd.frequencies
    target_power = psd.power[psd.nearest_bin(target_freq)]
    annulus = (np.abs(f - target_freq) <= PEAK_NEIGHBORHOOD_HZ) & \
              (np.abs(f - target_freq) > PEAK_EXCLUSION_HZ)
    if not annulus.any():
        raise AnalysisError("PSD grid too coarse for the peak neighborhood")
    reference = float(np.median(psd.power[annulus]))
    if reference <= 0:
        return target_power > 0, np.inf if target_power > 0 else 0.0
    prominence = 10.0 * np.log10(max(target_power, 1e-300) / reference)
    return bool(prominence >= prominence_db), float(prominence)
