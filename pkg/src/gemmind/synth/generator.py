"""Assemble synthetic EEG time-locked to a session's marker stream.

The output is a pure function of (events, config, duration): background
noise, occipital alpha, and sensorimotor mu are seed-locked and event
independent, and every planted signature adds linearly on top. That
yields exact superposition, which the validation suite leans on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from gemmind.errors import ConfigError
from gemmind.synth.noise import channel_generator, pink_noise
from gemmind.synth.templates import BLINK_WEIGHTS, blink_waveform, make_template
from gemmind.timeline.events import MarkerEvent

logger = logging.getLogger(__name__)

DEFAULT_MONTAGE = (
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz",
    "C4", "T4", "T5", "P3", "Pz", "P4", "T6", "O1", "O2", "POz",
)

ALPHA_CHANNELS = ("O1", "O2", "POz")
MU_CHANNELS = ("C3", "C4")
SSVEP_WEIGHTS = {"O1": 1.0, "O2": 1.0, "POz": 0.8}
SSVEP_FUNDAMENTAL_AMP = 2.0
SSVEP_HARMONIC_AMP = 0.8


@dataclass(frozen=True)
class SynthConfig:
    sample_rate: float = 256.0
    channels: tuple = DEFAULT_MONTAGE
    noise_sigma: float = 10.0
    alpha_amp: float = 5.0
    alpha_freq: float = 10.0
    # Baseline mu level is an RMS: the planted sinusoid has amplitude
    # mu_rms * sqrt(2), so suppression to 0.5x acts on both equally.
    mu_rms: float = 4.0
    mu_freq: float = 10.0
    mu_suppression: float = 0.5
    blink_rate_per_min: float = 12.0
    include_blinks: bool = True
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.sample_rate < 80.0:
            problems.append(
                f"sample_rate must be >= 80 Hz to cover planted components, "
                f"got {self.sample_rate}")
        if len(set(self.channels)) != len(self.channels):
            problems.append("channel labels must be unique")
        if self.noise_sigma < 0 or self.alpha_amp < 0 or self.mu_rms < 0:
            problems.append("amplitudes must be non-negative")
        if problems:
            raise ConfigError(problems)

    def to_dict(self) -> dict:
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["channels"] = list(self.channels)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError([f"unknown synth config field: {k}" for k in sorted(unknown)])
        doc = dict(doc)
        if "channels" in doc:
            doc["channels"] = tuple(doc["channels"])
        cfg = cls(**doc)
        cfg.validate()
        return cfg


@dataclass
class MultichannelRecording:
    data: np.ndarray                   # frames x channels, microvolts
    start_ns: int
    sample_rate: float
    channel_labels: tuple
    skipped_events: int = 0

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def duration(self) -> float:
        return self.n_frames / self.sample_rate

    def channel_index(self, label: str) -> int:
        return self.channel_labels.index(label)

    def channel(self, label: str) -> np.ndarray:
        return self.data[:, self.channel_index(label)]

    def copy_with(self, data: np.ndarray) -> "MultichannelRecording":
        return MultichannelRecording(data, self.start_ns, self.sample_rate,
                                     self.channel_labels, self.skipped_events)


def _add_template(data: np.ndarray, i0: int, waveform: np.ndarray,
                  weights: np.ndarray) -> None:
    n = data.shape[0]
    w0, w1 = 0, len(waveform)
    if i0 < 0:
        w0 = -i0
    if i0 + w1 > n:
        w1 = n - i0
    if w1 <= w0:
        return
    data[i0 + w0:i0 + w1] += np.outer(waveform[w0:w1], weights)


def _toggle_frequency(toggles: Sequence[float]) -> float:
    if len(toggles) < 2:
        raise ConfigError("ssvep event carries fewer than two toggles")
    return (len(toggles) - 1) / (2.0 * (toggles[-1] - toggles[0]))


def synthesize_recording(events: Iterable[MarkerEvent], config: SynthConfig,
                         duration_s: float, start_ns: int = 0) -> MultichannelRecording:
    """Render the full recording for one session's event stream.

    Planted signatures per event kind: target onsets get a parietal P300,
    every RSVP/n-back onset gets a small occipital visual bump (the 5 Hz
    comb), SSVEP trials get fundamental+harmonic sinusoids at the
    frequency their frame-quantized toggles actually realized, caught
    injections get the fronto-central error complex, and motor-imagery
    windows halve contralateral mu. Blinks arrive as a seed-locked
    Poisson process independent of the events.
    """
    config.validate()
    rate = config.sample_rate
    n = round(duration_s * rate)
    channels = config.channels
    t = np.arange(n) / rate
    data = np.zeros((n, len(channels)))

    for ci, ch in enumerate(channels):
        if config.noise_sigma > 0:
            data[:, ci] += pink_noise(config.seed, ch, n, config.noise_sigma)

    for ch in ALPHA_CHANNELS:
        if ch in channels and config.alpha_amp > 0:
            phase = channel_generator(config.seed, "alpha", ch).uniform(0, 2 * np.pi)
            data[:, channels.index(ch)] += config.alpha_amp * np.sin(
                2 * np.pi * config.alpha_freq * t + phase)

    events = sorted(events, key=lambda e: e.t_ns)
    end_ns = start_ns + int(duration_s * 1e9)
    skipped = 0

    caught_ts = {
        e.payload.get("injection_t_ns")
        for e in events
        if e.kind == "cheat_report" and e.payload.get("valid")
        and e.payload.get("injection_t_ns") is not None
    }

    # Mu with per-window suppression is multiplicative, so build the
    # envelope first, then the oscillation.
    mu_env = {ch: np.ones(n) for ch in MU_CHANNELS if ch in channels}
    for e in events:
        if e.kind != "mi_window":
            continue
        if not (start_ns <= e.t_ns < end_ns):
            skipped += 1
            continue
        side = e.payload.get("side", "right")
        contralateral = "C3" if side == "right" else "C4"
        if contralateral not in mu_env:
            continue
        i0 = round((e.t_ns - start_ns) / 1e9 * rate)
        i1 = min(n, i0 + round(float(e.payload.get("duration_s", 1.0)) * rate))
        mu_env[contralateral][max(0, i0):i1] = config.mu_suppression
    for ch, env in mu_env.items():
        if config.mu_rms > 0:
            phase = channel_generator(config.seed, "mu", ch).uniform(0, 2 * np.pi)
            data[:, channels.index(ch)] += config.mu_rms * np.sqrt(2) * env * np.sin(
                2 * np.pi * config.mu_freq * t + phase)

    p300 = make_template("p300")
    visual = make_template("visual_5hz")
    errp = make_template("errp")
    p300_wave = p300.waveform(rate)
    visual_wave = visual.waveform(rate)
    errp_wave = errp.waveform(rate)
    p300_w = p300.weights_for(channels)
    visual_w = visual.weights_for(channels)
    errp_w = errp.weights_for(channels)
    ssvep_w = np.array([SSVEP_WEIGHTS.get(ch, 0.0) for ch in channels])

    for e in events:
        if e.kind == "mi_window":
            continue  # handled above
        if e.kind == "stimulus_onset" and e.payload.get("task") in ("rsvp", "nback"):
            if not (start_ns <= e.t_ns < end_ns):
                skipped += 1
                continue
            i0 = round((e.t_ns - start_ns) / 1e9 * rate)
            _add_template(data, i0, visual_wave, visual_w)
            if e.payload.get("is_target"):
                _add_template(data, i0, p300_wave, p300_w)
        elif e.kind == "injection":
            if e.t_ns not in caught_ts and not e.payload.get("caught"):
                continue
            if not (start_ns <= e.t_ns < end_ns):
                skipped += 1
                continue
            i0 = round((e.t_ns - start_ns) / 1e9 * rate)
            _add_template(data, i0, errp_wave, errp_w)
        elif e.kind == "minigame_start" and e.payload.get("task") == "ssvep":
            if not (start_ns <= e.t_ns < end_ns):
                skipped += 1
                continue
            payload = e.payload
            toggles = [tt for box, tt in payload.get("toggle_times", ())
                       if box == payload.get("target_box")]
            if toggles:
                freq = _toggle_frequency(toggles)
            else:
                freq = float(payload.get("target_frequency", 0.0))
            if freq <= 0:
                continue
            flash = float(payload.get("flash_duration", 4.0))
            i0 = max(0, round((e.t_ns - start_ns) / 1e9 * rate))
            i1 = min(n, i0 + round(flash * rate))
            seg_t = np.arange(i1 - i0) / rate
            wave = (SSVEP_FUNDAMENTAL_AMP * np.sin(2 * np.pi * freq * seg_t)
                    + SSVEP_HARMONIC_AMP * np.sin(2 * np.pi * 2 * freq * seg_t))
            data[i0:i1] += np.outer(wave, ssvep_w)

    if config.include_blinks and config.blink_rate_per_min > 0:
        gen = channel_generator(config.seed, "blink")
        wave = blink_waveform(rate)
        weights = np.array([BLINK_WEIGHTS[0].get(ch, BLINK_WEIGHTS[1])
                            for ch in channels])
        t_blink = gen.exponential(60.0 / config.blink_rate_per_min)
        while t_blink < duration_s:
            _add_template(data, round(t_blink * rate), wave, weights)
            t_blink += gen.exponential(60.0 / config.blink_rate_per_min)

    if skipped:
        logger.warning("synthesize_recording skipped %d events outside [0, %.3f) s",
                       skipped, duration_s)
    return MultichannelRecording(data=data, start_ns=start_ns, sample_rate=rate,
                                 channel_labels=tuple(channels), skipped_events=skipped)
