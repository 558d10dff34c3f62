"""Event-locked epoch extraction, baseline correction, and grand averaging."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from gemmind.errors import AnalysisError
from gemmind.synth.generator import MultichannelRecording
from gemmind.timeline.archive import align_events_to_samples
from gemmind.timeline.events import MarkerEvent, StreamHeader

DEFAULT_WINDOW = (-0.2, 0.8)
DEFAULT_BASELINE = (-0.2, 0.0)


@dataclass
class EpochSet:
    data: np.ndarray                   # epochs x samples x channels
    times: np.ndarray                  # seconds relative to the lock event
    labels: list
    channel_labels: tuple
    sample_rate: float
    baseline: Optional[tuple[float, float]]
    excluded: int = 0

    @property
    def n_epochs(self) -> int:
        return self.data.shape[0]

    def select(self, condition) -> np.ndarray:
        mask = np.array([lab == condition for lab in self.labels])
        return self.data[mask]

    def channel_index(self, label: str) -> int:
        return self.channel_labels.index(label)


def extract_epochs(recording: MultichannelRecording, events: Sequence[MarkerEvent],
                   window: tuple[float, float] = DEFAULT_WINDOW,
                   baseline: Optional[tuple[float, float]] = DEFAULT_BASELINE,
                   label_fn: Optional[Callable[[MarkerEvent], object]] = None) -> EpochSet:
    """Cut per-event windows and subtract each epoch's baseline mean.

    Events whose window would cross a recording edge are excluded and
    counted, never silently shifted.
    """
    rate = recording.sample_rate
    start_off = round(window[0] * rate)
    length = round((window[1] - window[0]) * rate)
    times = (start_off + np.arange(length)) / rate

    header = StreamHeader(name="epoching", content="samples",
                          channel_labels=recording.channel_labels,
                          sample_rate=rate, start_ns=recording.start_ns)
    indices, _ = align_events_to_samples(events, header, recording.n_frames)

    epochs = []
    labels = []
    excluded = 0
    for event, idx in zip(events, indices):
        i0 = int(idx) + start_off
        if i0 < 0 or i0 + length > recording.n_frames:
            excluded += 1
            continue
        epochs.append(recording.data[i0:i0 + length])
        labels.append(label_fn(event) if label_fn else event.kind)
    if not epochs:
        raise AnalysisError("no usable epochs: all events fell outside the recording")

    data = np.stack(epochs)
    if baseline is not None:
        mask = (times >= baseline[0] - 1e-9) & (times <= baseline[1] + 1e-9)
        if not mask.any():
            raise AnalysisError(f"baseline {baseline} not covered by window {window}")
        data = data - data[:, mask, :].mean(axis=1, keepdims=True)
    return EpochSet(data=data, times=times, labels=labels,
                    channel_labels=recording.channel_labels, sample_rate=rate,
                    baseline=baseline, excluded=excluded)


def grand_average(epochs: EpochSet, condition) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and standard error across epochs of one condition."""
    data = epochs.select(condition)
    if data.shape[0] < 2:
        raise AnalysisError(
            f"condition {condition!r} has {data.shape[0]} epochs; need at least 2")
    mean = data.mean(axis=0)
    se = data.std(axis=0, ddof=1) / np.sqrt(data.shape[0])
    return mean, se
