"""Marker events, stream headers, and the in-process recorder.

Timestamps are integer nanoseconds on a monotonic per-process clock,
never wall time. Multiple producers may append concurrently; a single
lock serializes appends, which preserves per-stream arrival order.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from gemmind.errors import ContractError

DEFAULT_KINDS = frozenset({
    "move", "match", "injection", "cheat_report", "stimulus_onset", "response",
    "attack", "minigame_start", "minigame_end", "mode_start", "mode_end",
    "flip_report",
    # Bookkeeping kinds beyond the core vocabulary:
    "timeout", "powerup", "mi_window", "enemy_defeated", "player_defeated",
    "session_start", "session_end",
})


@dataclass(frozen=True)
class MarkerEvent:
    t_ns: int
    stream: str
    kind: str
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StreamHeader:
    name: str
    content: str                      # "markers" or "samples"
    channel_labels: tuple = ()
    sample_rate: float = 0.0
    source_clock: str = "host"
    start_ns: int = 0

    def __post_init__(self):
        if self.content not in ("markers", "samples"):
            raise ContractError(f"unknown stream content {self.content!r}")
        if self.content == "samples":
            if self.sample_rate <= 0:
                raise ContractError("sample streams need a positive sample_rate")
            if not self.channel_labels:
                raise ContractError("sample streams need at least one channel")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "content": self.content,
            "channel_labels": list(self.channel_labels),
            "sample_rate": self.sample_rate,
            "source_clock": self.source_clock,
            "start_ns": self.start_ns,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StreamHeader":
        return cls(
            name=doc["name"],
            content=doc["content"],
            channel_labels=tuple(doc.get("channel_labels", ())),
            sample_rate=doc.get("sample_rate", 0.0),
            source_clock=doc.get("source_clock", "host"),
            start_ns=doc.get("start_ns", 0),
        )


class Recorder:
    """Collects marker events and sample frames for one session.

    ``clock`` supplies host timestamps for events appended without one;
    simulations inject their virtual clock here.
    """

    def __init__(self, clock: Optional[Callable[[], int]] = None,
                 kinds: frozenset = DEFAULT_KINDS):
        self._clock = clock or time.monotonic_ns
        self._kinds = kinds
        self._lock = threading.Lock()
        self.headers: dict[str, StreamHeader] = {}
        self.events: list[MarkerEvent] = []
        self._sample_chunks: dict[str, list[np.ndarray]] = {}
        self.clock_offsets: dict[str, int] = {}

    def register_stream(self, header: StreamHeader) -> None:
        with self._lock:
            if header.name in self.headers:
                raise ContractError(f"stream {header.name!r} already registered")
            self.headers[header.name] = header
            if header.content == "samples":
                self._sample_chunks[header.name] = []

    def set_clock_offset(self, stream: str, offset_ns: int) -> None:
        self.clock_offsets[stream] = int(offset_ns)

    def append_event(self, event: MarkerEvent) -> int:
        header = self.headers.get(event.stream)
        if header is None or header.content != "markers":
            raise ContractError(f"unregistered marker stream {event.stream!r}")
        if event.kind not in self._kinds:
            raise ContractError(f"unknown event kind {event.kind!r}")
        with self._lock:
            if event.t_ns is None:
                event = MarkerEvent(self._clock(), event.stream, event.kind, event.payload)
            self.events.append(event)
        return event.t_ns

    def append(self, stream: str, kind: str, payload: dict, t_ns: Optional[int] = None) -> int:
        return self.append_event(MarkerEvent(t_ns, stream, kind, payload))

    def append_samples(self, stream: str, frames: np.ndarray) -> None:
        header = self.headers.get(stream)
        if header is None or header.content != "samples":
            raise ContractError(f"unregistered sample stream {stream!r}")
        frames = np.asarray(frames, dtype=np.float32)
        if frames.ndim != 2 or frames.shape[1] != len(header.channel_labels):
            raise ContractError(
                f"frames must be (n, {len(header.channel_labels)}), got {frames.shape}")
        with self._lock:
            self._sample_chunks[stream].append(frames)

    def samples(self, stream: str) -> np.ndarray:
        chunks = self._sample_chunks.get(stream)
        if chunks is None:
            raise ContractError(f"unregistered sample stream {stream!r}")
        if not chunks:
            header = self.headers[stream]
            return np.zeros((0, len(header.channel_labels)), dtype=np.float32)
        return np.concatenate(chunks, axis=0)

    def all_samples(self) -> dict[str, np.ndarray]:
        return {name: self.samples(name) for name in self._sample_chunks}
