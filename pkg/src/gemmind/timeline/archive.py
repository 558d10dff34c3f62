"""Session archive: ``meta.json`` + ``events.jsonl`` + raw float32 blobs.

The layout is fully deterministic: fixed key order in meta (sorted),
events written one per line as ``{"t_ns":..,"stream":..,"kind":..,
"payload":..}`` with sorted payload keys, every line newline-terminated,
and little-endian float32 frame-major sample blobs. Writing the same
inputs twice produces byte-identical directories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from gemmind.errors import ArchiveError
from gemmind.timeline.events import MarkerEvent, StreamHeader

META_NAME = "meta.json"
EVENTS_NAME = "events.jsonl"
BYTES_PER_SAMPLE = 4


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def event_line(event: MarkerEvent) -> str:
    payload = json.dumps(_jsonable(event.payload), sort_keys=True, separators=(",", ":"))
    return (f'{{"t_ns":{int(event.t_ns)},"stream":{json.dumps(event.stream)},'
            f'"kind":{json.dumps(event.kind)},"payload":{payload}}}\n')


def write_session_archive(path, headers: Sequence[StreamHeader],
                          events: Iterable[MarkerEvent],
                          samples: dict[str, np.ndarray],
                          session_id: str,
                          config: Optional[dict] = None,
                          clock_offsets: Optional[dict[str, int]] = None) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ArchiveError(f"cannot create archive directory {path}: {e}") from e

    blobs = {}
    for header in headers:
        if header.content != "samples":
            continue
        frames = np.asarray(samples.get(header.name,
                                        np.zeros((0, len(header.channel_labels)))),
                            dtype="<f4")
        if frames.ndim != 2 or frames.shape[1] != len(header.channel_labels):
            raise ArchiveError(
                f"stream {header.name!r}: frames shape {frames.shape} does not match "
                f"{len(header.channel_labels)} channels")
        blobs[header.name] = frames

    meta = {
        "session_id": session_id,
        "config": _jsonable(config or {}),
        "clock_offsets": {k: int(v) for k, v in (clock_offsets or {}).items()},
        "streams": [
            dict(header.to_dict(),
                 frames=int(blobs[header.name].shape[0]) if header.name in blobs else 0)
            for header in headers
        ],
    }
    try:
        (path / META_NAME).write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        with open(path / EVENTS_NAME, "w", encoding="utf-8", newline="") as fh:
            for event in events:
                fh.write(event_line(event))
        for name, frames in blobs.items():
            (path / f"{name}.f32").write_bytes(frames.tobytes(order="C"))
    except OSError as e:
        raise ArchiveError(f"failed writing archive at {path}: {e}") from e
    return path


@dataclass
class SessionData:
    meta: dict
    headers: dict[str, StreamHeader]
    events: list[MarkerEvent]          # host-clock corrected, time-sorted
    samples: dict[str, np.ndarray]

    @property
    def clock_offsets(self) -> dict[str, int]:
        return self.meta.get("clock_offsets", {})


def read_session_archive(path) -> SessionData:
    """Lossless inverse of :func:`write_session_archive`.

    Remote-stamped events come back converted to host time via the stored
    per-stream offsets, and the event list is sorted by that corrected
    time. Malformed files raise :class:`ArchiveError` naming the file and
    byte offset.
    """
    path = Path(path)
    meta_path = path / META_NAME
    if not meta_path.is_file():
        raise ArchiveError(f"{meta_path}: missing")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ArchiveError(f"{meta_path}: invalid JSON at byte {e.pos}") from e

    headers: dict[str, StreamHeader] = {}
    frame_counts: dict[str, int] = {}
    for doc in meta.get("streams", []):
        header = StreamHeader.from_dict(doc)
        headers[header.name] = header
        frame_counts[header.name] = int(doc.get("frames", 0))
    offsets = {k: int(v) for k, v in meta.get("clock_offsets", {}).items()}

    events: list[MarkerEvent] = []
    events_path = path / EVENTS_NAME
    if events_path.is_file():
        offset = 0
        with open(events_path, "rb") as fh:
            for raw in fh:
                try:
                    doc = json.loads(raw)
                    t_ns = int(doc["t_ns"])
                    stream = doc["stream"]
                    kind = doc["kind"]
                    payload = doc["payload"]
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                    raise ArchiveError(
                        f"{events_path}: bad event at byte {offset}: {e}") from e
                if stream not in headers:
                    raise ArchiveError(
                        f"{events_path}: byte {offset}: unknown stream {stream!r}")
                t_ns += offsets.get(stream, 0)
                events.append(MarkerEvent(t_ns, stream, kind, payload))
                offset += len(raw)
    events.sort(key=lambda e: e.t_ns)

    samples: dict[str, np.ndarray] = {}
    for name, header in headers.items():
        if header.content != "samples":
            continue
        blob_path = path / f"{name}.f32"
        n_channels = len(header.channel_labels)
        expected = frame_counts[name] * n_channels * BYTES_PER_SAMPLE
        raw = blob_path.read_bytes() if blob_path.is_file() else b""
        if len(raw) != expected:
            problem = "truncated" if len(raw) < expected else "trailing data"
            boundary = min(len(raw), expected)
            raise ArchiveError(
                f"{blob_path}: {problem} at byte {boundary} "
                f"(expected {expected} bytes, found {len(raw)})")
        data = np.frombuffer(raw, dtype="<f4")
        samples[name] = data.reshape(frame_counts[name], n_channels)
    return SessionData(meta=meta, headers=headers, events=events, samples=samples)


def align_events_to_samples(events: Sequence[MarkerEvent], header: StreamHeader,
                            n_frames: int) -> tuple[np.ndarray, np.ndarray]:
    """Nearest sample index for each event, plus an in-recording flag.

    Events outside ``[0, n_frames)`` keep their (clipped-sign) index and are
    flagged rather than dropped, so callers can count exclusions.
    """
    if header.content != "samples" or header.sample_rate <= 0:
        raise ArchiveError(f"stream {header.name!r} is not an alignable sample stream")
    t = np.array([e.t_ns for e in events], dtype=np.int64)
    rel = (t - header.start_ns) / 1e9
    indices = np.round(rel * header.sample_rate).astype(np.int64)
    in_bounds = (indices >= 0) & (indices < n_frames)
    return indices, in_bounds
