"""Timestamped multi-stream recording with clock-offset correction and a bit-exact archive."""

from gemmind.timeline.events import (
    DEFAULT_KINDS,
    MarkerEvent,
    Recorder,
    StreamHeader,
)
from gemmind.timeline.sync import estimate_clock_offset
from gemmind.timeline.archive import (
    SessionData,
    align_events_to_samples,
    read_session_archive,
    write_session_archive,
)

__all__ = [
    "DEFAULT_KINDS",
    "MarkerEvent",
    "Recorder",
    "SessionData",
    "StreamHeader",
    "align_events_to_samples",
    "estimate_clock_offset",
    "read_session_archive",
    "write_session_archive",
]
