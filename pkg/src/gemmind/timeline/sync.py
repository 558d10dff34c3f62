"""Clock-offset estimation from ping/pong round trips.

The estimate is taken at the round trip with the smallest RTT: under
symmetric delays that trip gives the offset exactly, and one-sided delay
spikes only inflate RTT, so they are never selected.
"""

from __future__ import annotations

from typing import Sequence

from gemmind.errors import SyncError

MIN_ROUND_TRIPS = 3


def estimate_clock_offset(round_trips: Sequence[tuple[float, float, float]]) -> float:
    """Remote-minus-local clock offset from (t_send, t_remote, t_recv) triples.

    All three timestamps must share a unit (this package uses integer
    nanoseconds); the offset comes back in the same unit.
    """
    if len(round_trips) < MIN_ROUND_TRIPS:
        raise SyncError(
            f"need at least {MIN_ROUND_TRIPS} round trips, got {len(round_trips)}")
    for t_send, _, t_recv in round_trips:
        if t_recv < t_send:
            raise SyncError("round trip with t_recv before t_send")
    t_send, t_remote, t_recv = min(round_trips, key=lambda rt: rt[2] - rt[0])
    return t_remote - (t_send + t_recv) / 2
