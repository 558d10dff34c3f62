"""Behavioral model of a participant for headless sessions.

Response probabilities fall with task difficulty (RSVP coherence, n-back
load), reaction times are lognormal around half a second, and move speed
follows a logistic capability curve so shot-clock accuracy settles near
50% at the capability midpoint.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, fields
from typing import Optional

from gemmind.errors import ConfigError
from gemmind.minigames.nback import RESPONSE_WINDOW as NBACK_WINDOW
from gemmind.minigames.rsvp import RESPONSE_WINDOW_CLOSE as RSVP_WINDOW
from gemmind.minigames.ssvep import SsvepTrial
from gemmind.minigames.types import StimulusSchedule
from gemmind.timeline.events import MarkerEvent

SIDES = ("left", "right")


@dataclass(frozen=True)
class SimulatedPlayer:
    rsvp_hit_prob: tuple = (0.95, 0.85, 0.70, 0.50)     # per coherence level
    rt_median: float = 0.5
    rt_sigma_log: float = 0.3
    false_alarm_rate_per_min: float = 1.0
    nback_hit_prob: tuple = (0.95, 0.85, 0.70, 0.55)    # per n
    move_midpoint: float = 1.5                          # logistic location, s
    move_slope: float = 4.0                             # logistic slope, 1/s
    cheat_detection_prob: float = 0.8
    mi_window_accuracy: float = 0.8                     # analysis-free stub only

    def validate(self) -> None:
        probs = (list(self.rsvp_hit_prob) + list(self.nback_hit_prob)
                 + [self.cheat_detection_prob, self.mi_window_accuracy])
        bad = [p for p in probs if not 0.0 <= p <= 1.0]
        if bad:
            raise ConfigError([f"probability out of [0, 1]: {p}" for p in bad])
        if self.rt_median <= 0 or self.rt_sigma_log <= 0:
            raise ConfigError("reaction-time parameters must be positive")

    def to_dict(self) -> dict:
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["rsvp_hit_prob"] = list(self.rsvp_hit_prob)
        doc["nback_hit_prob"] = list(self.nback_hit_prob)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SimulatedPlayer":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError([f"unknown player field: {k}" for k in sorted(unknown)])
        doc = dict(doc)
        for key in ("rsvp_hit_prob", "nback_hit_prob"):
            if key in doc:
                doc[key] = tuple(doc[key])
        player = cls(**doc)
        player.validate()
        return player

    # -- primitive draws ----------------------------------------------------

    def draw_rt(self, rng: random.Random, max_rt: float) -> float:
        rt = math.exp(rng.gauss(math.log(self.rt_median), self.rt_sigma_log))
        return min(max(rt, 0.16), max_rt - 0.01)

    def move_time(self, rng: random.Random) -> float:
        u = rng.random()
        u = min(max(u, 1e-12), 1 - 1e-12)
        t = self.move_midpoint + math.log(u / (1 - u)) / self.move_slope
        return max(t, 0.05)

    def move_success_probability(self, clock: float) -> float:
        return 1.0 / (1.0 + math.exp(-self.move_slope * (clock - self.move_midpoint)))

    def notices_injection(self, rng: random.Random) -> bool:
        return rng.random() < self.cheat_detection_prob

    def cheat_delay(self, rng: random.Random) -> float:
        return rng.uniform(0.4, 1.2)

    def _false_alarm_times(self, duration: float, rng: random.Random) -> list[float]:
        rate = self.false_alarm_rate_per_min / 60.0
        times = []
        if rate <= 0:
            return times
        t = rng.expovariate(rate)
        while t < duration:
            times.append(t)
            t += rng.expovariate(rate)
        return times

    # -- per-task behaviour --------------------------------------------------

    def rsvp_responses(self, schedule: StimulusSchedule, coherence: int,
                       rng: random.Random) -> list[tuple[float, str]]:
        p_hit = self.rsvp_hit_prob[coherence - 1]
        responses = []
        for target in schedule.targets:
            if rng.random() < p_hit:
                responses.append((target.onset + self.draw_rt(rng, RSVP_WINDOW),
                                  target.side))
        for t in self._false_alarm_times(schedule.duration, rng):
            responses.append((t, SIDES[rng.randrange(2)]))
        responses.sort()
        return responses

    def nback_clicks(self, schedule: StimulusSchedule, n: int,
                     rng: random.Random) -> list[float]:
        p_hit = self.nback_hit_prob[n - 1]
        clicks = [target.onset + self.draw_rt(rng, NBACK_WINDOW)
                  for target in schedule.targets if rng.random() < p_hit]
        clicks.extend(self._false_alarm_times(schedule.duration, rng))
        clicks.sort()
        return clicks

    def ssvep_click(self, trial: SsvepTrial, rng: random.Random) -> tuple[float, int]:
        return (trial.flash_duration + self.draw_rt(rng, 1.5), trial.target_box)

    def mi_verdict_stub(self, window_count: int, rng: random.Random) -> list[bool]:
        return [rng.random() < self.mi_window_accuracy for _ in range(window_count)]


@dataclass(frozen=True)
class PlannedTrial:
    kind: str                       # rsvp | ssvep | nback | mi
    start_ns: int
    schedule: object                # task-specific schedule/trial object
    coherence: Optional[int] = None
    n: Optional[int] = None


def simulate_player_responses(session_plan, profile: SimulatedPlayer,
                              rng: random.Random,
                              stream: str = "game") -> list[MarkerEvent]:
    """Response markers for a list of :class:`PlannedTrial`.

    The motor-imagery stub verdicts are not produced here; end-to-end runs
    classify the synthesized mu suppression instead.
    """
    events: list[MarkerEvent] = []
    for trial in session_plan:
        if trial.kind == "rsvp":
            for t_rel, side in profile.rsvp_responses(trial.schedule, trial.coherence or 1, rng):
                events.append(MarkerEvent(trial.start_ns + round(t_rel * 1e9), stream,
                                          "response", {"task": "rsvp", "side": side}))
        elif trial.kind == "nback":
            for t_rel in profile.nback_clicks(trial.schedule, trial.n or 1, rng):
                events.append(MarkerEvent(trial.start_ns + round(t_rel * 1e9), stream,
                                          "response", {"task": "nback"}))
        elif trial.kind == "ssvep":
            t_rel, box = profile.ssvep_click(trial.schedule, rng)
            events.append(MarkerEvent(trial.start_ns + round(t_rel * 1e9), stream,
                                      "response", {"task": "ssvep", "box": box}))
    events.sort(key=lambda e: e.t_ns)
    return events
