"""Session configuration: every tunable in one validated document."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from gemmind.errors import ConfigError
from gemmind.game.config import GameConfig
from gemmind.game.engine import GameMode
from gemmind.synth.generator import SynthConfig
from gemmind.synth.player import SimulatedPlayer

# Protocol structure: three 15-minute rounds (normal, time-limited,
# move-limited), each followed by 5 minutes of shot clock.
DEFAULT_ROUNDS = (
    ("normal", 900.0),
    ("shot_clock", 300.0),
    ("time_limited", 900.0),
    ("shot_clock", 300.0),
    ("move_limited", 900.0),
    ("shot_clock", 300.0),
)


@dataclass(frozen=True)
class SessionConfig:
    game: GameConfig = field(default_factory=GameConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    player: SimulatedPlayer = field(default_factory=SimulatedPlayer)
    rounds: tuple = DEFAULT_ROUNDS
    master_seed: int = 0
    task_weights: Optional[dict] = None
    synthesize_eeg: bool = True
    # Imagery verdicts from the trained classifier on per-trial synthetic
    # EEG; False falls back to the behavioral stub (smoke tests).
    mi_use_classifier: bool = True

    def validate(self) -> None:
        problems = []
        for check in (self.game.validate, self.synth.validate, self.player.validate):
            try:
                check()
            except ConfigError as e:
                problems.extend(e.problems)
        modes = {m.value for m in GameMode}
        for i, (mode, duration) in enumerate(self.rounds):
            if mode not in modes:
                problems.append(f"rounds[{i}]: unknown mode {mode!r}")
            if duration <= 0:
                problems.append(f"rounds[{i}]: duration must be positive, got {duration}")
        if not self.rounds:
            problems.append("rounds must not be empty")
        if problems:
            raise ConfigError(problems)

    @property
    def session_id(self) -> str:
        return f"gemmind-{self.master_seed:016x}"

    def to_dict(self) -> dict:
        return {
            "game": self.game.to_dict(),
            "synth": self.synth.to_dict(),
            "player": self.player.to_dict(),
            "rounds": [[mode, duration] for mode, duration in self.rounds],
            "master_seed": self.master_seed,
            "task_weights": self.task_weights,
            "synthesize_eeg": self.synthesize_eeg,
            "mi_use_classifier": self.mi_use_classifier,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionConfig":
        known = {"game", "synth", "player", "rounds", "master_seed",
                 "task_weights", "synthesize_eeg", "mi_use_classifier"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError([f"unknown session config field: {k}" for k in sorted(unknown)])
        cfg = cls(
            game=GameConfig.from_dict(doc.get("game", {})),
            synth=SynthConfig.from_dict(doc.get("synth", {})),
            player=SimulatedPlayer.from_dict(doc.get("player", {})),
            rounds=tuple((mode, float(duration))
                         for mode, duration in doc.get("rounds", DEFAULT_ROUNDS)),
            master_seed=int(doc.get("master_seed", 0)),
            task_weights=doc.get("task_weights"),
            synthesize_eeg=bool(doc.get("synthesize_eeg", True)),
            mi_use_classifier=bool(doc.get("mi_use_classifier", True)),
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "SessionConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError([f"cannot read config {path}: {e}"]) from e
        return cls.from_dict(doc)

    def replace(self, **kwargs) -> "SessionConfig":
        import dataclasses
        cfg = dataclasses.replace(self, **kwargs)
        cfg.validate()
        return cfg


def default_config(seed: int = 0) -> SessionConfig:
    cfg = SessionConfig(master_seed=seed,
                        synth=SynthConfig(seed=seed))
    cfg.validate()
    return cfg


def smoke_config(seed: int = 0, normal_s: float = 60.0,
                 shot_clock_s: float = 30.0) -> SessionConfig:
    """A minutes-scale session for determinism and plumbing checks."""
    cfg = SessionConfig(
        master_seed=seed,
        synth=SynthConfig(seed=seed),
        rounds=(("normal", normal_s), ("shot_clock", shot_clock_s)),
        mi_use_classifier=False,
    )
    cfg.validate()
    return cfg


def pilot_config(seed: int = 0) -> SessionConfig:
    """One hour of normal play shaped like the pilot protocol.

    No error injection (the pilot collected no ErrP data) and task
    weights tuned so stimulus time lands near 6/5/12/5 minutes of
    RSVP/SSVEP/n-back/MI.
    """
    cfg = SessionConfig(
        master_seed=seed,
        game=GameConfig(errp_probability=0.0),
        synth=SynthConfig(seed=seed),
        rounds=(("normal", 3600.0),),
        task_weights={"rsvp": 5, "ssvep": 11, "nback": 2, "mi": 7},
    )
    cfg.validate()
    return cfg
