"""Game tuning parameters."""

from __future__ import annotations

from dataclasses import dataclass, fields

from gemmind.errors import ConfigError


@dataclass(frozen=True)
class GameConfig:
    """All tunable knobs of the match-three battle loop.

    Defaults follow the study protocol: attacks every 8 moves for 10 HP,
    a mini-game every 5 matches, 15% move substitution, and a shot clock
    starting at 3.0 s that moves in 0.1 s steps.
    """

    board_rows: int = 8
    board_cols: int = 8
    gem_kinds: int = 7
    player_hp: int = 100
    enemy_hp: int = 100
    enemy_attack_period: int = 8
    enemy_attack_damage: int = 10
    minigame_period: int = 5
    errp_probability: float = 0.15
    shot_clock_start: float = 3.0
    shot_clock_step: float = 0.1
    shot_clock_floor: float = 0.3
    mode_round_duration: float = 900.0
    shot_clock_round_duration: float = 300.0
    # Battle length for move-limited mode; the protocol leaves the exact
    # number open, 150 swaps roughly fills a 15-minute round.
    move_limit: int = 150

    def validate(self) -> None:
        problems = []
        if self.board_rows < 3:
            problems.append(f"board_rows must be >= 3, got {self.board_rows}")
        if self.board_cols < 3:
            problems.append(f"board_cols must be >= 3, got {self.board_cols}")
        if self.gem_kinds < 4:
            problems.append(f"gem_kinds must be >= 4, got {self.gem_kinds}")
        if not 0.0 <= self.errp_probability <= 1.0:
            problems.append(f"errp_probability must be in [0, 1], got {self.errp_probability}")
        if not self.shot_clock_floor < self.shot_clock_start:
            problems.append(
                "shot_clock_floor must be below shot_clock_start, got "
                f"{self.shot_clock_floor} >= {self.shot_clock_start}"
            )
        for name in ("player_hp", "enemy_hp", "enemy_attack_period", "enemy_attack_damage",
                     "minigame_period", "move_limit"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("shot_clock_step", "mode_round_duration", "shot_clock_round_duration"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive, got {getattr(self, name)}")
        if problems:
            raise ConfigError(problems)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "GameConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError([f"unknown game config field: {k}" for k in sorted(unknown)])
        cfg = cls(**doc)
        cfg.validate()
        return cfg
