"""Deterministic match-three engine: board, scoring, enemy cadence, error injection, modes."""

from gemmind.game.board import Board, find_matches, new_board
from gemmind.game.config import GameConfig
from gemmind.game.engine import (
    AttackOutcome,
    CheatOutcome,
    GameMode,
    GameState,
    MatchGame,
    ModeStatus,
    PowerUp,
    SwapCommand,
    SwapResolution,
    advance_enemy,
    apply_swap_and_resolve,
    error_injection_decision,
    handle_cheat_report,
    mode_status,
    score_resolution,
    shot_clock_update,
)

__all__ = [
    "AttackOutcome",
    "Board",
    "CheatOutcome",
    "GameConfig",
    "GameMode",
    "GameState",
    "MatchGame",
    "ModeStatus",
    "PowerUp",
    "SwapCommand",
    "SwapResolution",
    "advance_enemy",
    "apply_swap_and_resolve",
    "error_injection_decision",
    "find_matches",
    "handle_cheat_report",
    "mode_status",
    "new_board",
    "score_resolution",
    "shot_clock_update",
]
