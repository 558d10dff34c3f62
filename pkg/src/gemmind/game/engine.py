"""Game state machine: swap resolution, scoring, injection, power-ups, enemy cadence.

All mutation is funnelled through :class:`MatchGame`, which is the single
writer; callers on other threads must only read snapshots. The free
functions below are the individual rules and are also usable directly on a
:class:`GameState` in tests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from gemmind.errors import ContractError
from gemmind.game.board import (
    Board,
    Cell,
    find_invalid_swap,
    find_matches,
    find_valid_swap,
    new_board,
    reshuffle_preserving_counts,
    resolve_cascades,
    would_create_match,
)
from gemmind.game.config import GameConfig
from gemmind.rng import substream

POINTS_PER_GEM = 25
DAMAGE_PER_GEM = 5
ATTACK_BUFF_FACTOR = 1.5
BARREL_HEAL = 10
BARREL_DAMAGE = 10
VITALITY_MINIGAME_BONUS = 2


class GameMode(str, Enum):
    NORMAL = "normal"
    TIME_LIMITED = "time_limited"
    MOVE_LIMITED = "move_limited"
    SHOT_CLOCK = "shot_clock"


class PowerUp(str, Enum):
    ATTACK = "attack"
    DEFENSE = "defense"
    AGILITY = "agility"
    VITALITY = "vitality"


@dataclass(frozen=True)
class SwapCommand:
    cell_a: Cell
    cell_b: Cell
    issued_at_ns: int = 0

    def __post_init__(self):
        if self.cell_a == self.cell_b:
            raise ContractError("swap must involve two distinct cells")


@dataclass
class SwapResolution:
    valid: bool
    injected: bool = False
    cascade_levels: list = field(default_factory=list)
    refilled: bool = False
    points: int = 0
    damage: int = 0
    substituted: Optional[tuple[Cell, Cell]] = None

    @property
    def cascade_sizes(self) -> list[list[int]]:
        return [[len(m) for m in level] for level in self.cascade_levels]


@dataclass
class CheatOutcome:
    valid_report: bool
    resolution: Optional[SwapResolution] = None
    powerup_kinds: tuple[PowerUp, ...] = ()


@dataclass
class AttackOutcome:
    damage: int
    dodged: bool = False
    defended: bool = False


@dataclass
class ModeStatus:
    over: bool
    reason: Optional[str] = None

    CONTINUE = None  # set after class creation


ModeStatus.CONTINUE = ModeStatus(False)


@dataclass
class GameState:
    """Everything the game knows between two commands."""

    config: GameConfig
    board: Board
    mode: GameMode
    player_hp: int
    enemy_hp: int
    moves_made: int = 0
    moves_until_attack: int = 0
    moves_until_minigame: int = 0
    powerups: dict = field(default_factory=dict)
    powerups_awarded: int = 0
    pending_attack_buff: bool = False
    suppress_attack_damage: bool = False
    last_move_injected: bool = False
    pending_injected_swap: Optional[SwapCommand] = None
    shot_clock: float = 0.0
    score: int = 0
    elapsed: float = 0.0
    false_reports: int = 0
    injection_rng: random.Random = field(default_factory=random.Random)
    powerup_rng: random.Random = field(default_factory=random.Random)

    def snapshot(self) -> dict:
        """JSON-safe view for the wire protocol and archive meta."""
        return {
            "mode": self.mode.value,
            "board": [row[:] for row in self.board.cells],
            "player_hp": self.player_hp,
            "enemy_hp": self.enemy_hp,
            "moves_made": self.moves_made,
            "moves_until_attack": self.moves_until_attack,
            "moves_until_minigame": self.moves_until_minigame,
            "powerups": {k.value: self.powerups.get(k, 0) for k in PowerUp},
            "shot_clock": self.shot_clock,
            "score": self.score,
            "elapsed": self.elapsed,
        }


def initial_state(config: GameConfig, seed: int, mode: GameMode = GameMode.NORMAL) -> GameState:
    config.validate()
    return GameState(
        config=config,
        board=new_board(config, seed),
        mode=mode,
        player_hp=config.player_hp,
        enemy_hp=config.enemy_hp,
        moves_until_attack=config.enemy_attack_period,
        moves_until_minigame=config.minigame_period,
        powerups={k: 0 for k in PowerUp},
        shot_clock=config.shot_clock_start,
        injection_rng=substream(seed, "injection"),
        powerup_rng=substream(seed, "powerup"),
    )


def score_resolution(resolution: SwapResolution, attack_buff: bool = False) -> tuple[int, int]:
    """Points and damage for a valid, non-injected resolution.

    Each match set at cascade level L (1-based) is worth
    ``25 * (size - 2) * L`` points and ``5 * (size - 2) * L`` damage;
    longer runs and deeper cascades pay more. An armed attack buff
    multiplies total damage by 1.5, floored.
    """
    if resolution.injected or not resolution.valid:
        raise ContractError("score_resolution requires a valid, non-injected resolution")
    points = 0
    damage = 0
    for level, matches in enumerate(resolution.cascade_levels, start=1):
        for m in matches:
            points += POINTS_PER_GEM * (len(m) - 2) * level
            damage += DAMAGE_PER_GEM * (len(m) - 2) * level
    if attack_buff:
        damage = int(damage * ATTACK_BUFF_FACTOR)
    return points, damage


def error_injection_decision(state: GameState, rng: random.Random) -> bool:
    """Whether this (valid) move gets substituted with an invalid one.

    Fires with probability ``errp_probability`` but never on the move
    immediately after a previous injection.
    """
    if state.last_move_injected:
        return False
    return rng.random() < state.config.errp_probability


def apply_swap_and_resolve(state: GameState, cmd: SwapCommand, *,
                           allow_injection: bool = True,
                           suppress_damage: bool = False) -> SwapResolution:
    """Resolve one swap against the board.

    Valid swaps either cascade to completion or, with the injection
    probability, get replaced by a recorded invalid swap while the intended
    command is parked in ``pending_injected_swap``. Invalid swaps leave the
    board untouched. HP and score application is the caller's job.
    """
    board = state.board
    if not (board.in_bounds(cmd.cell_a) and board.in_bounds(cmd.cell_b)):
        raise ContractError(f"swap cells out of bounds: {cmd.cell_a}, {cmd.cell_b}")

    if not would_create_match(board, cmd.cell_a, cmd.cell_b):
        return SwapResolution(valid=False)

    if allow_injection and error_injection_decision(state, state.injection_rng):
        substituted = find_invalid_swap(board, state.injection_rng)
        state.pending_injected_swap = cmd
        state.last_move_injected = True
        return SwapResolution(valid=True, injected=True, substituted=substituted)

    (ra, ca), (rb, cb) = cmd.cell_a, cmd.cell_b
    cells = board.cells
    cells[ra][ca], cells[rb][cb] = cells[rb][cb], cells[ra][ca]
    levels = resolve_cascades(board)
    resolution = SwapResolution(valid=True, cascade_levels=levels, refilled=True)
    if suppress_damage:
        resolution.points, _ = score_resolution(resolution, attack_buff=False)
        resolution.damage = 0
    else:
        resolution.points, resolution.damage = score_resolution(
            resolution, attack_buff=state.pending_attack_buff)
        if state.pending_attack_buff:
            state.powerups[PowerUp.ATTACK] = max(0, state.powerups.get(PowerUp.ATTACK, 0) - 1)
            state.pending_attack_buff = state.powerups.get(PowerUp.ATTACK, 0) > 0
    return resolution


def award_powerup(state: GameState, kind: PowerUp) -> None:
    """Grant one power-up; Vitality is consumed on the spot."""
    state.powerups_awarded += 1
    if kind is PowerUp.VITALITY:
        state.moves_until_minigame = max(0, state.moves_until_minigame - VITALITY_MINIGAME_BONUS)
        return
    state.powerups[kind] = state.powerups.get(kind, 0) + 1
    if kind is PowerUp.ATTACK:
        state.pending_attack_buff = True


def handle_cheat_report(state: GameState) -> CheatOutcome:
    """Resolve a CHEATER button press.

    With an injection pending, the intended swap finally executes
    (injection disabled for the makeup move) and two random power-ups are
    granted. Without one, the press is logged as a false report and
    nothing changes.
    """
    if state.pending_injected_swap is None:
        state.false_reports += 1
        return CheatOutcome(valid_report=False)
    cmd = state.pending_injected_swap
    state.pending_injected_swap = None
    # last_move_injected stays set: the next swap is still the move right
    # after a substitution and must not be substituted again.
    resolution = apply_swap_and_resolve(state, cmd, allow_injection=False)
    kinds = tuple(state.powerup_rng.choice(list(PowerUp)) for _ in range(2))
    for kind in kinds:
        award_powerup(state, kind)
    return CheatOutcome(valid_report=True, resolution=resolution, powerup_kinds=kinds)


def advance_enemy(state: GameState, move_was_invalid: bool = False) -> Optional[AttackOutcome]:
    """Tick the enemy-attack countdown after a completed player move.

    Invalid swaps are participant-initiated mistakes and cost an extra
    tick. When the counter reaches zero the attack fires: one Agility
    dodges it outright, else one Defense halves it (floored).
    """
    state.moves_until_attack -= 2 if move_was_invalid else 1
    if state.moves_until_attack > 0:
        return None
    state.moves_until_attack = state.config.enemy_attack_period
    if state.powerups.get(PowerUp.AGILITY, 0) > 0:
        state.powerups[PowerUp.AGILITY] -= 1
        return AttackOutcome(damage=0, dodged=True)
    damage = state.config.enemy_attack_damage
    defended = False
    if state.powerups.get(PowerUp.DEFENSE, 0) > 0:
        state.powerups[PowerUp.DEFENSE] -= 1
        damage //= 2
        defended = True
    damage = min(damage, state.player_hp)
    state.player_hp -= damage
    return AttackOutcome(damage=damage, defended=defended)


def shot_clock_update(clock: float, success: bool, config: GameConfig) -> float:
    """Move the shot clock one 0.1 s step and clamp to [floor, start].

    The clock lives on a tenth-of-a-second grid; integer arithmetic keeps
    every delta an exact +-0.1 s.
    """
    tenths = round(clock * 10)
    tenths += -1 if success else 1
    tenths = max(round(config.shot_clock_floor * 10),
                 min(round(config.shot_clock_start * 10), tenths))
    return tenths / 10.0


def mode_status(state: GameState) -> ModeStatus:
    """First satisfied terminal condition for the active mode, if any."""
    cfg = state.config
    if state.mode is GameMode.NORMAL:
        if state.player_hp <= 0:
            return ModeStatus(True, "player_defeated")
        if state.enemy_hp <= 0:
            return ModeStatus(True, "enemy_defeated")
    elif state.mode is GameMode.TIME_LIMITED:
        if state.elapsed >= cfg.mode_round_duration:
            return ModeStatus(True, "time_up")
    elif state.mode is GameMode.MOVE_LIMITED:
        if state.moves_made >= cfg.move_limit:
            return ModeStatus(True, "move_limit_reached")
    elif state.mode is GameMode.SHOT_CLOCK:
        if state.elapsed >= cfg.shot_clock_round_duration:
            return ModeStatus(True, "time_up")
    return ModeStatus.CONTINUE


class MatchGame:
    """Single-writer command interface around one battle.

    ``emit(kind, payload)`` is the marker sink; it must return the
    timestamp it assigned so follow-up events can reference it. All state
    reads from other components must go through ``state.snapshot()``.
    """

    def __init__(self, config: GameConfig, seed: int,
                 mode: GameMode = GameMode.NORMAL,
                 emit: Optional[Callable[[str, dict], int]] = None):
        self.config = config
        self.seed = seed
        self.state = initial_state(config, seed, mode)
        self._emit = emit or (lambda kind, payload: 0)
        self.minigame_active = False
        self._pending_injection_t: Optional[int] = None

    # -- commands ---------------------------------------------------------

    def submit_swap(self, cmd: SwapCommand) -> SwapResolution:
        if self.minigame_active:
            raise ContractError("no swaps while a mini-game is active")
        st = self.state
        missed_injection = st.pending_injected_swap is not None
        st.pending_injected_swap = None

        # A timeout penalty blanks the damage of exactly the next move.
        suppress = st.suppress_attack_damage
        st.suppress_attack_damage = False
        resolution = apply_swap_and_resolve(st, cmd, suppress_damage=suppress)

        if not resolution.injected:
            st.last_move_injected = False

        st.moves_made += 1
        applied = self._apply_scoring(resolution)
        if st.mode is GameMode.SHOT_CLOCK:
            # An injected move was still a successfully found match.
            st.shot_clock = shot_clock_update(st.shot_clock, resolution.valid, self.config)

        payload = {
            "cell_a": list(cmd.cell_a),
            "cell_b": list(cmd.cell_b),
            "valid": resolution.valid,
            "injected": resolution.injected,
            "points": resolution.points,
            "damage_applied": applied,
            "cascade_sizes": resolution.cascade_sizes,
            "move_index": st.moves_made,
            "missed_injection": missed_injection,
        }
        if st.mode is GameMode.SHOT_CLOCK:
            payload["shot_clock"] = st.shot_clock
        t = self._emit("move", payload)
        if resolution.injected:
            self._pending_injection_t = self._emit("injection", {
                "intended": [list(cmd.cell_a), list(cmd.cell_b)],
                "substituted": [list(resolution.substituted[0]),
                                list(resolution.substituted[1])],
            })
        elif resolution.valid:
            self._emit("match", {
                "cascade_sizes": resolution.cascade_sizes,
                "points": resolution.points,
                "damage_applied": applied,
            })
            st.moves_until_minigame = max(0, st.moves_until_minigame - 1)

        self._after_move(move_was_invalid=not resolution.valid)
        return resolution

    def report_cheat(self) -> CheatOutcome:
        st = self.state
        injection_t = self._pending_injection_t
        outcome = handle_cheat_report(st)
        if not outcome.valid_report:
            self._emit("cheat_report", {"valid": False})
            return outcome
        self._pending_injection_t = None
        applied = self._apply_scoring(outcome.resolution)
        self._emit("cheat_report", {
            "valid": True,
            "injection_t_ns": injection_t,
            "powerups": [k.value for k in outcome.powerup_kinds],
            "points": outcome.resolution.points,
            "damage_applied": applied,
        })
        self._emit("match", {
            "cascade_sizes": outcome.resolution.cascade_sizes,
            "points": outcome.resolution.points,
            "damage_applied": applied,
        })
        for kind in outcome.powerup_kinds:
            self._emit("powerup", {"kind": kind.value, "source": "cheat_report"})
        st.moves_until_minigame = max(0, st.moves_until_minigame - 1)
        return outcome

    def note_timeout(self) -> None:
        """Shot-clock expiry: failure step, and the next match deals no damage."""
        st = self.state
        st.pending_injected_swap = None
        st.last_move_injected = False
        st.moves_made += 1
        if st.mode is GameMode.SHOT_CLOCK:
            st.shot_clock = shot_clock_update(st.shot_clock, False, self.config)
        st.suppress_attack_damage = True
        self._emit("timeout", {"shot_clock": st.shot_clock, "move_index": st.moves_made})
        self._after_move(move_was_invalid=False)

    def award_powerups(self, kinds) -> None:
        for kind in kinds:
            kind = PowerUp(kind)
            award_powerup(self.state, kind)
            self._emit("powerup", {"kind": kind.value, "source": "minigame"})

    def draw_powerup_kinds(self, count: int) -> tuple[PowerUp, ...]:
        return tuple(self.state.powerup_rng.choice(list(PowerUp)) for _ in range(count))

    def apply_barrel(self, direction: str, passed: bool) -> None:
        """Motor trial outcome: left heals the player, right damages the enemy."""
        st = self.state
        if not passed:
            return
        if direction == "left":
            st.player_hp = min(self.config.player_hp, st.player_hp + BARREL_HEAL)
        else:
            damage = min(BARREL_DAMAGE, st.enemy_hp)
            st.enemy_hp -= damage
            if st.enemy_hp <= 0:
                self._emit("enemy_defeated", {"via": "barrel"})

    def minigame_due(self) -> bool:
        return self.state.moves_until_minigame <= 0

    def begin_minigame(self) -> None:
        self.minigame_active = True

    def end_minigame(self) -> None:
        self.minigame_active = False
        self.state.moves_until_minigame = self.config.minigame_period

    def status(self) -> ModeStatus:
        return mode_status(self.state)

    # -- internals --------------------------------------------------------

    def _apply_scoring(self, resolution: SwapResolution) -> int:
        st = self.state
        st.score += resolution.points
        applied = min(resolution.damage, st.enemy_hp)
        st.enemy_hp -= applied
        if applied and st.enemy_hp <= 0:
            self._emit("enemy_defeated", {"via": "match"})
        return applied

    def _after_move(self, move_was_invalid: bool) -> None:
        st = self.state
        outcome = advance_enemy(st, move_was_invalid=move_was_invalid)
        if outcome is not None:
            self._emit("attack", {
                "damage": outcome.damage,
                "dodged": outcome.dodged,
                "defended": outcome.defended,
            })
            if st.player_hp <= 0:
                self._emit("player_defeated", {})

    def find_player_swap(self, rng: random.Random) -> SwapCommand:
        """A valid swap for simulated play, reshuffling dead boards."""
        pair = find_valid_swap(self.state.board, rng)
        if pair is None:
            reshuffle_preserving_counts(self.state.board)
            pair = find_valid_swap(self.state.board, rng)
            if pair is None:
                raise ContractError("reshuffled board still has no valid swap")
        return SwapCommand(pair[0], pair[1])
