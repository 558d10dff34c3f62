"""Board state, match detection, gravity, and refill.

Swaps are allowed between ANY two cells, not just neighbours, so search
helpers enumerate unordered cell pairs rather than adjacent pairs.
"""

from __future__ import annotations

import random
from typing import Iterator, Optional

from gemmind.errors import ConfigError
from gemmind.game.config import GameConfig

Cell = tuple[int, int]


class Board:
    """A rows x cols grid of gem kinds plus the RNG that refills it."""

    __slots__ = ("rows", "cols", "kinds", "cells", "rng")

    def __init__(self, rows: int, cols: int, kinds: int, cells: list[list[int]],
                 rng: random.Random):
        self.rows = rows
        self.cols = cols
        self.kinds = kinds
        self.cells = cells
        self.rng = rng

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.rows and 0 <= c < self.cols

    def copy(self) -> "Board":
        rng = random.Random()
        rng.setstate(self.rng.getstate())
        return Board(self.rows, self.cols, self.kinds,
                     [row[:] for row in self.cells], rng)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Board) and self.cells == other.cells
                and self.kinds == other.kinds)

    def __str__(self) -> str:
        return "\n".join(" ".join(str(k) for k in row) for row in self.cells)


def new_board(config: GameConfig, seed: int) -> Board:
    """Build a match-free board. Identical (config, seed) gives identical boards."""
    config.validate()
    rng = random.Random(seed)
    rows, cols, kinds = config.board_rows, config.board_cols, config.gem_kinds
    cells = [[0] * cols for _ in range(rows)]
    for r in range(rows):
        for c in range(cols):
            k = rng.randrange(kinds)
            # Re-roll until the new gem does not complete a run of 3 with
            # the already-filled cells above / to the left.
            while _completes_run(cells, r, c, k):
                k = rng.randrange(kinds)
            cells[r][c] = k
    return Board(rows, cols, kinds, cells, rng)


def _completes_run(cells: list[list[int]], r: int, c: int, k: int) -> bool:
    if c >= 2 and cells[r][c - 1] == k and cells[r][c - 2] == k:
        return True
    if r >= 2 and cells[r - 1][c] == k and cells[r - 2][c] == k:
        return True
    return False


def find_matches(board: Board) -> list[set[Cell]]:
    """All maximal horizontal/vertical runs of length >= 3.

    Runs of the same kind that share a cell (cross or L shapes) are merged
    into a single match set.
    """
    runs: list[set[Cell]] = []
    cells = board.cells
    for r in range(board.rows):
        c = 0
        while c < board.cols:
            k = cells[r][c]
            end = c + 1
            while end < board.cols and cells[r][end] == k:
                end += 1
            if end - c >= 3:
                runs.append({(r, cc) for cc in range(c, end)})
            c = end
    for c in range(board.cols):
        r = 0
        while r < board.rows:
            k = cells[r][c]
            end = r + 1
            while end < board.rows and cells[end][c] == k:
                end += 1
            if end - r >= 3:
                runs.append({(rr, c) for rr in range(r, end)})
            r = end
    return _merge_overlapping(runs)


def _merge_overlapping(runs: list[set[Cell]]) -> list[set[Cell]]:
    merged: list[set[Cell]] = []
    for run in runs:
        run = set(run)
        while True:
            hit = next((m for m in merged if m & run), None)
            if hit is None:
                break
            merged.remove(hit)
            run |= hit
        merged.append(run)
    merged.sort(key=lambda s: sorted(s))
    return merged


def apply_gravity_and_refill(board: Board, removed: set[Cell]) -> int:
    """Drop gems down each column and refill from the top via the board RNG.

    Returns the number of refilled cells (equals ``len(removed)``).
    Untouched columns are left bit-identical.
    """
    by_col: dict[int, set[int]] = {}
    for (r, c) in removed:
        by_col.setdefault(c, set()).add(r)
    for c, gone in sorted(by_col.items()):
        col = [board.cells[r][c] for r in range(board.rows) if r not in gone]
        fill = [board.rng.randrange(board.kinds) for _ in range(len(gone))]
        col = fill + col
        for r in range(board.rows):
            board.cells[r][c] = col[r]
    return len(removed)


def resolve_cascades(board: Board) -> list[list[set[Cell]]]:
    """Remove matches, refill, and repeat until stable.

    Returns one list of match sets per removal pass. Matches created by a
    refill are intentional cascade fuel and are never re-rolled away.
    """
    levels: list[list[set[Cell]]] = []
    while True:
        matches = find_matches(board)
        if not matches:
            return levels
        levels.append(matches)
        removed: set[Cell] = set()
        for m in matches:
            removed |= m
        apply_gravity_and_refill(board, removed)


def would_create_match(board: Board, a: Cell, b: Cell) -> bool:
    """True if swapping a and b yields at least one run of 3."""
    (ra, ca), (rb, cb) = a, b
    cells = board.cells
    ka, kb = cells[ra][ca], cells[rb][cb]
    if ka == kb:
        return False
    cells[ra][ca], cells[rb][cb] = kb, ka
    try:
        return _run_through(board, ra, ca) or _run_through(board, rb, cb)
    finally:
        cells[ra][ca], cells[rb][cb] = ka, kb


def _run_through(board: Board, r: int, c: int) -> bool:
    cells = board.cells
    k = cells[r][c]
    n = 1
    cc = c - 1
    while cc >= 0 and cells[r][cc] == k:
        n += 1
        cc -= 1
    cc = c + 1
    while cc < board.cols and cells[r][cc] == k:
        n += 1
        cc += 1
    if n >= 3:
        return True
    n = 1
    rr = r - 1
    while rr >= 0 and cells[rr][c] == k:
        n += 1
        rr -= 1
    rr = r + 1
    while rr < board.rows and cells[rr][c] == k:
        n += 1
        rr += 1
    return n >= 3


def iter_all_pairs(board: Board) -> Iterator[tuple[Cell, Cell]]:
    n = board.rows * board.cols
    for i in range(n):
        for j in range(i + 1, n):
            yield (divmod(i, board.cols), divmod(j, board.cols))


def find_valid_swap(board: Board, rng: random.Random,
                    max_probes: int = 400) -> Optional[tuple[Cell, Cell]]:
    """A uniformly random match-creating swap, or None if no swap matches.

    Rejection sampling keeps the per-move cost low on healthy boards; the
    exhaustive fallback only runs on (rare) dead boards.
    """
    n = board.rows * board.cols
    for _ in range(max_probes):
        i = rng.randrange(n)
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        a, b = divmod(i, board.cols), divmod(j, board.cols)
        if would_create_match(board, a, b):
            return (a, b)
    candidates = [p for p in iter_all_pairs(board) if would_create_match(board, *p)]
    if not candidates:
        return None
    return candidates[rng.randrange(len(candidates))]


def find_invalid_swap(board: Board, rng: random.Random,
                      max_probes: int = 400) -> tuple[Cell, Cell]:
    """A uniformly random swap of two different-kind gems that matches nothing.

    Used for injected moves, which must be visibly wrong.
    """
    n = board.rows * board.cols
    for _ in range(max_probes):
        i = rng.randrange(n)
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        a, b = divmod(i, board.cols), divmod(j, board.cols)
        if board.cells[a[0]][a[1]] == board.cells[b[0]][b[1]]:
            continue
        if not would_create_match(board, a, b):
            return (a, b)
    candidates = [
        (a, b) for a, b in iter_all_pairs(board)
        if board.cells[a[0]][a[1]] != board.cells[b[0]][b[1]]
        and not would_create_match(board, a, b)
    ]
    if not candidates:
        raise ConfigError("board admits no invalid swap; gem_kinds too small for its size")
    return candidates[rng.randrange(len(candidates))]


def reshuffle_preserving_counts(board: Board) -> None:
    """Permute the existing gems until the board is match-free and playable.

    Called when no swap on the board can create a match. Gem counts are
    preserved so the reshuffle is visibly a rearrangement, not a redeal.
    """
    flat = [k for row in board.cells for k in row]
    for _ in range(1000):
        board.rng.shuffle(flat)
        it = iter(flat)
        for r in range(board.rows):
            for c in range(board.cols):
                board.cells[r][c] = next(it)
        if find_matches(board):
            continue
        if any(would_create_match(board, a, b) for a, b in iter_all_pairs(board)):
            return
    raise ConfigError("could not reshuffle board into a playable position")
