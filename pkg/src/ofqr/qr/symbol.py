"""Version-1 QR symbol layout: function patterns, format bits, masks, penalty.

Grids are ``numpy`` boolean arrays indexed ``[row, col]`` with ``True`` for a
dark module.
"""

from __future__ import annotations

import numpy as np

SIZE = 21
QUIET = 4
FULL = SIZE + 2 * QUIET
ECC_BITS_M = 0b00
FORMAT_XOR = 0x5412
FORMAT_GEN = 0x537
DARK_MODULE = (4 * 1 + 9, 8)

_MASKS = (
    lambda r, c: (r + c) % 2 == 0,
    lambda r, c: r % 2 == 0,
    lambda r, c: c % 3 == 0,
    lambda r, c: (r + c) % 3 == 0,
    lambda r, c: (r // 2 + c // 3) % 2 == 0,
    lambda r, c: (r * c) % 2 + (r * c) % 3 == 0,
    lambda r, c: ((r * c) % 2 + (r * c) % 3) % 2 == 0,
    lambda r, c: ((r + c) % 2 + (r * c) % 3) % 2 == 0,
)


def _mask_table() -> tuple[np.ndarray, ...]:
    r, c = np.indices((SIZE, SIZE))
    out = []
    for fn in _MASKS:
        m = np.asarray(fn(r, c), dtype=bool)
        m.setflags(write=False)
        out.append(m)
    return tuple(out)


_MASK_TABLE = _mask_table()


def mask_pattern(mask_id: int) -> np.ndarray:
    """Read-only 21x21 boolean pattern (True = flip) for mask ``mask_id``."""
    return _MASK_TABLE[mask_id]


def _finder(grid: np.ndarray, row: int, col: int) -> None:
    for dr in range(-1, 8):
        for dc in range(-1, 8):
            r, c = row + dr, col + dc
            if not (0 <= r < SIZE and 0 <= c < SIZE):
                continue
            ring = max(abs(dr - 3), abs(dc - 3))
            grid[r, c] = ring != 2 and ring != 4


FINDER_ORIGINS = ((0, 0), (0, SIZE - 7), (SIZE - 7, 0))


def format_positions() -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Cell coordinates of format bit i (LSB first) for both copies."""
    first = [(i, 8) for i in range(6)] + [(7, 8), (8, 8), (8, 7)]
    first += [(8, 14 - i) for i in range(9, 15)]
    second = [(8, SIZE - 1 - i) for i in range(8)]
    second += [(SIZE - 15 + i, 8) for i in range(8, 15)]
    return first, second


def _build_function_template() -> tuple[np.ndarray, np.ndarray]:
    modules = np.zeros((SIZE, SIZE), dtype=bool)
    is_function = np.zeros((SIZE, SIZE), dtype=bool)
    for row, col in FINDER_ORIGINS:
        _finder(modules, row, col)
        r0, r1 = max(row - 1, 0), min(row + 8, SIZE)
        c0, c1 = max(col - 1, 0), min(col + 8, SIZE)
        is_function[r0:r1, c0:c1] = True
    for i in range(8, SIZE - 8):
        modules[6, i] = i % 2 == 0
        modules[i, 6] = i % 2 == 0
        is_function[6, i] = True
        is_function[i, 6] = True
    first, second = format_positions()
    for r, c in first + second:
        is_function[r, c] = True
    modules[DARK_MODULE] = True
    is_function[DARK_MODULE] = True
    return modules, is_function


FUNCTION_MODULES, IS_FUNCTION = _build_function_template()
FUNCTION_MODULES.flags.writeable = False
IS_FUNCTION.flags.writeable = False


def _data_order() -> list[tuple[int, int]]:
    order = []
    right = SIZE - 1
    while right >= 1:
        if right == 6:
            right = 5
        upward = ((right + 1) & 2) == 0
        for vert in range(SIZE):
            row = SIZE - 1 - vert if upward else vert
            for j in range(2):
                col = right - j
                if not IS_FUNCTION[row, col]:
                    order.append((row, col))
        right -= 2
    return order


# 208 cells in placement order; bit k belongs to codeword k // 8.
DATA_CELLS = _data_order()
DATA_ROWS = np.array([rc[0] for rc in DATA_CELLS])
DATA_COLS = np.array([rc[1] for rc in DATA_CELLS])


def format_bits(mask_id: int, ecc_bits: int = ECC_BITS_M) -> int:
    data = (ecc_bits << 3) | mask_id
    rem = data << 10
    for shift in range(14, 9, -1):
        if rem >> shift & 1:
            rem ^= FORMAT_GEN << (shift - 10)
    return ((data << 10) | rem) ^ FORMAT_XOR


VALID_FORMATS = {format_bits(m, e): (e, m) for e in range(4) for m in range(8)}


def draw_format(grid: np.ndarray, mask_id: int) -> None:
    bits = format_bits(mask_id)
    first, second = format_positions()
    for i in range(15):
        bit = bool(bits >> i & 1)
        grid[first[i]] = bit
        grid[second[i]] = bit


def read_format(grid: np.ndarray) -> tuple[int, int]:
    first, second = format_positions()
    return tuple(
        sum(int(grid[pos]) << i for i, pos in enumerate(copy))
        for copy in (first, second)
    )


_RULE3_WEIGHTS = 1 << np.arange(10, -1, -1, dtype=np.int64)
_RULE3_A = int(np.array([1, 0, 1, 1, 1, 0, 1, 0, 0, 0, 0]) @ _RULE3_WEIGHTS)
_RULE3_B = int(np.array([0, 0, 0, 0, 1, 0, 1, 1, 1, 0, 1]) @ _RULE3_WEIGHTS)


def penalty_score(grid: np.ndarray) -> int:
    """Sum of the four mask-evaluation penalty rules (N1=3, N2=3, N3=40, N4=10)."""
    g = np.asarray(grid, dtype=bool)
    n = g.shape[0]
    score = 0

    # rule 1: runs of >= 5 same-colour modules in a row or column score run - 2;
    # rows and columns are joined with a sentinel so runs never span two lines
    lines = np.concatenate([g, g.T]).astype(np.int8)
    flat = np.concatenate([lines, np.full((2 * n, 1), 2, np.int8)], axis=1).ravel()
    starts = np.flatnonzero(np.r_[True, flat[1:] != flat[:-1]])
    runs = np.diff(np.r_[starts, flat.size])
    score += int(np.sum(runs[runs >= 5] - 2))

    # rule 2: 2x2 blocks of one colour
    same = (g[:-1, :-1] == g[1:, :-1]) & (g[:-1, :-1] == g[:-1, 1:]) & (
        g[:-1, :-1] == g[1:, 1:]
    )
    score += 3 * int(same.sum())

    # rule 3: 1:1:3:1:1 finder-like pattern with 4 light modules on one side;
    # each 11-module window is packed into an integer and compared
    windows = np.lib.stride_tricks.sliding_window_view(lines, 11, axis=1)
    codes = windows.astype(np.int64) @ _RULE3_WEIGHTS
    score += 40 * int(np.count_nonzero((codes == _RULE3_A) | (codes == _RULE3_B)))

    # rule 4: dark proportion away from 50 %
    dark = int(g.sum())
    score += 10 * (abs(20 * dark - 10 * g.size) // g.size)
    return score
