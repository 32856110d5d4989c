"""Byte-mode payload encoding and decoding for 29x29 quiet-zoned symbols."""

from __future__ import annotations

import numpy as np

from ofqr.errors import (
    FormatInfoInvalid,
    NonAsciiByte,
    PayloadTooLong,
    StructureInvalid,
    Uncorrectable,
    WrongLength,
)
from ofqr.qr import symbol
from ofqr.qr.rs import N_DATA, N_TOTAL, rs_decode, rs_encode

MAX_PAYLOAD = 14
MODE_BYTE = 0b0100
PAD_BYTES = (0xEC, 0x11)
# fraction of finder/timing modules allowed to disagree before giving up
STRUCTURE_TOLERANCE = 0.2


def _payload_bytes(payload: str | bytes) -> bytes:
    raw = payload.encode("latin-1", errors="replace") if isinstance(payload, str) else bytes(payload)
    if isinstance(payload, str) and any(ord(ch) > 0xFF for ch in payload):
        raise NonAsciiByte("payload contains non-ASCII characters")
    if not raw:
        raise PayloadTooLong("payload must contain at least one byte")
    if len(raw) > MAX_PAYLOAD:
        raise PayloadTooLong(f"payload has {len(raw)} bytes; version 1-M holds {MAX_PAYLOAD}")
    bad = [b for b in raw if not 0x20 <= b <= 0x7E]
    if bad:
        raise NonAsciiByte(f"byte 0x{bad[0]:02X} is outside printable ASCII")
    return raw


def data_codewords(payload: str | bytes) -> bytes:
    """Mode indicator, 8-bit count, payload, terminator and pad bytes."""
    raw = _payload_bytes(payload)
    bits = [(MODE_BYTE >> (3 - i)) & 1 for i in range(4)]
    bits += [(len(raw) >> (7 - i)) & 1 for i in range(8)]
    for b in raw:
        bits += [(b >> (7 - i)) & 1 for i in range(8)]
    capacity = 8 * N_DATA
    bits += [0] * min(4, capacity - len(bits))
    bits += [0] * (-len(bits) % 8)
    out = bytearray(
        sum(bit << (7 - i) for i, bit in enumerate(bits[k : k + 8]))
        for k in range(0, len(bits), 8)
    )
    k = 0
    while len(out) < N_DATA:
        out.append(PAD_BYTES[k % 2])
        k += 1
    return bytes(out)


def _codeword_bits(codewords: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(codewords, dtype=np.uint8)).astype(bool)


def build_symbol(codewords: bytes, mask_id: int) -> np.ndarray:
    """Place 26 codewords with the given mask into a 21x21 grid."""
    grid = symbol.FUNCTION_MODULES.copy()
    grid[symbol.DATA_ROWS, symbol.DATA_COLS] = _codeword_bits(codewords)
    mask = symbol.mask_pattern(mask_id) & ~symbol.IS_FUNCTION
    grid ^= mask
    symbol.draw_format(grid, mask_id)
    return grid


def encode_symbol(payload: str | bytes) -> tuple[np.ndarray, int]:
    """Return the 21x21 grid and the chosen mask id."""
    data = data_codewords(payload)
    codewords = data + rs_encode(data)
    best = None
    for mask_id in range(8):
        grid = build_symbol(codewords, mask_id)
        score = symbol.penalty_score(grid)
        if best is None or score < best[0]:
            best = (score, mask_id, grid)
    return best[2], best[1]


def add_quiet_zone(grid: np.ndarray) -> np.ndarray:
    return np.pad(np.asarray(grid, dtype=bool), symbol.QUIET, constant_values=False)


def strip_quiet_zone(grid: np.ndarray) -> np.ndarray:
    q = symbol.QUIET
    return np.asarray(grid, dtype=bool)[q:-q, q:-q]


def encode(payload: str | bytes) -> np.ndarray:
    """Encode a payload into a 29x29 boolean grid (True = dark)."""
    return add_quiet_zone(encode_symbol(payload)[0])


def _check_structure(grid: np.ndarray) -> None:
    fixed = symbol.IS_FUNCTION.copy()
    first, second = symbol.format_positions()
    for pos in first + second:
        fixed[pos] = False
    fixed[symbol.DARK_MODULE] = False
    wrong = np.count_nonzero(grid[fixed] != symbol.FUNCTION_MODULES[fixed])
    if wrong > STRUCTURE_TOLERANCE * np.count_nonzero(fixed):
        raise StructureInvalid(f"{wrong} finder/timing modules do not match")


def _read_mask(grid: np.ndarray) -> int:
    # only level-M words are candidates: this codec never emits other levels
    best = None
    for raw in symbol.read_format(grid):
        for mask_id in range(8):
            dist = bin(symbol.format_bits(mask_id) ^ raw).count("1")
            if dist <= 3 and (best is None or dist < best[0]):
                best = (dist, mask_id)
    if best is None:
        raise FormatInfoInvalid("neither format copy is within BCH distance 3 of a level-M word")
    return best[1]


def read_codewords(grid: np.ndarray) -> tuple[bytes, int]:
    """Unmask and read the 26 raw codewords of a 21x21 grid."""
    mask_id = _read_mask(grid)
    unmasked = grid ^ (symbol.mask_pattern(mask_id) & ~symbol.IS_FUNCTION)
    bits = unmasked[symbol.DATA_ROWS, symbol.DATA_COLS]
    return np.packbits(bits.astype(np.uint8)).tobytes(), mask_id


def decode(grid: np.ndarray, return_corrections: bool = False):
    """Decode a 29x29 quiet-zoned grid back to its payload string."""
    grid = np.asarray(grid, dtype=bool)
    if grid.shape != (symbol.FULL, symbol.FULL):
        raise WrongLength(f"expected a {symbol.FULL}x{symbol.FULL} grid, got {grid.shape}")
    core = strip_quiet_zone(grid)
    _check_structure(core)
    codewords, _ = read_codewords(core)
    assert len(codewords) == N_TOTAL
    data, corrections = rs_decode(codewords)
    bits = _codeword_bits(data)
    mode = int("".join("1" if b else "0" for b in bits[:4]), 2)
    if mode != MODE_BYTE:
        raise Uncorrectable(f"unsupported mode indicator {mode:04b}")
    count = int(np.packbits(bits[4:12].astype(np.uint8))[0])
    if count == 0 or count > MAX_PAYLOAD:
        raise Uncorrectable(f"character count {count} out of range")
    body = np.packbits(bits[12 : 12 + 8 * count].astype(np.uint8)).tobytes()
    if any(not 0x20 <= b <= 0x7E for b in body):
        raise Uncorrectable("decoded bytes are not printable ASCII")
    text = body.decode("ascii")
    return (text, corrections) if return_corrections else text
