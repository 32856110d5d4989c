"""File formats: OFT1 tensors, PGM images, JSON helpers."""

from __future__ import annotations

import hashlib
import io
import json
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from ofqr.errors import FormatError

OFT_MAGIC = b"OFT1"
_DTYPE_CODES = {np.dtype("<f4"): 1, np.dtype("<f8"): 2}
_CODE_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}


def write_tensor_to(fh: BinaryIO, array: np.ndarray) -> None:
    arr = np.asarray(array)
    if arr.dtype == np.float32:
        arr = arr.astype("<f4", copy=False)
    else:
        arr = arr.astype("<f8", copy=False)
    if arr.ndim > 255:
        raise FormatError("rank exceeds 255")
    fh.write(OFT_MAGIC)
    fh.write(struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(np.ascontiguousarray(arr).tobytes())


def read_tensor_from(fh: BinaryIO) -> np.ndarray:
    magic = fh.read(4)
    if magic != OFT_MAGIC:
        raise FormatError(f"bad tensor magic {magic!r}")
    head = fh.read(2)
    if len(head) != 2:
        raise FormatError("truncated tensor header")
    code, rank = struct.unpack("<BB", head)
    if code not in _CODE_DTYPES:
        raise FormatError(f"unknown dtype code {code}")
    dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
    dtype = _CODE_DTYPES[code]
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    buf = fh.read(count * dtype.itemsize)
    if len(buf) != count * dtype.itemsize:
        raise FormatError("truncated tensor payload")
    return np.frombuffer(buf, dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))


def save_tensor(path, array: np.ndarray) -> None:
    buf = io.BytesIO()
    write_tensor_to(buf, array)
    Path(path).write_bytes(buf.getvalue())


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_tensor_from(fh)


def save_pgm(path, image: np.ndarray, maxval: int = 65535) -> None:
    """Write a grayscale image with values in [0, 1] as binary PGM."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    if img.ndim != 2:
        raise FormatError("PGM images must be 2-D")
    levels = np.rint(img * maxval)
    if maxval > 255:
        data = levels.astype(">u2").tobytes()
    else:
        data = levels.astype(np.uint8).tobytes()
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + data)


def _pgm_tokens(raw: bytes, count: int) -> tuple[list[int], int]:
    tokens: list[int] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(int(raw[start:pos]) if tokens else raw[start:pos])
    return tokens, pos + 1


def load_pgm(path) -> np.ndarray:
    """Read a binary PGM; returns floats in [0, 1]."""
    raw = Path(path).read_bytes()
    if raw[:2] != b"P5":
        raise FormatError("only binary (P5) PGM is supported")
    (magic, w, h, maxval), start = _pgm_tokens(raw, 4)
    dtype = ">u2" if maxval > 255 else np.uint8
    data = np.frombuffer(raw, dtype=dtype, count=w * h, offset=start)
    return data.reshape(h, w).astype(np.float64) / maxval


def save_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
