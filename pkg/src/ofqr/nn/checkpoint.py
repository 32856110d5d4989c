"""Checkpoint container: ``OFCK`` magic, u16 version, u32-prefixed JSON header,
then one OFT1 tensor per parameter array in header order."""

from __future__ import annotations

import io as _io
import json
import struct
from pathlib import Path

import numpy as np

from ofqr.errors import FormatError, ShapeMismatch
from ofqr.io import read_tensor_from, write_tensor_to
from ofqr.nn.network import NetworkConfig, NetworkParams

MAGIC = b"OFCK"
VERSION = 1


def save(path, params: NetworkParams, config: NetworkConfig, header_extra: dict | None = None) -> None:
    order = [key for key, _ in params.arrays()]
    header = {"network_config": config.to_json(), "tensors": order, **(header_extra or {})}
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = _io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<HI", VERSION, len(blob)))
    buf.write(blob)
    for _, arr in params.arrays():
        write_tensor_to(buf, arr)
    Path(path).write_bytes(buf.getvalue())


def load(path) -> tuple[NetworkParams, NetworkConfig, dict]:
    """Read a checkpoint, checking every tensor against the header's layer plan."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise FormatError("not an OFCK checkpoint")
        version, length = struct.unpack("<HI", fh.read(6))
        if version != VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(length).decode("utf-8"))
        config = NetworkConfig.from_json(header["network_config"])
        k = config.kernel
        expected = {}
        for spec in config.layer_plan():
            expected[f"{spec.name}.w"] = (spec.cout, spec.cin, k, k)
            expected[f"{spec.name}.b"] = (spec.cout,)
        if list(header["tensors"]) != list(expected):
            raise ShapeMismatch("checkpoint tensor list does not match the layer plan")
        weights, biases = {}, {}
        for key in header["tensors"]:
            arr = read_tensor_from(fh).astype(np.float64)
            if arr.shape != expected[key]:
                raise ShapeMismatch(f"{key}: shape {arr.shape} != {expected[key]}")
            name, kind = key.rsplit(".", 1)
            (weights if kind == "w" else biases)[name] = arr
    return NetworkParams(weights, biases), config, header
