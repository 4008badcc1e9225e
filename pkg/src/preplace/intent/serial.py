"""Binary model container: magic, versioned JSON header, raw float64 arrays.

Layout: b"IPMD" | uint32 header length (little endian) | header JSON (utf-8)
| parameter arrays, little-endian float64, row-major, in header order.
Round-trips are bit exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..grid import GridSpec
from .network import IntentModel

MAGIC = b"IPMD"


class ModelFormatError(ValueError):
    """File is not a valid model container or declares an unknown version."""


def save_model(model: IntentModel, path: str | Path) -> None:
    header = model.header()
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name in model.PARAM_ORDER:
            arr = np.ascontiguousarray(model.params[name], dtype="<f8")
            f.write(arr.tobytes())


def load_model(path: str | Path) -> IntentModel:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise ModelFormatError(f"bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", f.read(4))
        try:
            header = json.loads(f.read(hlen).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ModelFormatError(f"unreadable header: {e}") from e
        if header.get("format_version") != IntentModel.VERSION:
            raise ModelFormatError(
                f"unsupported format version {header.get('format_version')!r}"
            )
        declared = [p["name"] for p in header["params"]]
        if declared != list(IntentModel.PARAM_ORDER):
            raise ModelFormatError("parameter list does not match this format")
        params: dict[str, np.ndarray] = {}
        for spec in header["params"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = f.read(count * 8)
            if len(raw) != count * 8:
                raise ModelFormatError(f"truncated array {spec['name']}")
            params[spec["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        if f.read(1):
            raise ModelFormatError("trailing bytes after declared arrays")
    g = header["grid"]
    grid = GridSpec(g["n"], g["m"], g["cell_size"], tuple(g["origin"]))
    return IntentModel(
        grid,
        input_dim=header["input_dim"],
        hidden_dim=header["hidden_dim"],
        channels=header["channels"],
        out_channels=header["out_channels"],
        params=params,
    )
