"""Binary tensor files used for latent dumps.

Layout (little-endian):

    bytes 0..3   magic ``LHT1``
    byte  4      dtype code (0 = float32)
    byte  5      rank
    6..          rank * uint32 dims
    then         row-major little-endian payload

The format is intentionally trivial so other tooling can parse it with a
couple of lines of code.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import ValidationError

MAGIC = b"LHT1"
_DTYPE_F32 = 0


def save_tensor(path: str | os.PathLike, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    if arr.ndim == 0 or arr.ndim > 8:
        raise ValidationError(f"rank must be in 1..8, got {arr.ndim}")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<BB", _DTYPE_F32, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(arr.tobytes(order="C"))


def load_tensor(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        head = f.read(6)
        if len(head) < 6 or head[:4] != MAGIC:
            raise ValidationError(f"not a tensor file: {path}")
        dtype_code, rank = struct.unpack("<BB", head[4:6])
        if dtype_code != _DTYPE_F32:
            raise ValidationError(f"unsupported dtype code {dtype_code} in {path}")
        dims = struct.unpack(f"<{rank}I", f.read(4 * rank))
        payload = f.read()
    expected = int(np.prod(dims)) * 4
    if len(payload) != expected:
        raise ValidationError(
            f"truncated tensor file {path}: expected {expected} payload bytes, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
