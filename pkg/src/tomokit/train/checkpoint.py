"""Checkpoint container: JSON header followed by named tensor blocks.

File layout:

    u32 header length
    header JSON (utf-8): {"dims": {...}, "step": int, "hyperparams": {...},
                          "tensors": [names in block order]}
    one EMB1 tensor block per name, in order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CorruptHeader
from ..io.tensorfile import tensor_bytes, tensor_from_bytes


def save_checkpoint(
    path: str | Path,
    tensors: dict[str, np.ndarray],
    step: int = 0,
    hyperparams: dict | None = None,
) -> None:
    names = sorted(tensors)
    header = {
        "dims": {k: list(np.asarray(tensors[k]).shape) for k in names},
        "step": step,
        "hyperparams": hyperparams or {},
        "tensors": names,
    }
    head_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = struct.pack("<I", len(head_bytes)) + head_bytes
    for k in names:
        blob += tensor_bytes(np.asarray(tensors[k]))
    Path(path).write_bytes(blob)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    buf = Path(path).read_bytes()
    if len(buf) < 4:
        raise CorruptHeader("truncated checkpoint")
    (hlen,) = struct.unpack_from("<I", buf, 0)
    if len(buf) < 4 + hlen:
        raise CorruptHeader("truncated checkpoint header")
    header = json.loads(buf[4 : 4 + hlen].decode("utf-8"))
    offset = 4 + hlen
    tensors: dict[str, np.ndarray] = {}
    for name in header["tensors"]:
        dims = header["dims"][name]
        block_len = 8 + 4 * len(dims) + 4 * int(np.prod(dims, dtype=np.int64))
        tensors[name] = tensor_from_bytes(buf[offset : offset + block_len]).astype(np.float64)
        offset += block_len
    return tensors, header
