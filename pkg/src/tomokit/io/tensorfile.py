"""Binary tensor file format used by the embedding store and checkpoints.

Layout (all little-endian):

    magic   4 bytes  b"EMB1"
    version u16      1
    rank    u16
    dims    rank x u32
    payload prod(dims) x f32

Readers reject anything whose header is inconsistent with the payload
length.  Writes go through a temp file plus atomic rename so concurrent
readers never observe a partial file.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..errors import CorruptHeader

MAGIC = b"EMB1"
VERSION = 1


def tensor_bytes(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr, dtype="<f4")
    header = MAGIC + struct.pack("<HH", VERSION, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + arr.tobytes()


def tensor_from_bytes(buf: bytes) -> np.ndarray:
    if len(buf) < 8 or buf[:4] != MAGIC:
        raise CorruptHeader("bad magic")
    version, rank = struct.unpack_from("<HH", buf, 4)
    if version != VERSION:
        raise CorruptHeader(f"unsupported version {version}")
    head_end = 8 + 4 * rank
    if len(buf) < head_end:
        raise CorruptHeader("truncated dims")
    dims = struct.unpack_from(f"<{rank}I", buf, 8)
    expected = int(np.prod(dims, dtype=np.int64)) * 4 if rank else 4
    if rank == 0:
        dims = ()
        expected = 4
    if len(buf) - head_end != expected:
        raise CorruptHeader(
            f"payload length {len(buf) - head_end} != expected {expected} for dims {dims}"
        )
    flat = np.frombuffer(buf, dtype="<f4", offset=head_end)
    return flat.reshape(dims).copy()


def write_tensor(path: str | Path, arr: np.ndarray) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(tensor_bytes(arr))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_tensor(path: str | Path) -> np.ndarray:
    return tensor_from_bytes(Path(path).read_bytes())
