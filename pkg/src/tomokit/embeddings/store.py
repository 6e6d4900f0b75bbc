"""On-disk embedding store: one binary tensor file per (patient, exam, view).

Files use the EMB1 tensor format; a sidecar index.json maps keys to
filenames.  Writes are atomic (temp file + rename), so one writer per key
and any number of concurrent readers are safe.

Token tensors are stored with shape (n_slices, 1 + n_patches, dim); row 0
of the middle axis is the CLS token, the rest are patch tokens.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from ..errors import MissingKey
from ..io.tensorfile import read_tensor, write_tensor
from ..studies import ViewKind, VolumeRef
from .tokens import TokenGrid

INDEX_NAME = "index.json"


def store_key(patient_id: str, exam_id: str, view: ViewKind | str) -> str:
    view = view.value if isinstance(view, ViewKind) else str(view)
    return f"{patient_id}/{exam_id}/{view}"


class EmbeddingStore:
    """Directory of tensors keyed by (patient_id, exam_id, view)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._defer_flush = False
        self._index: dict[str, str] = {}
        index_path = self.root / INDEX_NAME
        if index_path.exists():
            self._index = json.loads(index_path.read_text(encoding="utf-8"))

    @contextmanager
    def batch(self):
        """Defer index flushing across many writes; one flush at exit."""
        self._defer_flush = True
        try:
            yield self
        finally:
            self._defer_flush = False
            with self._lock:
                self._flush_index()

    def _flush_index(self) -> None:
        index_path = self.root / INDEX_NAME
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix="index", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(self._index, fh, sort_keys=True, indent=1)
        os.replace(tmp, index_path)

    def keys(self) -> list[str]:
        return sorted(self._index)

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def write(self, key: str, tensor: np.ndarray) -> Path:
        tensor = np.asarray(tensor)
        if not np.all(np.isfinite(tensor)):
            raise ValueError("tensor must be finite")
        name = hashlib.sha256(key.encode("utf-8")).hexdigest()[:24] + ".emb"
        path = self.root / name
        write_tensor(path, tensor)
        with self._lock:
            self._index[key] = name
            if not self._defer_flush:
                self._flush_index()
        return path

    def read(self, key: str) -> np.ndarray:
        with self._lock:
            name = self._index.get(key)
        if name is None:
            raise MissingKey(key)
        return read_tensor(self.root / name)

    # --- token-grid convenience ------------------------------------------

    def write_volume(self, ref: VolumeRef, slices: list[TokenGrid]) -> Path:
        stack = np.stack(
            [np.concatenate([g.cls[None, :], g.patches], axis=0) for g in slices]
        )
        return self.write(ref.key(), stack)

    def read_volume(self, key: str) -> list[TokenGrid]:
        stack = self.read(key).astype(np.float64)
        if stack.ndim != 3:
            raise MissingKey(f"{key} does not hold a token-grid tensor")
        return [TokenGrid(cls=sl[0], patches=sl[1:]) for sl in stack]
