"""Bounded rotating disk cache with least-recently-used eviction.

Items live as root_dir/<sha256(key)>.bin next to an index.json recording
sizes and last-access counters.  After any operation the total resident
size is at most capacity_bytes, evicting in LRU order; an item larger
than the whole capacity raises CapacityError.  All public methods are
thread-safe.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..errors import CapacityError

INDEX_NAME = "index.json"
MAX_PREFETCH_DEPTH = 64


@dataclass
class CacheConfig:
    capacity_bytes: int
    root_dir: Path | str
    prefetch_depth: int = 0

    def __post_init__(self):
        if self.capacity_bytes <= 0:
            raise ValueError("capacity_bytes must be positive")
        if not 0 <= self.prefetch_depth <= MAX_PREFETCH_DEPTH:
            raise ValueError(f"prefetch_depth must lie in [0, {MAX_PREFETCH_DEPTH}]")
        self.root_dir = Path(self.root_dir)


@dataclass
class _Entry:
    file: str
    size: int
    last_access: int


class RotatingDiskCache:
    def __init__(self, config: CacheConfig):
        self.config = config
        self.root = Path(config.root_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._counter = 0
        self._entries: dict[str, _Entry] = {}
        self._load_index()

    # --- index persistence -------------------------------------------------

    def _load_index(self) -> None:
        path = self.root / INDEX_NAME
        if not path.exists():
            return
        doc = json.loads(path.read_text(encoding="utf-8"))
        self._counter = doc.get("counter", 0)
        self._entries = {
            k: _Entry(file=v["file"], size=v["size"], last_access=v["last_access"])
            for k, v in doc.get("entries", {}).items()
        }

    def _flush_index(self) -> None:
        doc = {
            "counter": self._counter,
            "entries": {
                k: {"file": e.file, "size": e.size, "last_access": e.last_access}
                for k, e in self._entries.items()
            },
        }
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix="index", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True)
        os.replace(tmp, self.root / INDEX_NAME)

    # --- public API -----------------------------------------------------------

    def resident_keys(self) -> set[str]:
        with self._lock:
            return set(self._entries)

    def total_bytes(self) -> int:
        with self._lock:
            return sum(e.size for e in self._entries.values())

    def get_or_fetch(self, key: str, fetch: Callable[[], bytes]) -> Path:
        """Path to a complete local copy, fetching and evicting as needed."""
        with self._lock:
            entry = self._entries.get(key)
            if entry is not None:
                self._counter += 1
                entry.last_access = self._counter
                self._flush_index()
                return self.root / entry.file

        blob = fetch()
        if len(blob) > self.config.capacity_bytes:
            raise CapacityError(
                f"item of {len(blob)} bytes exceeds capacity {self.config.capacity_bytes}"
            )
        name = hashlib.sha256(key.encode("utf-8")).hexdigest() + ".bin"
        with self._lock:
            # lost race: someone else fetched while we were downloading
            entry = self._entries.get(key)
            if entry is not None:
                self._counter += 1
                entry.last_access = self._counter
                self._flush_index()
                return self.root / entry.file
            fd, tmp = tempfile.mkstemp(dir=self.root, prefix=name, suffix=".tmp")
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp, self.root / name)
            self._counter += 1
            self._entries[key] = _Entry(file=name, size=len(blob), last_access=self._counter)
            self._evict_locked()
            self._flush_index()
            return self.root / name

    def _evict_locked(self) -> None:
        total = sum(e.size for e in self._entries.values())
        while total > self.config.capacity_bytes:
            victim = min(self._entries, key=lambda k: self._entries[k].last_access)
            entry = self._entries.pop(victim)
            total -= entry.size
            try:
                os.unlink(self.root / entry.file)
            except FileNotFoundError:
                pass
