"""Deterministic, atomic JSON artifact writing.

Artifacts aim to be byte-identical for identical inputs: keys are sorted,
floats use repr, and nothing environmental (timestamps, hostnames) is
ever written by these helpers.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1)


def write_json(path: str | Path, obj) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(dumps(obj))
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: str | Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
