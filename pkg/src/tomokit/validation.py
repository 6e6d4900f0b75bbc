"""Small input-validation helpers used at public API boundaries."""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch, EmptyInput


def as_float_array(x, name: str = "array") -> np.ndarray:
    """Convert to a float64 ndarray and require all entries finite."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_vector(x, name: str = "vector", dim: int | None = None) -> np.ndarray:
    arr = as_float_array(x, name)
    if arr.ndim != 1:
        raise DimMismatch(f"{name} must be 1-d, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimMismatch(f"{name} must have length {dim}, got {arr.shape[0]}")
    return arr


def check_matrix(x, name: str = "matrix", cols: int | None = None) -> np.ndarray:
    arr = as_float_array(x, name)
    if arr.ndim != 2:
        raise DimMismatch(f"{name} must be 2-d, got shape {arr.shape}")
    if cols is not None and arr.shape[1] != cols:
        raise DimMismatch(f"{name} must have {cols} columns, got {arr.shape[1]}")
    return arr


def check_nonempty(seq, name: str = "input"):
    if len(seq) == 0:
        raise EmptyInput(f"{name} must not be empty")
    return seq


def check_same_length(a, b, name_a: str = "a", name_b: str = "b") -> None:
    if len(a) != len(b):
        raise DimMismatch(
            f"{name_a} and {name_b} must have equal length ({len(a)} vs {len(b)})"
        )
