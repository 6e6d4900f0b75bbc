"""Study feature assembly from a populated embedding store."""

from __future__ import annotations

import numpy as np

from .embeddings.store import EmbeddingStore, store_key
from .embeddings.tokens import AggregationMode, aggregate_view, assemble_study
from .errors import MissingKey
from .studies import Exam, ViewKind


def study_features(
    store: EmbeddingStore, patient_id: str, exam_id: str, mode: AggregationMode
) -> np.ndarray:
    """Aggregated, view-concatenated feature vector for one exam."""
    per_view = {}
    for view in ViewKind:
        grids = store.read_volume(store_key(patient_id, exam_id, view))
        per_view[view] = aggregate_view(grids, mode)
    return assemble_study(per_view)


def dataset_features(
    store: EmbeddingStore, exams: list[Exam], mode: AggregationMode
) -> tuple[np.ndarray, list[Exam]]:
    """Feature matrix for every exam whose four views are in the store.

    Returns (X, kept_exams) with rows aligned; exams with missing volumes
    are skipped.
    """
    rows = []
    kept = []
    for exam in exams:
        try:
            rows.append(study_features(store, exam.patient_id, exam.exam_id, mode))
        except MissingKey:
            continue
        kept.append(exam)
    if not rows:
        return np.zeros((0, 0)), []
    return np.stack(rows), kept
