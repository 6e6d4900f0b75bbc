"""Screening-tomosynthesis analysis toolkit.

Library + CLI covering the downstream stack of a frozen-backbone imaging
pipeline: token aggregation into study features, linear probes for
breast-density and 5-year risk, anchor-based lesion-detection machinery
with FROC evaluation, paired-model statistics, and streaming ingest with
a rotating local cache.  Synthetic phantoms and embeddings make the whole
stack verifiable end-to-end at desk scale.
"""

__version__ = "0.1.0"

from . import density, detect, embeddings, ingest, risk, stats, studies, train  # noqa: F401
from .embeddings import AggregationMode, EmbeddingStore, TokenGrid
from .studies import DensityCategory, Exam, ViewKind, VolumeRef

__all__ = [
    "AggregationMode",
    "DensityCategory",
    "EmbeddingStore",
    "Exam",
    "TokenGrid",
    "ViewKind",
    "VolumeRef",
    "__version__",
]
