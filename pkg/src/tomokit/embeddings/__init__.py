from .store import EmbeddingStore, store_key
from .synthetic import SignalSpec, patch_descriptor_grid, synthesize_embeddings, volume_token_grids
from .tokens import (
    CANONICAL_DIM,
    CANONICAL_GRID,
    CANONICAL_PATCHES,
    AggregationMode,
    TokenGrid,
    aggregate_view,
    assemble_study,
)

__all__ = [
    "AggregationMode",
    "CANONICAL_DIM",
    "CANONICAL_GRID",
    "CANONICAL_PATCHES",
    "EmbeddingStore",
    "SignalSpec",
    "TokenGrid",
    "aggregate_view",
    "assemble_study",
    "patch_descriptor_grid",
    "store_key",
    "synthesize_embeddings",
    "volume_token_grids",
]
