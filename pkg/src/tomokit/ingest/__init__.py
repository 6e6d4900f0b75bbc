from .cache import CacheConfig, RotatingDiskCache
from .client import (
    DicomWebClient,
    RemoteSource,
    RetryPolicy,
    fetch_volume_cached,
    series_uid_for,
    split_volume_blob,
    volume_blob,
    volume_cache_key,
)
from .phantom import (
    Phantom,
    PhantomDatasetConfig,
    PhantomSpec,
    generate_phantom,
    generate_phantom_dataset,
)
from .prefetch import Prefetcher
from .prep import PreparedSlice, bilinear_resize, minmax_normalize, prepare_slice
from .reports import parse_density_report

__all__ = [
    "CacheConfig",
    "DicomWebClient",
    "Phantom",
    "PhantomDatasetConfig",
    "PhantomSpec",
    "Prefetcher",
    "PreparedSlice",
    "RemoteSource",
    "RetryPolicy",
    "RotatingDiskCache",
    "bilinear_resize",
    "fetch_volume_cached",
    "generate_phantom",
    "generate_phantom_dataset",
    "minmax_normalize",
    "parse_density_report",
    "prepare_slice",
    "series_uid_for",
    "split_volume_blob",
    "volume_blob",
    "volume_cache_key",
]
