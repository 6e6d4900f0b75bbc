"""Exception types shared across the toolkit.

Everything raised on purpose derives from :class:`TomoError` so callers
(and the CLI) can separate data problems from genuine bugs.
"""


class TomoError(Exception):
    """Base class for all toolkit errors."""


# --- shape / input problems -------------------------------------------------

class DimMismatch(TomoError, ValueError):
    """Operands disagree on a dimension that must match."""


class EmptyInput(TomoError, ValueError):
    """An operation received an empty collection where >= 1 item is required."""


class MissingView(TomoError, KeyError):
    """A required screening view is absent."""


# --- ingest -----------------------------------------------------------------

class AuthError(TomoError):
    """The remote endpoint rejected the bearer token."""


class PolicyError(TomoError):
    """Requested study is outside the configured allow-list."""


class TransportError(TomoError):
    """Retriable transport-level failure (connection error, 5xx)."""


class CapacityError(TomoError):
    """A single item does not fit into the cache capacity."""


class EmptyImage(TomoError, ValueError):
    """Pixel input has no usable content."""


class NoDensityMatch(TomoError):
    """No canonical density phrase found in report text."""


class AmbiguousDensity(TomoError):
    """Report text matches phrases from more than one density category."""


# --- embedding store ----------------------------------------------------------

class CorruptHeader(TomoError):
    """Tensor file magic/version/dims are inconsistent with the payload."""


class MissingKey(TomoError, KeyError):
    """Requested key is not present in the store."""


# --- training / evaluation ----------------------------------------------------

class EmptyClass(TomoError, ValueError):
    """A class required in the training split has no samples."""


class EmptyTestSet(TomoError, ValueError):
    """Evaluation requires at least one sample."""


class InvalidEventYear(TomoError, ValueError):
    """Event year must lie in 1..5 when an event is recorded."""


class UnusableRecord(TomoError, ValueError):
    """Censored record with < 1 year of follow-up observes no interval."""


class AllMasked(TomoError, ValueError):
    """Loss requires at least one unmasked time point."""


class DegenerateSplit(TomoError, ValueError):
    """Training requires both an event and a censored record."""


class SingleClass(TomoError, ValueError):
    """Score-based metric requires both classes present."""


class LengthMismatch(TomoError, ValueError):
    """Paired inputs must have equal length."""


# --- detection ----------------------------------------------------------------

class BadGrid(TomoError, ValueError):
    """Token grid does not have the native spatial layout."""


class DegenerateAnchor(TomoError, ValueError):
    """Anchor with non-positive width/height cannot encode a box."""


class NoVolumes(TomoError, ValueError):
    """FROC evaluation needs at least one volume."""


class NoAnnotations(TomoError, ValueError):
    """Detector training needs at least one annotated slice."""
