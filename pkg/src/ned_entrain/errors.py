"""Exception taxonomy shared across the package.

Every error raised by library code derives from NedError so callers (and the
CLI) can catch one base class and map it to a nonzero exit code.
"""

from __future__ import annotations


class NedError(Exception):
    """Base class for all package errors."""


class MissingFile(NedError):
    """A manifest or a file referenced by a manifest does not exist."""


class SchemaViolation(NedError):
    """A manifest or session record violates the documented schema.

    Messages include the offending session_id and, for line-oriented files,
    the 1-based line number.
    """


class DimensionMismatch(NedError):
    """Feature vectors or tensors disagree on dimensionality."""


class EmptyResult(NedError):
    """An operation that must produce at least one item produced none."""


class InsufficientUnits(NedError):
    """A sampling request asked for more candidate units than exist."""


class EmptyFrames(NedError):
    """A frame matrix has zero rows."""


class EmptyPairSet(NedError):
    """Training was requested on a PairSet with no pairs."""


class ShapeMismatch(NedError):
    """Matrix or vector shapes are incompatible for the requested op."""


class StaleCache(NedError):
    """Backward pass received a cache from a non-TRAIN forward pass."""


class ZeroVector(NedError):
    """Cosine similarity requested against a zero-norm vector."""


class InvalidSpec(NedError):
    """A generator or model specification violates its invariants."""


class TooFewSessions(NedError):
    """A corpus has fewer sessions than the requested fold count."""
