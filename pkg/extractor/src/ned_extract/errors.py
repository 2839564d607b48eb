"""Exception taxonomy for the extraction adapter.

Every error raised by library code derives from ExtractError so callers
(and the CLI) can catch one base class and map it to a nonzero exit code.
Schema problems in a job or transcript manifest raise ExtractError itself;
the subclasses mark conditions a caller may want to handle individually.
"""

from __future__ import annotations


class ExtractError(Exception):
    """Base class for all adapter errors."""


class ModelUnavailable(ExtractError):
    """The requested embedding provider cannot run in this environment.

    Raised when the provider's framework is not installed or when no
    checkpoint is configured for a provider that needs one.
    """


class EmptyText(ExtractError):
    """A text-embedding family met a unit with missing or blank text.

    Messages include the offending session_id and 0-based unit index.
    """


class AudioDecodeError(ExtractError):
    """An audio-embedding family could not obtain decodable audio.

    Covers a missing audio path in the unit, a file that does not exist,
    and a file the WAV reader rejects.
    """
