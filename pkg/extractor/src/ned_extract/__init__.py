"""Extraction adapter: transcripts in, canonical entrainment corpora out.

Embeds conversation units (text, or audio for the TRILL family) into
fixed-size vectors and writes the manifest + JSON Lines corpus format the
entrainment toolkit consumes. The adapter is a pure producer: it never
computes entrainment distances and never trains models, and it depends on
the core toolkit only through the on-disk formats and the `ned-entrain`
validator executable.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    AudioDecodeError,
    EmptyText,
    ExtractError,
    ModelUnavailable,
)
from .extract import (
    ExtractionJob,
    ExtractResult,
    extract,
    load_job,
    load_transcripts,
    parse_job,
)
from .providers import (
    EmbeddingFamily,
    HashProvider,
    PretrainedProvider,
    make_provider,
)

__all__ = [
    "AudioDecodeError",
    "EmbeddingFamily",
    "EmptyText",
    "ExtractError",
    "ExtractResult",
    "ExtractionJob",
    "HashProvider",
    "ModelUnavailable",
    "PretrainedProvider",
    "__version__",
    "extract",
    "load_job",
    "load_transcripts",
    "make_provider",
    "parse_job",
]
