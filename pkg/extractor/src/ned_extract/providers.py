"""Embedding providers: one vector per unit, nothing else.

A provider maps a unit's payload (text, or a path to audio) to a fixed-size
float vector for one embedding family. Providers never train, never batch
across sessions, and never see the output format.

The default "hash" provider is a deterministic offline embedder: token
vectors are drawn from an RNG seeded by a digest of (family, token),
mean-pooled, and L2-normalized. Equal input yields bit-equal vectors on
every platform, which makes corpus builds reproducible end to end and
keeps the adapter installable without any ML framework.

The "pretrained" provider is the seam for real checkpoints. Which
checkpoint to load is configuration (the job's `checkpoint` field), not
code; when the backing framework is not importable, or no checkpoint is
configured, it raises ModelUnavailable so a caller can fall back or abort.
"""

from __future__ import annotations

import enum
import hashlib
import importlib.util
import wave
from pathlib import Path

import numpy as np

from .errors import AudioDecodeError, ExtractError, ModelUnavailable


class EmbeddingFamily(enum.Enum):
    """Embedding families the adapter can emit, named by feature set."""

    SENT768 = "SENT768"
    USE512 = "USE512"
    TRILL512 = "TRILL512"

    @property
    def dim(self) -> int:
        return _DIMS[self]

    @property
    def needs_audio(self) -> bool:
        return self is EmbeddingFamily.TRILL512


_DIMS = {
    EmbeddingFamily.SENT768: 768,
    EmbeddingFamily.USE512: 512,
    EmbeddingFamily.TRILL512: 512,
}

# Frameworks the pretrained provider requires, by family. Module names are
# looked up lazily so the table can be overridden in tests.
PRETRAINED_FRAMEWORKS = {
    EmbeddingFamily.SENT768: "sentence_transformers",
    EmbeddingFamily.USE512: "tensorflow_hub",
    EmbeddingFamily.TRILL512: "tensorflow_hub",
}


def _seeded_vector(payload: bytes, dim: int) -> np.ndarray:
    digest = hashlib.sha256(payload).digest()
    seed = int.from_bytes(digest[:8], "little")
    rng = np.random.default_rng(seed)
    return rng.standard_normal(dim)


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    # Gaussian draws cannot produce an all-zero vector in practice; guard
    # anyway so a pathological provider never emits NaN.
    if norm == 0.0:
        return vec
    return vec / norm


class HashProvider:
    """Deterministic offline embedder; see module docstring."""

    def __init__(self, family: EmbeddingFamily) -> None:
        self.family = family

    def embed_text(self, text: str) -> np.ndarray:
        tokens = text.split()
        if not tokens:
            raise ExtractError("embed_text called with blank text")
        acc = np.zeros(self.family.dim, dtype=np.float64)
        for token in tokens:
            payload = f"{self.family.value}\x00{token}".encode("utf-8")
            acc += _seeded_vector(payload, self.family.dim)
        return _normalize(acc / len(tokens))

    def embed_audio(self, path: Path) -> np.ndarray:
        try:
            with wave.open(str(path), "rb") as reader:
                params = reader.getparams()
                frames = reader.readframes(reader.getnframes())
        except FileNotFoundError:
            raise AudioDecodeError(f"audio file not found: {path}")
        except (wave.Error, EOFError) as exc:
            raise AudioDecodeError(f"cannot decode {path}: {exc}")
        header = (
            f"{self.family.value}\x00{params.nchannels}"
            f"\x00{params.sampwidth}\x00{params.framerate}\x00"
        ).encode("utf-8")
        return _normalize(_seeded_vector(header + frames, self.family.dim))


class PretrainedProvider:
    """Adapter around a real checkpoint, loaded lazily on first use."""

    def __init__(self, family: EmbeddingFamily, checkpoint: str | None) -> None:
        module_name = PRETRAINED_FRAMEWORKS[family]
        if importlib.util.find_spec(module_name) is None:
            raise ModelUnavailable(
                f"provider 'pretrained' needs {module_name} for"
                f" {family.value}; install it or use provider 'hash'"
            )
        if checkpoint is None:
            raise ModelUnavailable(
                "provider 'pretrained' needs a checkpoint; set"
                ' "checkpoint" in the job'
            )
        self.family = family
        self.checkpoint = checkpoint
        self._model = None

    def _load(self):
        if self._model is None:
            if self.family is EmbeddingFamily.SENT768:
                from sentence_transformers import SentenceTransformer

                self._model = SentenceTransformer(self.checkpoint)
            else:
                import tensorflow_hub as hub

                self._model = hub.load(self.checkpoint)
        return self._model

    def embed_text(self, text: str) -> np.ndarray:
        model = self._load()
        if self.family is EmbeddingFamily.SENT768:
            vec = model.encode([text], convert_to_numpy=True)[0]
        else:
            vec = np.asarray(model([text]))[0]
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.family.dim,):
            raise ExtractError(
                f"checkpoint {self.checkpoint} emitted shape {vec.shape},"
                f" expected ({self.family.dim},)"
            )
        return vec

    def embed_audio(self, path: Path) -> np.ndarray:
        model = self._load()
        try:
            with wave.open(str(path), "rb") as reader:
                rate = reader.getframerate()
                frames = reader.readframes(reader.getnframes())
        except FileNotFoundError:
            raise AudioDecodeError(f"audio file not found: {path}")
        except (wave.Error, EOFError) as exc:
            raise AudioDecodeError(f"cannot decode {path}: {exc}")
        samples = np.frombuffer(frames, dtype=np.int16).astype(np.float64)
        samples /= 32768.0
        vec = np.asarray(model(samples, sample_rate=rate)["embedding"])
        vec = np.asarray(vec, dtype=np.float64).reshape(-1)[: self.family.dim]
        if vec.shape != (self.family.dim,):
            raise ExtractError(
                f"checkpoint {self.checkpoint} emitted {vec.size} values,"
                f" expected {self.family.dim}"
            )
        return vec


PROVIDERS = {
    "hash": lambda family, checkpoint: HashProvider(family),
    "pretrained": PretrainedProvider,
}


def make_provider(name: str, family: EmbeddingFamily, checkpoint: str | None):
    try:
        factory = PROVIDERS[name]
    except KeyError:
        known = ", ".join(sorted(PROVIDERS))
        raise ExtractError(f"unknown provider {name!r} (known: {known})")
    return factory(family, checkpoint)
