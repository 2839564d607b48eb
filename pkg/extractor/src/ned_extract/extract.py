"""Turn transcript manifests into canonical corpus files.

The adapter reads a transcript manifest (units with text and/or audio
paths, speaker labels, and timings), embeds every unit with the provider
the job names, and writes a corpus the downstream toolkit accepts as-is:
a JSON manifest plus one UTF-8 JSON Lines file per session, one record
per unit. Unit order and metadata pass through unchanged; the only thing
added is the feature vector. The adapter never trains and never scores;
verifying the result is the downstream validator's contract
(`ned-entrain validate --manifest <out>/manifest.json`).

Transcript manifest shape:

    {
      "corpus_name": str,
      "unit_kind": "IPU" | "TURN",        # optional, default "TURN"
      "sessions": [
        {
          "session_id": str,
          "interlocutor_kind": "HUMAN_HUMAN" | "HUMAN_MACHINE",  # optional
          "speakers": [str, str],
          "machine_speaker": str,          # optional; HUMAN_MACHINE only
          "units": [
            {
              "speaker": str,
              "start_s": number,
              "end_s": number,
              "text": str,                 # required for text families
              "audio": str,                # required for TRILL512; path
                                           # relative to this manifest
              "turn_index": int            # optional, default unit index
            }, ...
          ]
        }, ...
      ]
    }

Output bytes are a pure function of the job and the transcript contents,
so rerunning a job reproduces the corpus exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import AudioDecodeError, EmptyText, ExtractError
from .providers import EmbeddingFamily, PROVIDERS, make_provider

_UNIT_KINDS = ("IPU", "TURN")
_INTERLOCUTOR_KINDS = ("HUMAN_HUMAN", "HUMAN_MACHINE")


@dataclass(frozen=True)
class ExtractionJob:
    """One extraction request: what to read, how to embed, where to write."""

    input_manifest: Path
    family: EmbeddingFamily
    out_dir: Path
    provider: str = "hash"
    checkpoint: str | None = None


@dataclass(frozen=True)
class ExtractResult:
    manifest_path: Path
    sessions: int
    units: int


def parse_job(obj: object) -> ExtractionJob:
    """Build an ExtractionJob from a decoded job object, strictly."""

    if not isinstance(obj, dict):
        raise ExtractError("job must be a JSON object")
    known = {"input_manifest", "family", "out_dir", "provider", "checkpoint"}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ExtractError(f"unknown job keys: {unknown}")
    missing = sorted(k for k in ("input_manifest", "family", "out_dir") if k not in obj)
    if missing:
        raise ExtractError(f"missing job keys: {missing}")
    for key in ("input_manifest", "out_dir"):
        if not isinstance(obj[key], str) or not obj[key]:
            raise ExtractError(f"job key {key!r} must be a non-empty string")
    try:
        family = EmbeddingFamily(obj["family"])
    except ValueError:
        names = ", ".join(f.value for f in EmbeddingFamily)
        raise ExtractError(f"unknown family {obj['family']!r} (known: {names})")
    provider = obj.get("provider", "hash")
    if provider not in PROVIDERS:
        known_providers = ", ".join(sorted(PROVIDERS))
        raise ExtractError(
            f"unknown provider {provider!r} (known: {known_providers})"
        )
    checkpoint = obj.get("checkpoint")
    if checkpoint is not None and not isinstance(checkpoint, str):
        raise ExtractError('job key "checkpoint" must be a string or null')
    return ExtractionJob(
        input_manifest=Path(obj["input_manifest"]),
        family=family,
        out_dir=Path(obj["out_dir"]),
        provider=provider,
        checkpoint=checkpoint,
    )


def load_job(path: Path) -> ExtractionJob:
    """Read a job JSON file; relative paths resolve against its directory."""

    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ExtractError(f"job file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ExtractError(f"{path}: invalid JSON ({exc.msg})")
    job = parse_job(obj)
    base = path.parent
    return ExtractionJob(
        input_manifest=_resolve(base, job.input_manifest),
        family=job.family,
        out_dir=_resolve(base, job.out_dir),
        provider=job.provider,
        checkpoint=job.checkpoint,
    )


def _resolve(base: Path, path: Path) -> Path:
    return path if path.is_absolute() else base / path


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ExtractError(message)


def load_transcripts(path: Path) -> dict:
    """Read and validate a transcript manifest; returns the decoded object."""

    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ExtractError(f"transcript manifest not found: {path}")
    except json.JSONDecodeError as exc:
        raise ExtractError(f"{path}: invalid JSON ({exc.msg})")
    _require(isinstance(obj, dict), f"{path}: manifest must be a JSON object")
    known = {"corpus_name", "unit_kind", "sessions"}
    unknown = sorted(set(obj) - known)
    _require(not unknown, f"{path}: unknown manifest keys: {unknown}")
    name = obj.get("corpus_name")
    _require(
        isinstance(name, str) and bool(name),
        f"{path}: corpus_name must be a non-empty string",
    )
    kind = obj.get("unit_kind", "TURN")
    _require(
        kind in _UNIT_KINDS,
        f"{path}: unit_kind must be one of {_UNIT_KINDS}, got {kind!r}",
    )
    sessions = obj.get("sessions")
    _require(
        isinstance(sessions, list) and bool(sessions),
        f"{path}: sessions must be a non-empty list",
    )
    seen_ids: set[str] = set()
    for pos, session in enumerate(sessions):
        where = f"{path}: sessions[{pos}]"
        _require(isinstance(session, dict), f"{where} must be a JSON object")
        s_known = {
            "session_id",
            "interlocutor_kind",
            "speakers",
            "machine_speaker",
            "units",
        }
        s_unknown = sorted(set(session) - s_known)
        _require(not s_unknown, f"{where}: unknown keys: {s_unknown}")
        sid = session.get("session_id")
        _require(
            isinstance(sid, str) and bool(sid),
            f"{where}: session_id must be a non-empty string",
        )
        # session_id names the output JSONL file
        _require(
            "/" not in sid and "\\" not in sid,
            f"{where}: session_id must not contain path separators",
        )
        _require(sid not in seen_ids, f"{where}: duplicate session_id {sid!r}")
        seen_ids.add(sid)
        ikind = session.get("interlocutor_kind", "HUMAN_HUMAN")
        _require(
            ikind in _INTERLOCUTOR_KINDS,
            f"{where}: interlocutor_kind must be one of"
            f" {_INTERLOCUTOR_KINDS}, got {ikind!r}",
        )
        speakers = session.get("speakers")
        _require(
            isinstance(speakers, list)
            and len(speakers) == 2
            and all(isinstance(s, str) and s for s in speakers)
            and speakers[0] != speakers[1],
            f"{where}: speakers must be two distinct non-empty strings",
        )
        machine = session.get("machine_speaker")
        if machine is not None:
            _require(
                ikind == "HUMAN_MACHINE",
                f"{where}: machine_speaker requires HUMAN_MACHINE",
            )
            _require(
                machine in speakers,
                f"{where}: machine_speaker {machine!r} not in speakers",
            )
        units = session.get("units")
        _require(
            isinstance(units, list) and bool(units),
            f"{where}: units must be a non-empty list",
        )
        for idx, unit in enumerate(units):
            u_where = f"{where}.units[{idx}]"
            _require(isinstance(unit, dict), f"{u_where} must be a JSON object")
            u_known = {"speaker", "start_s", "end_s", "text", "audio", "turn_index"}
            u_unknown = sorted(set(unit) - u_known)
            _require(not u_unknown, f"{u_where}: unknown keys: {u_unknown}")
            _require(
                unit.get("speaker") in speakers,
                f"{u_where}: speaker must be one of {speakers}",
            )
            for key in ("start_s", "end_s"):
                value = unit.get(key)
                _require(
                    isinstance(value, (int, float)) and not isinstance(value, bool),
                    f"{u_where}: {key} must be a number",
                )
            _require(
                float(unit["end_s"]) >= float(unit["start_s"]),
                f"{u_where}: end_s must not precede start_s",
            )
            if "text" in unit:
                _require(
                    isinstance(unit["text"], str), f"{u_where}: text must be a string"
                )
            if "audio" in unit:
                _require(
                    isinstance(unit["audio"], str) and bool(unit["audio"]),
                    f"{u_where}: audio must be a non-empty string",
                )
            if "turn_index" in unit:
                ti = unit["turn_index"]
                _require(
                    isinstance(ti, int) and not isinstance(ti, bool) and ti >= 0,
                    f"{u_where}: turn_index must be a non-negative integer",
                )
    return obj


def _embed_unit(provider, family: EmbeddingFamily, unit: dict, sid: str,
                idx: int, audio_base: Path) -> list[float]:
    if family.needs_audio:
        audio = unit.get("audio")
        if audio is None:
            raise AudioDecodeError(
                f"session {sid} unit {idx}: {family.value} needs an audio path"
            )
        vec = provider.embed_audio(_resolve(audio_base, Path(audio)))
    else:
        text = unit.get("text")
        if text is None or not text.strip():
            raise EmptyText(
                f"session {sid} unit {idx}: {family.value} needs non-empty text"
            )
        vec = provider.embed_text(text)
    return [float(x) for x in vec]


def extract(job: ExtractionJob) -> ExtractResult:
    """Run one job: embed every unit and write the corpus to job.out_dir."""

    transcripts = load_transcripts(job.input_manifest)
    provider = make_provider(job.provider, job.family, job.checkpoint)
    audio_base = Path(job.input_manifest).parent
    unit_kind = transcripts.get("unit_kind", "TURN")

    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_sessions = []
    total_units = 0
    for session in transcripts["sessions"]:
        sid = session["session_id"]
        lines = []
        for idx, unit in enumerate(session["units"]):
            features = _embed_unit(
                provider, job.family, unit, sid, idx, audio_base
            )
            record = {
                "session_id": sid,
                "speaker": unit["speaker"],
                "unit_index": idx,
                "start_s": float(unit["start_s"]),
                "end_s": float(unit["end_s"]),
                "unit_kind": unit_kind,
                "turn_index": int(unit.get("turn_index", idx)),
                "features": features,
                "feature_set": job.family.value,
            }
            lines.append(json.dumps(record))
        session_path = out_dir / f"{sid}.jsonl"
        session_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        total_units += len(lines)
        entry = {
            "session_id": sid,
            "path": f"{sid}.jsonl",
            "interlocutor_kind": session.get("interlocutor_kind", "HUMAN_HUMAN"),
            "speakers": list(session["speakers"]),
        }
        if session.get("machine_speaker") is not None:
            entry["machine_speaker"] = session["machine_speaker"]
        manifest_sessions.append(entry)

    manifest = {
        "corpus_name": transcripts["corpus_name"],
        "feature_set": job.family.value,
        "unit_kind": unit_kind,
        "sessions": manifest_sessions,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return ExtractResult(
        manifest_path=manifest_path,
        sessions=len(manifest_sessions),
        units=total_units,
    )
