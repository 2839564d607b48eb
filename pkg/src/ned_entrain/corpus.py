"""Canonical corpus representation, on-disk format, and pair construction.

On disk a corpus is a JSON manifest plus one UTF-8 JSON Lines file per
session (one UnitRecord object per line). Manifest shape:

    {
      "corpus_name": str,
      "feature_set": "LLD228" | "TRILL512" | "SENT768" | "USE512" | "SYNTH",
      "unit_kind": "IPU" | "TURN",
      "sessions": [
        {
          "session_id": str,
          "path": str (relative to the manifest's directory, or absolute),
          "interlocutor_kind": "HUMAN_HUMAN" | "HUMAN_MACHINE",
          "speakers": [str, str],
          "machine_speaker": str        # optional; HUMAN_MACHINE only
        }, ...
      ]
    }

`machine_speaker` is an optional extension: directional human-machine
evaluation needs to know which speaker is the machine, and nothing else in
the schema carries that. Files without it still validate.

Units of analysis come in two kinds. A TURN unit is one conversational turn
(turn_index == unit_index). An IPU unit is an inter-pausal unit; contiguous
IPUs sharing a turn_index form one turn. Consecutive pairs are always
cross-speaker: for TURN kind, a turn with the immediately following turn of
the other speaker; for IPU kind, the last IPU of a turn with the first IPU
of the other speaker's next turn. Same-speaker adjacency yields no pair.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyResult,
    InsufficientUnits,
    MissingFile,
    SchemaViolation,
)


class FeatureSet(str, enum.Enum):
    LLD228 = "LLD228"
    TRILL512 = "TRILL512"
    SENT768 = "SENT768"
    USE512 = "USE512"
    SYNTH = "SYNTH"


class UnitKind(str, enum.Enum):
    IPU = "IPU"
    TURN = "TURN"


class Direction(str, enum.Enum):
    ANY = "ANY"
    A_TO_B = "A_TO_B"
    B_TO_A = "B_TO_A"


class InterlocutorKind(str, enum.Enum):
    HUMAN_HUMAN = "HUMAN_HUMAN"
    HUMAN_MACHINE = "HUMAN_MACHINE"


@dataclass(frozen=True)
class UnitRecord:
    """One unit of analysis (IPU or turn) with its feature vector."""

    session_id: str
    speaker: str
    unit_index: int
    start_s: float
    end_s: float
    unit_kind: UnitKind
    turn_index: int
    features: np.ndarray
    feature_set: FeatureSet

    def __post_init__(self) -> None:
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        if feats.ndim != 1:
            raise SchemaViolation(
                f"session {self.session_id!r} unit {self.unit_index}: "
                f"features must be a flat vector"
            )
        object.__setattr__(self, "features", feats)

    @property
    def dim(self) -> int:
        return int(self.features.shape[0])


@dataclass(frozen=True)
class Session:
    """One dyadic conversation: exactly two speakers, ordered units."""

    session_id: str
    units: tuple[UnitRecord, ...]
    speakers: tuple[str, str]
    interlocutor_kind: InterlocutorKind
    machine_speaker: str | None = None

    @property
    def dim(self) -> int:
        return self.units[0].dim


@dataclass(frozen=True)
class PairSet:
    """Cross-speaker (x1, x2) pairs where x1 precedes x2 in session order."""

    pairs: tuple[tuple[UnitRecord, UnitRecord], ...]
    direction: Direction
    unit_kind: UnitKind


@dataclass(frozen=True)
class Corpus:
    corpus_name: str
    feature_set: FeatureSet
    unit_kind: UnitKind
    sessions: tuple[Session, ...]

    @property
    def dim(self) -> int:
        return self.sessions[0].dim


def stable_session_hash(session_id: str) -> int:
    """32-bit digest of a session id, stable across processes and runs.

    Python's built-in hash() is salted per process, so derived RNG seeds
    must come from a cryptographic digest instead.
    """
    return int.from_bytes(
        hashlib.sha256(session_id.encode("utf-8")).digest()[:4], "big"
    )


def speaker_roles(session: Session) -> tuple[str, str]:
    """Role assignment (A, B) for directional pair filters.

    A is the first speaker to produce a unit; for human-machine sessions
    with a labeled machine, A is the human regardless of who speaks first.
    """
    first = session.units[0].speaker
    other = next(s for s in session.speakers if s != first)
    if (
        session.interlocutor_kind is InterlocutorKind.HUMAN_MACHINE
        and session.machine_speaker is not None
    ):
        human = next(s for s in session.speakers if s != session.machine_speaker)
        return human, session.machine_speaker
    return first, other


# ---------------------------------------------------------------------------
# Validation and IO

_REQUIRED_UNIT_FIELDS = (
    "session_id",
    "speaker",
    "unit_index",
    "start_s",
    "end_s",
    "unit_kind",
    "turn_index",
    "features",
    "feature_set",
)


def _parse_unit_line(
    line: str, lineno: int, session_id: str, expected_set: FeatureSet
) -> UnitRecord:
    where = f"session {session_id!r} line {lineno}"
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{where}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise SchemaViolation(f"{where}: unit record must be a JSON object")
    missing = [k for k in _REQUIRED_UNIT_FIELDS if k not in obj]
    if missing:
        raise SchemaViolation(f"{where}: missing fields {missing}")
    if obj["session_id"] != session_id:
        raise SchemaViolation(
            f"{where}: session_id {obj['session_id']!r} does not match manifest"
        )
    try:
        kind = UnitKind(obj["unit_kind"])
    except ValueError:
        raise SchemaViolation(f"{where}: unknown unit_kind {obj['unit_kind']!r}")
    try:
        fset = FeatureSet(obj["feature_set"])
    except ValueError:
        raise SchemaViolation(f"{where}: unknown feature_set {obj['feature_set']!r}")
    if fset is not expected_set:
        raise SchemaViolation(
            f"{where}: feature_set {fset.value} does not match manifest "
            f"{expected_set.value}"
        )
    unit_index = obj["unit_index"]
    turn_index = obj["turn_index"]
    if not isinstance(unit_index, int) or unit_index < 0:
        raise SchemaViolation(f"{where}: unit_index must be an integer >= 0")
    if not isinstance(turn_index, int) or turn_index < 0:
        raise SchemaViolation(f"{where}: turn_index must be an integer >= 0")
    if kind is UnitKind.TURN and turn_index != unit_index:
        raise SchemaViolation(
            f"{where}: TURN units require turn_index == unit_index"
        )
    start_s = obj["start_s"]
    end_s = obj["end_s"]
    if not isinstance(start_s, (int, float)) or not isinstance(end_s, (int, float)):
        raise SchemaViolation(f"{where}: start_s/end_s must be numbers")
    if not (start_s >= 0 and math.isfinite(start_s) and math.isfinite(end_s)):
        raise SchemaViolation(f"{where}: start_s must be finite and >= 0")
    if not end_s > start_s:
        raise SchemaViolation(f"{where}: end_s must exceed start_s")
    feats = obj["features"]
    if not isinstance(feats, list) or not feats:
        raise SchemaViolation(f"{where}: features must be a non-empty array")
    if not all(isinstance(x, (int, float)) and math.isfinite(x) for x in feats):
        raise SchemaViolation(f"{where}: features must be finite numbers")
    if not isinstance(obj["speaker"], str) or not obj["speaker"]:
        raise SchemaViolation(f"{where}: speaker must be a non-empty string")
    return UnitRecord(
        session_id=session_id,
        speaker=obj["speaker"],
        unit_index=unit_index,
        start_s=float(start_s),
        end_s=float(end_s),
        unit_kind=kind,
        turn_index=turn_index,
        features=np.asarray(feats, dtype=np.float64),
        feature_set=fset,
    )


def _load_session(
    entry: dict, manifest_dir: Path, feature_set: FeatureSet, unit_kind: UnitKind
) -> Session:
    for key in ("session_id", "path", "interlocutor_kind", "speakers"):
        if key not in entry:
            raise SchemaViolation(f"manifest session entry missing field {key!r}")
    session_id = entry["session_id"]
    try:
        ikind = InterlocutorKind(entry["interlocutor_kind"])
    except ValueError:
        raise SchemaViolation(
            f"session {session_id!r}: unknown interlocutor_kind "
            f"{entry['interlocutor_kind']!r}"
        )
    speakers = entry["speakers"]
    if (
        not isinstance(speakers, list)
        or len(speakers) != 2
        or len(set(speakers)) != 2
        or not all(isinstance(s, str) for s in speakers)
    ):
        raise SchemaViolation(
            f"session {session_id!r}: speakers must list exactly 2 distinct labels"
        )
    machine = entry.get("machine_speaker")
    if machine is not None:
        if ikind is not InterlocutorKind.HUMAN_MACHINE:
            raise SchemaViolation(
                f"session {session_id!r}: machine_speaker requires "
                f"interlocutor_kind HUMAN_MACHINE"
            )
        if machine not in speakers:
            raise SchemaViolation(
                f"session {session_id!r}: machine_speaker {machine!r} "
                f"not in speakers"
            )
    path = Path(entry["path"])
    if not path.is_absolute():
        path = manifest_dir / path
    if not path.is_file():
        raise MissingFile(f"session {session_id!r}: file not found: {path}")

    units: list[UnitRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            units.append(_parse_unit_line(line, lineno, session_id, feature_set))
    if not units:
        raise SchemaViolation(f"session {session_id!r}: no units")

    seen_speakers = {u.speaker for u in units}
    if not seen_speakers <= set(speakers):
        raise SchemaViolation(
            f"session {session_id!r}: unit speakers {sorted(seen_speakers)} "
            f"not covered by manifest speakers {speakers}"
        )
    if len(seen_speakers) != 2:
        raise SchemaViolation(
            f"session {session_id!r}: expected units from exactly 2 speakers, "
            f"saw {sorted(seen_speakers)}"
        )
    dim = units[0].dim
    for u in units:
        if u.dim != dim:
            raise DimensionMismatch(
                f"session {session_id!r} unit {u.unit_index}: feature dim "
                f"{u.dim} != {dim}"
            )
        if u.unit_kind is not unit_kind:
            raise SchemaViolation(
                f"session {session_id!r} unit {u.unit_index}: unit_kind "
                f"{u.unit_kind.value} does not match manifest {unit_kind.value}"
            )
    for prev, cur in zip(units, units[1:]):
        if cur.unit_index <= prev.unit_index:
            raise SchemaViolation(
                f"session {session_id!r} unit {cur.unit_index}: unit_index "
                f"must be strictly increasing in file order"
            )
        if (cur.start_s, cur.unit_index) < (prev.start_s, prev.unit_index):
            raise SchemaViolation(
                f"session {session_id!r} unit {cur.unit_index}: units must be "
                f"sorted by start_s (ties by unit_index)"
            )
        if cur.turn_index < prev.turn_index:
            raise SchemaViolation(
                f"session {session_id!r} unit {cur.unit_index}: turn_index "
                f"must be non-decreasing"
            )
    return Session(
        session_id=session_id,
        units=tuple(units),
        speakers=(speakers[0], speakers[1]),
        interlocutor_kind=ikind,
        machine_speaker=machine,
    )


def load_manifest(path: str | Path) -> Corpus:
    """Load and validate a corpus; raises on the first violation found."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"manifest {path}: invalid JSON ({exc.msg})") from exc
    for key in ("corpus_name", "feature_set", "unit_kind", "sessions"):
        if key not in manifest:
            raise SchemaViolation(f"manifest {path}: missing field {key!r}")
    try:
        feature_set = FeatureSet(manifest["feature_set"])
    except ValueError:
        raise SchemaViolation(
            f"manifest {path}: unknown feature_set {manifest['feature_set']!r}"
        )
    try:
        unit_kind = UnitKind(manifest["unit_kind"])
    except ValueError:
        raise SchemaViolation(
            f"manifest {path}: unknown unit_kind {manifest['unit_kind']!r}"
        )
    entries = manifest["sessions"]
    if not isinstance(entries, list) or not entries:
        raise SchemaViolation(f"manifest {path}: sessions must be a non-empty list")

    sessions: list[Session] = []
    seen_ids: set[str] = set()
    for entry in entries:
        session = _load_session(entry, path.parent, feature_set, unit_kind)
        if session.session_id in seen_ids:
            raise SchemaViolation(
                f"manifest {path}: duplicate session_id {session.session_id!r}"
            )
        seen_ids.add(session.session_id)
        sessions.append(session)
    dim = sessions[0].dim
    for s in sessions:
        if s.dim != dim:
            raise DimensionMismatch(
                f"session {s.session_id!r}: feature dim {s.dim} != corpus dim {dim}"
            )
    return Corpus(
        corpus_name=manifest["corpus_name"],
        feature_set=feature_set,
        unit_kind=unit_kind,
        sessions=tuple(sessions),
    )


def validate_manifest(path: str | Path) -> list[str]:
    """Collect all diagnostics instead of raising on the first.

    Manifest-level problems stop early (nothing else is interpretable);
    per-session problems are accumulated so one pass reports every bad
    session.
    """
    path = Path(path)
    diagnostics: list[str] = []
    if not path.is_file():
        return [f"manifest not found: {path}"]
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        return [f"manifest {path}: invalid JSON ({exc.msg})"]
    for key in ("corpus_name", "feature_set", "unit_kind", "sessions"):
        if key not in manifest:
            diagnostics.append(f"manifest {path}: missing field {key!r}")
    if diagnostics:
        return diagnostics
    try:
        feature_set = FeatureSet(manifest["feature_set"])
        unit_kind = UnitKind(manifest["unit_kind"])
    except ValueError as exc:
        return [f"manifest {path}: {exc}"]
    entries = manifest["sessions"]
    if not isinstance(entries, list) or not entries:
        return [f"manifest {path}: sessions must be a non-empty list"]

    dims: dict[str, int] = {}
    seen_ids: set[str] = set()
    for i, entry in enumerate(entries):
        try:
            session = _load_session(entry, path.parent, feature_set, unit_kind)
        except Exception as exc:  # each session reported independently
            label = entry.get("session_id", f"#{i}") if isinstance(entry, dict) else f"#{i}"
            diagnostics.append(f"[{label}] {exc}")
            continue
        if session.session_id in seen_ids:
            diagnostics.append(f"duplicate session_id {session.session_id!r}")
        seen_ids.add(session.session_id)
        dims[session.session_id] = session.dim
    if dims and len(set(dims.values())) > 1:
        diagnostics.append(f"sessions disagree on feature dim: {sorted(set(dims.values()))}")
    return diagnostics


def _unit_to_json(u: UnitRecord) -> str:
    obj = {
        "session_id": u.session_id,
        "speaker": u.speaker,
        "unit_index": u.unit_index,
        "start_s": u.start_s,
        "end_s": u.end_s,
        "unit_kind": u.unit_kind.value,
        "turn_index": u.turn_index,
        "features": [float(x) for x in u.features],
        "feature_set": u.feature_set.value,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_corpus(corpus: Corpus, out_dir: str | Path) -> Path:
    """Write manifest.json plus one <session_id>.jsonl per session.

    Returns the manifest path. Output is deterministic for a given corpus.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for session in corpus.sessions:
        fname = f"{session.session_id}.jsonl"
        with (out_dir / fname).open("w", encoding="utf-8") as fh:
            for u in session.units:
                fh.write(_unit_to_json(u) + "\n")
        entry = {
            "session_id": session.session_id,
            "path": fname,
            "interlocutor_kind": session.interlocutor_kind.value,
            "speakers": list(session.speakers),
        }
        if session.machine_speaker is not None:
            entry["machine_speaker"] = session.machine_speaker
        entries.append(entry)
    manifest = {
        "corpus_name": corpus.corpus_name,
        "feature_set": corpus.feature_set.value,
        "unit_kind": corpus.unit_kind.value,
        "sessions": entries,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return manifest_path


# ---------------------------------------------------------------------------
# Pair construction

def _turn_groups(units: tuple[UnitRecord, ...]) -> list[list[UnitRecord]]:
    # Contiguous runs sharing turn_index; for TURN units every group is a
    # singleton, for IPU units a group is one turn's IPUs.
    groups: list[list[UnitRecord]] = []
    for u in units:
        if groups and groups[-1][-1].turn_index == u.turn_index:
            groups[-1].append(u)
        else:
            groups.append([u])
    return groups


def build_consecutive_pairs(
    session: Session,
    unit_kind: UnitKind,
    direction: Direction = Direction.ANY,
) -> PairSet:
    """Pair each turn exchange's trailing unit with its response unit.

    TURN kind pairs adjacent cross-speaker turns; IPU kind pairs the last
    IPU of a turn with the first IPU of the other speaker's next turn.
    Adjacent same-speaker turns produce no pair. Direction filters use the
    session's (A, B) roles from speaker_roles().
    """
    units = tuple(u for u in session.units if u.unit_kind is unit_kind)
    if len(units) < 2:
        raise EmptyResult(
            f"session {session.session_id!r} has fewer than 2 units of kind "
            f"{unit_kind.value}"
        )
    role_a, role_b = speaker_roles(session)
    groups = _turn_groups(units)
    pairs: list[tuple[UnitRecord, UnitRecord]] = []
    for prev, nxt in zip(groups, groups[1:]):
        x1 = prev[-1]
        x2 = nxt[0]
        if x1.speaker == x2.speaker:
            continue
        if direction is Direction.A_TO_B and (x1.speaker, x2.speaker) != (role_a, role_b):
            continue
        if direction is Direction.B_TO_A and (x1.speaker, x2.speaker) != (role_b, role_a):
            continue
        pairs.append((x1, x2))
    if not pairs:
        raise EmptyResult(
            f"session {session.session_id!r}: no {direction.value} pairs of kind "
            f"{unit_kind.value}"
        )
    return PairSet(pairs=tuple(pairs), direction=direction, unit_kind=unit_kind)


def consecutive_partner(session: Session, anchor: UnitRecord) -> UnitRecord | None:
    """The unit the anchor is consecutively paired with, if any.

    This is the first unit of the next turn group when that group belongs
    to the other speaker, independent of any direction filter.
    """
    units = tuple(u for u in session.units if u.unit_kind is anchor.unit_kind)
    groups = _turn_groups(units)
    for prev, nxt in zip(groups, groups[1:]):
        if prev[-1].unit_index == anchor.unit_index:
            return nxt[0] if nxt[0].speaker != anchor.speaker else None
    return None


def sample_nonconsecutive(
    session: Session,
    anchor: UnitRecord,
    count: int,
    rng_seed,
) -> list[UnitRecord]:
    """Sample `count` other-speaker units excluding the consecutive partner.

    Uniform without replacement, reproducible from rng_seed (anything
    np.random.default_rng accepts). Candidates share the anchor's unit kind
    and may come from anywhere in the session, earlier or later.
    """
    if count < 1:
        raise InsufficientUnits("count must be >= 1")
    partner = consecutive_partner(session, anchor)
    candidates = [
        u
        for u in session.units
        if u.unit_kind is anchor.unit_kind
        and u.speaker != anchor.speaker
        and (partner is None or u.unit_index != partner.unit_index)
    ]
    if len(candidates) < count:
        raise InsufficientUnits(
            f"session {session.session_id!r} anchor {anchor.unit_index}: "
            f"{len(candidates)} non-consecutive candidates < count {count}"
        )
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(len(candidates), size=count, replace=False)
    return [candidates[int(i)] for i in idx]


def relabel_unit_kind(corpus: Corpus, unit_kind: UnitKind) -> Corpus:
    """A copy of the corpus with every unit relabeled to `unit_kind`.

    Used to view a TURN corpus as a degenerate one-IPU-per-turn corpus;
    features and ordering are untouched.
    """
    sessions = []
    for s in corpus.sessions:
        units = tuple(replace(u, unit_kind=unit_kind) for u in s.units)
        sessions.append(replace(s, units=units))
    return replace(corpus, unit_kind=unit_kind, sessions=tuple(sessions))
