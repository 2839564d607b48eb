"""Hand-built corpus fixtures shared across test modules."""

from __future__ import annotations

import numpy as np

from ned_entrain.corpus import (
    Corpus,
    FeatureSet,
    InterlocutorKind,
    Session,
    UnitKind,
    UnitRecord,
)


def make_unit(
    session_id: str = "s0",
    speaker: str = "A",
    unit_index: int = 0,
    *,
    unit_kind: UnitKind = UnitKind.TURN,
    turn_index: int | None = None,
    features=None,
    dim: int = 4,
    start_s: float | None = None,
    feature_set: FeatureSet = FeatureSet.SYNTH,
    rng: np.random.Generator | None = None,
) -> UnitRecord:
    if features is None:
        if rng is not None:
            features = rng.normal(size=dim)
        else:
            # Distinct per unit so ties never happen by accident.
            features = np.arange(dim, dtype=np.float64) + 10.0 * unit_index
    if start_s is None:
        start_s = 2.0 * unit_index
    if turn_index is None:
        turn_index = unit_index
    return UnitRecord(
        session_id=session_id,
        speaker=speaker,
        unit_index=unit_index,
        start_s=start_s,
        end_s=start_s + 1.5,
        unit_kind=unit_kind,
        turn_index=turn_index,
        features=np.asarray(features, dtype=np.float64),
        feature_set=feature_set,
    )


def make_turn_session(
    speaker_seq,
    session_id: str = "s0",
    dim: int = 4,
    interlocutor_kind: InterlocutorKind = InterlocutorKind.HUMAN_HUMAN,
    machine_speaker: str | None = None,
    rng: np.random.Generator | None = None,
) -> Session:
    """One TURN unit per element of speaker_seq (e.g. "ABAB")."""
    units = tuple(
        make_unit(session_id, spk, i, dim=dim, rng=rng)
        for i, spk in enumerate(speaker_seq)
    )
    speakers = tuple(dict.fromkeys(speaker_seq))
    assert len(speakers) == 2, "test sessions must use exactly two speakers"
    return Session(
        session_id=session_id,
        units=units,
        speakers=speakers,  # type: ignore[arg-type]
        interlocutor_kind=interlocutor_kind,
        machine_speaker=machine_speaker,
    )


def make_ipu_session(
    turn_speakers,
    ipus_per_turn,
    session_id: str = "s0",
    dim: int = 4,
    rng: np.random.Generator | None = None,
) -> Session:
    """IPU units grouped into turns: turn t has ipus_per_turn[t] units."""
    units = []
    unit_index = 0
    for turn_index, (spk, n) in enumerate(zip(turn_speakers, ipus_per_turn)):
        for _ in range(n):
            units.append(
                make_unit(
                    session_id,
                    spk,
                    unit_index,
                    unit_kind=UnitKind.IPU,
                    turn_index=turn_index,
                    dim=dim,
                    rng=rng,
                )
            )
            unit_index += 1
    speakers = tuple(dict.fromkeys(turn_speakers))
    assert len(speakers) == 2
    return Session(
        session_id=session_id,
        units=tuple(units),
        speakers=speakers,  # type: ignore[arg-type]
        interlocutor_kind=InterlocutorKind.HUMAN_HUMAN,
    )


def make_corpus(sessions, unit_kind: UnitKind = UnitKind.TURN) -> Corpus:
    return Corpus(
        corpus_name="test",
        feature_set=FeatureSet.SYNTH,
        unit_kind=unit_kind,
        sessions=tuple(sessions),
    )
