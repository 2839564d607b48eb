"""Synthetic dyadic corpora with a controllable entrainment coupling.

Turn features follow linear-Gaussian dynamics over a shared latent state.
Within a session with speakers alternating turns, the latent chain is

    u_t = coupling * u_{t-1} + noise_scale * eps_t,    eps_t ~ N(0, I)

and turn t's feature vector is x_t = style(speaker_t) + u_t, where each
speaker's style vector is drawn once per session with magnitude
speaker_offset_scale. Because consecutive turns belong to different
speakers, coupling feeds each turn's latent from the previous OTHER-speaker
turn; coupling=0 makes consecutive partners independent given styles, and
coupling=1 with vanishing noise makes each turn copy the previous one.

ONE_WAY_HM mode breaks the symmetry: machine turns draw a fresh independent
latent (the machine ignores the human), while human turns couple to the
machine's previous latent as above. The machine speaks first so every human
turn has a machine predecessor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .corpus import (
    Corpus,
    Direction,
    FeatureSet,
    InsufficientUnits,
    InterlocutorKind,
    Session,
    UnitKind,
    UnitRecord,
    build_consecutive_pairs,
    sample_nonconsecutive,
    stable_session_hash,
)
from .errors import EmptyResult, InvalidSpec


class GenMode(str, enum.Enum):
    SYMMETRIC_HH = "SYMMETRIC_HH"
    ONE_WAY_HM = "ONE_WAY_HM"


@dataclass(frozen=True)
class GenSpec:
    """Generator parameters; defaults are the package's calibrated values."""

    num_sessions: int
    turns_per_session: int
    dim: int
    coupling: float
    speaker_offset_scale: float = 0.25
    noise_scale: float = 0.4
    mode: GenMode = GenMode.SYMMETRIC_HH
    seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.num_sessions, int) or self.num_sessions < 1:
            raise InvalidSpec("num_sessions must be an integer >= 1")
        if not isinstance(self.turns_per_session, int) or self.turns_per_session < 4:
            raise InvalidSpec("turns_per_session must be an integer >= 4")
        if not isinstance(self.dim, int) or self.dim < 1:
            raise InvalidSpec("dim must be an integer >= 1")
        if not 0.0 <= float(self.coupling) <= 1.0:
            raise InvalidSpec("coupling must lie in [0, 1]")
        if float(self.speaker_offset_scale) < 0.0:
            raise InvalidSpec("speaker_offset_scale must be >= 0")
        if not float(self.noise_scale) > 0.0:
            raise InvalidSpec("noise_scale must be > 0")
        if not isinstance(self.mode, GenMode):
            raise InvalidSpec(f"unknown mode {self.mode!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidSpec("seed must be an integer >= 0")


_GEN_SPEC_KEYS = {
    "num_sessions",
    "turns_per_session",
    "dim",
    "coupling",
    "speaker_offset_scale",
    "noise_scale",
    "mode",
    "seed",
}
_GEN_SPEC_REQUIRED = ("num_sessions", "turns_per_session", "dim", "coupling")


def parse_gen_spec(obj: dict) -> GenSpec:
    """Build a GenSpec from a parsed JSON object, rejecting unknown keys."""
    if not isinstance(obj, dict):
        raise InvalidSpec("generator spec must be a JSON object")
    unknown = sorted(set(obj) - _GEN_SPEC_KEYS)
    if unknown:
        raise InvalidSpec(f"unknown generator spec keys: {unknown}")
    missing = [k for k in _GEN_SPEC_REQUIRED if k not in obj]
    if missing:
        raise InvalidSpec(f"generator spec missing keys: {missing}")
    kwargs = dict(obj)
    if "mode" in kwargs:
        try:
            kwargs["mode"] = GenMode(kwargs["mode"])
        except ValueError:
            raise InvalidSpec(f"unknown mode {kwargs['mode']!r}")
    try:
        return GenSpec(**kwargs)
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from exc


def _generate_session(spec: GenSpec, index: int) -> Session:
    rng = np.random.default_rng([spec.seed, 4, index])
    session_id = f"synth-{index:04d}"
    if spec.mode is GenMode.ONE_WAY_HM:
        speakers = ("machine", "human")  # machine speaks first
        ikind = InterlocutorKind.HUMAN_MACHINE
        machine = "machine"
    else:
        speakers = ("spk_a", "spk_b")
        ikind = InterlocutorKind.HUMAN_HUMAN
        machine = None
    styles = rng.normal(size=(2, spec.dim)) * spec.speaker_offset_scale
    units = []
    u = np.zeros(spec.dim)
    for t in range(spec.turns_per_session):
        eps = rng.normal(size=spec.dim)
        speaker_idx = t % 2
        if spec.mode is GenMode.ONE_WAY_HM and speaker_idx == 0:
            u = spec.noise_scale * eps
        else:
            u = spec.coupling * u + spec.noise_scale * eps
        x = styles[speaker_idx] + u
        units.append(
            UnitRecord(
                session_id=session_id,
                speaker=speakers[speaker_idx],
                unit_index=t,
                start_s=2.0 * t,
                end_s=2.0 * t + 1.5,
                unit_kind=UnitKind.TURN,
                turn_index=t,
                features=x,
                feature_set=FeatureSet.SYNTH,
            )
        )
    return Session(
        session_id=session_id,
        units=tuple(units),
        speakers=speakers,
        interlocutor_kind=ikind,
        machine_speaker=machine,
    )


def generate_corpus(spec: GenSpec) -> Corpus:
    """Generate a TURN-unit corpus; identical spec yields identical output."""
    sessions = tuple(_generate_session(spec, i) for i in range(spec.num_sessions))
    return Corpus(
        corpus_name=f"synth-c{spec.coupling:g}-{spec.mode.value.lower()}",
        feature_set=FeatureSet.SYNTH,
        unit_kind=UnitKind.TURN,
        sessions=sessions,
    )


@dataclass(frozen=True)
class OracleBand:
    """Accuracy band of the raw-feature brute-force classifier."""

    per_rep: tuple[float, ...]
    mean: float
    lo: float
    hi: float


def oracle_accuracy(
    spec: GenSpec,
    reps: int = 5,
    direction: Direction = Direction.ANY,
) -> OracleBand:
    """Brute-force baseline accuracy with no model involved.

    Classifies each consecutive pair by comparing the raw-feature mean
    absolute difference against one sampled non-consecutive unit (lower is
    closer), over `reps` regenerated corpora with shifted seeds. Bounds what
    a trained model can be expected to reach on the same spec.
    """
    accs = []
    for rep in range(reps):
        corpus = generate_corpus(replace(spec, seed=spec.seed + rep))
        correct = 0
        total = 0
        for session in corpus.sessions:
            try:
                pairs = build_consecutive_pairs(session, UnitKind.TURN, direction)
            except EmptyResult:
                continue
            shash = stable_session_hash(session.session_id)
            for pair_index, (x1, x2) in enumerate(pairs.pairs):
                try:
                    sampled = sample_nonconsecutive(
                        session, x1, 1, [spec.seed, 5, rep, shash, pair_index]
                    )
                except InsufficientUnits:
                    continue
                d_c = float(np.mean(np.abs(x1.features - x2.features)))
                d_nc = float(np.mean(np.abs(x1.features - sampled[0].features)))
                total += 1
                if d_c < d_nc:
                    correct += 1
        accs.append(correct / total if total else 0.0)
    return OracleBand(
        per_rep=tuple(accs),
        mean=float(np.mean(accs)),
        lo=float(min(accs)),
        hi=float(max(accs)),
    )
