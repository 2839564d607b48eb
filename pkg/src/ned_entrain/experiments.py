"""Session-grouped k-fold evaluation and the three experiment drivers.

Folds split by session (never by pair) so no conversation contributes to
both train and test of any fold. One model is trained per fold per
condition on the other k-1 folds; evaluation classifies each consecutive
pair against non-consecutive baselines:

    ONE_RT  one sampled non-consecutive unit
    TEN_RT  the mean NED over ten sampled non-consecutive units

A case is correct when the consecutive NED compares to the baseline NED in
the direction the preset's polarity declares (strictly; exact ties count as
incorrect and are tallied). Pairs whose session cannot supply the requested
sample count are skipped and tallied; accuracy divides correct cases by the
non-skipped total. Every random draw derives from the run seed plus stable
identifiers (fold index, hashed session id, pair index), so reports are
reproducible across runs and across fold-level parallelism.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corpus import (
    Corpus,
    Direction,
    Session,
    UnitKind,
    build_consecutive_pairs,
    sample_nonconsecutive,
    stable_session_hash,
)
from .entrainment import (
    ModelConfig,
    NedMetric,
    Polarity,
    Preset,
    TrainedModel,
    apply_metric,
    encode_matrix,
    preset_config,
    train_model,
)
from .errors import EmptyResult, InsufficientUnits, TooFewSessions, ZeroVector
from .features import zscore_fit


class Baseline(str, enum.Enum):
    ONE_RT = "ONE_RT"
    TEN_RT = "TEN_RT"


_BASELINE_COUNT = {Baseline.ONE_RT: 1, Baseline.TEN_RT: 10}


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict[str, int]

    def fold_of(self, session_id: str) -> int:
        return self.assignments[session_id]


def kfold_split(corpus: Corpus, k: int = 10, seed: int = 0) -> FoldPlan:
    """Seeded session-level partition with fold sizes balanced within 1."""
    ids = [s.session_id for s in corpus.sessions]
    if len(ids) < k:
        raise TooFewSessions(f"{len(ids)} sessions < k={k}")
    rng = np.random.default_rng([seed, 10])
    perm = rng.permutation(len(ids))
    assignments = {ids[int(p)]: i % k for i, p in enumerate(perm)}
    return FoldPlan(k=k, assignments=assignments)


@dataclass(frozen=True)
class FoldEval:
    """Per-fold evaluation tallies."""

    fold: int
    pairs_total: int
    correct: int
    ties: int
    skipped: int

    @property
    def accuracy(self) -> float:
        scored = self.pairs_total - self.skipped
        return self.correct / scored if scored > 0 else 0.0


@dataclass(frozen=True)
class AccuracyReport:
    """One Table-1-style cell: per-fold accuracies plus aggregates."""

    experiment_id: str
    preset: Preset
    unit_kind: UnitKind
    direction: Direction
    baseline: Baseline
    per_fold_accuracy: tuple[float, ...]
    mean: float
    std: float
    fold_details: tuple[FoldEval, ...]

    @classmethod
    def from_folds(
        cls,
        experiment_id: str,
        preset: Preset,
        unit_kind: UnitKind,
        direction: Direction,
        baseline: Baseline,
        folds: tuple[FoldEval, ...],
    ) -> "AccuracyReport":
        accs = tuple(f.accuracy for f in folds)
        mean = float(np.mean(accs))
        std = float(np.sqrt(np.mean((np.asarray(accs) - mean) ** 2)))
        return cls(
            experiment_id=experiment_id,
            preset=preset,
            unit_kind=unit_kind,
            direction=direction,
            baseline=baseline,
            per_fold_accuracy=accs,
            mean=mean,
            std=std,
            fold_details=folds,
        )


def _derived_seed(parts: list[int]) -> int:
    # One 64-bit integer deterministically mixed from integer parts.
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0])


def _session_embeddings(model: TrainedModel, session: Session) -> dict[int, np.ndarray]:
    feats = np.stack([u.features for u in session.units])
    z = encode_matrix(model, feats)
    return {u.unit_index: z[i] for i, u in enumerate(session.units)}


def _evaluate_sessions(
    model: TrainedModel,
    sessions: tuple[Session, ...],
    baselines: tuple[Baseline, ...],
    seed: int,
    unit_kind: UnitKind,
    direction: Direction,
    fold: int,
) -> dict[Baseline, FoldEval]:
    metric: NedMetric = model.config.ned_metric
    higher = model.config.closeness_polarity is Polarity.HIGHER_IS_CLOSER
    tallies = {b: {"pairs": 0, "correct": 0, "ties": 0, "skipped": 0} for b in baselines}
    for session in sessions:
        try:
            pairs = build_consecutive_pairs(session, unit_kind, direction)
        except EmptyResult:
            continue
        emb = _session_embeddings(model, session)
        shash = stable_session_hash(session.session_id)
        for pair_index, (x1, x2) in enumerate(pairs.pairs):
            for baseline in baselines:
                count = _BASELINE_COUNT[baseline]
                tally = tallies[baseline]
                tally["pairs"] += 1
                try:
                    sampled = sample_nonconsecutive(
                        session, x1, count, [seed, shash, pair_index, count]
                    )
                except InsufficientUnits:
                    tally["skipped"] += 1
                    continue
                try:
                    ned_c = apply_metric(metric, emb[x1.unit_index], emb[x2.unit_index])
                    ned_nc = float(
                        np.mean(
                            [
                                apply_metric(metric, emb[x1.unit_index], emb[u.unit_index])
                                for u in sampled
                            ]
                        )
                    )
                except ZeroVector:
                    # Degenerate embeddings cannot be compared; scored as a tie.
                    tally["ties"] += 1
                    continue
                if ned_c == ned_nc:
                    tally["ties"] += 1
                elif (ned_c > ned_nc) if higher else (ned_c < ned_nc):
                    tally["correct"] += 1
    return {
        b: FoldEval(
            fold=fold,
            pairs_total=t["pairs"],
            correct=t["correct"],
            ties=t["ties"],
            skipped=t["skipped"],
        )
        for b, t in tallies.items()
    }


def evaluate_fold(
    model: TrainedModel,
    test_sessions: tuple[Session, ...],
    baseline: Baseline,
    seed: int,
    unit_kind: UnitKind = UnitKind.TURN,
    direction: Direction = Direction.ANY,
    fold: int = 0,
) -> FoldEval:
    """Classify every consecutive pair in the test sessions; see module doc."""
    return _evaluate_sessions(
        model, tuple(test_sessions), (baseline,), seed, unit_kind, direction, fold
    )[baseline]


@dataclass(frozen=True)
class _FoldTask:
    fold: int
    train_sessions: tuple[Session, ...]
    test_sessions: tuple[Session, ...]
    config: ModelConfig
    unit_kind: UnitKind
    direction: Direction
    baselines: tuple[Baseline, ...]
    train_seed: int
    eval_seed: int


def _run_fold(task: _FoldTask) -> tuple[int, dict[Baseline, FoldEval]]:
    pair_sets = []
    for s in task.train_sessions:
        try:
            pair_sets.append(build_consecutive_pairs(s, task.unit_kind, task.direction))
        except EmptyResult:
            continue
    unit_feats = [
        u.features
        for s in task.train_sessions
        for u in s.units
        if u.unit_kind is task.unit_kind
    ]
    norm = zscore_fit(np.stack(unit_feats))
    model = train_model(task.config, pair_sets, task.train_seed, norm=norm)
    evals = _evaluate_sessions(
        model,
        task.test_sessions,
        task.baselines,
        task.eval_seed,
        task.unit_kind,
        task.direction,
        task.fold,
    )
    return task.fold, evals


def run_condition(
    corpus: Corpus,
    preset: Preset,
    unit_kind: UnitKind,
    direction: Direction,
    baselines: tuple[Baseline, ...],
    seed: int,
    experiment_id: str,
    k: int = 10,
    jobs: int = 1,
    epochs: int = 10,
    batch_size: int = 128,
    dual_loss: bool | None = None,
) -> dict[Baseline, AccuracyReport]:
    """k-fold train/evaluate for one (preset, unit kind, direction) cell.

    Returns one AccuracyReport per requested baseline; both baselines share
    each fold's trained model. Normalization stats are fit on the training
    folds' units only. Fold jobs are independent and deterministic, so
    jobs>1 changes wall time, never results.
    """
    plan = kfold_split(corpus, k=k, seed=seed)
    config = preset_config(
        preset,
        input_dim=corpus.dim,
        epochs=epochs,
        batch_size=batch_size,
        dual_loss=dual_loss,
    )
    tasks = []
    for fold in range(plan.k):
        train = tuple(
            s for s in corpus.sessions if plan.fold_of(s.session_id) != fold
        )
        test = tuple(s for s in corpus.sessions if plan.fold_of(s.session_id) == fold)
        tasks.append(
            _FoldTask(
                fold=fold,
                train_sessions=train,
                test_sessions=test,
                config=config,
                unit_kind=unit_kind,
                direction=direction,
                baselines=baselines,
                train_seed=_derived_seed([seed, 2, fold]),
                eval_seed=_derived_seed([seed, 3, fold]),
            )
        )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_run_fold, tasks))
    else:
        results = dict(map(_run_fold, tasks))
    reports = {}
    for baseline in baselines:
        folds = tuple(results[fold][baseline] for fold in range(plan.k))
        reports[baseline] = AccuracyReport.from_folds(
            experiment_id, preset, unit_kind, direction, baseline, folds
        )
    return reports


def run_experiment_1(
    corpus_ipu: Corpus,
    corpus_turn: Corpus,
    seed: int,
    k: int = 10,
    jobs: int = 1,
    epochs: int = 10,
    batch_size: int = 128,
) -> tuple[AccuracyReport, AccuracyReport]:
    """Unit-of-analysis comparison: IPU-trained vs turn-trained models."""
    ipu = run_condition(
        corpus_ipu,
        Preset.LLD_AUDITORY,
        UnitKind.IPU,
        Direction.ANY,
        (Baseline.ONE_RT,),
        seed,
        "exp1",
        k=k,
        jobs=jobs,
        epochs=epochs,
        batch_size=batch_size,
    )[Baseline.ONE_RT]
    turn = run_condition(
        corpus_turn,
        Preset.LLD_AUDITORY,
        UnitKind.TURN,
        Direction.ANY,
        (Baseline.ONE_RT,),
        seed,
        "exp1",
        k=k,
        jobs=jobs,
        epochs=epochs,
        batch_size=batch_size,
    )[Baseline.ONE_RT]
    return ipu, turn


def run_experiment_2(
    corpus: Corpus,
    seed: int,
    preset: Preset = Preset.LLD_AUDITORY,
    k: int = 10,
    jobs: int = 1,
    epochs: int = 10,
    batch_size: int = 128,
) -> tuple[AccuracyReport, AccuracyReport]:
    """Directional comparison: separate models per pair direction.

    Roles follow speaker_roles(): A is the human in labeled human-machine
    sessions, so A_TO_B measures whether the B speaker (e.g. the machine)
    approaches A's units, and B_TO_A the reverse.
    """
    a_to_b = run_condition(
        corpus,
        preset,
        corpus.unit_kind,
        Direction.A_TO_B,
        (Baseline.ONE_RT,),
        seed,
        "exp2",
        k=k,
        jobs=jobs,
        epochs=epochs,
        batch_size=batch_size,
    )[Baseline.ONE_RT]
    b_to_a = run_condition(
        corpus,
        preset,
        corpus.unit_kind,
        Direction.B_TO_A,
        (Baseline.ONE_RT,),
        seed,
        "exp2",
        k=k,
        jobs=jobs,
        epochs=epochs,
        batch_size=batch_size,
    )[Baseline.ONE_RT]
    return a_to_b, b_to_a


def run_experiment_3(
    corpus: Corpus,
    presets: tuple[Preset, ...],
    seed: int,
    k: int = 10,
    jobs: int = 1,
    epochs: int = 10,
    batch_size: int = 128,
) -> list[AccuracyReport]:
    """Full preset x {ONE_RT, TEN_RT} grid on one corpus."""
    reports: list[AccuracyReport] = []
    for preset in presets:
        per_baseline = run_condition(
            corpus,
            preset,
            corpus.unit_kind,
            Direction.ANY,
            (Baseline.ONE_RT, Baseline.TEN_RT),
            seed,
            "exp3",
            k=k,
            jobs=jobs,
            epochs=epochs,
            batch_size=batch_size,
        )
        reports.append(per_baseline[Baseline.ONE_RT])
        reports.append(per_baseline[Baseline.TEN_RT])
    return reports


# ---------------------------------------------------------------------------
# Report rendering

def format_cell(mean: float, std: float) -> str:
    """Accuracy cell like "84.14 (±0.03)": percentages, two decimals."""
    return f"{mean * 100:.2f} (±{std * 100:.2f})"


def emit_report(reports: list[AccuracyReport]) -> tuple[str, str]:
    """Render reports as (csv_text, markdown_text); both deterministic."""
    if not reports:
        raise EmptyResult("emit_report requires at least one report")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "experiment_id",
            "preset",
            "unit_kind",
            "direction",
            "baseline",
            "mean",
            "std",
            "cell",
            "ties",
            "skipped",
            "per_fold_accuracy",
        ]
    )
    for r in reports:
        writer.writerow(
            [
                r.experiment_id,
                r.preset.value,
                r.unit_kind.value,
                r.direction.value,
                r.baseline.value,
                repr(r.mean),
                repr(r.std),
                format_cell(r.mean, r.std),
                sum(f.ties for f in r.fold_details),
                sum(f.skipped for f in r.fold_details),
                json.dumps(list(r.per_fold_accuracy)),
            ]
        )
    md_lines = [
        "| experiment | preset | unit kind | direction | baseline | accuracy |",
        "|---|---|---|---|---|---|",
    ]
    for r in reports:
        md_lines.append(
            f"| {r.experiment_id} | {r.preset.value} | {r.unit_kind.value} "
            f"| {r.direction.value} | {r.baseline.value} "
            f"| {format_cell(r.mean, r.std)} |"
        )
    return buf.getvalue(), "\n".join(md_lines) + "\n"


def emit_skips(reports: list[AccuracyReport]) -> str:
    """Per-fold tally CSV (pairs, correct, ties, skipped per report row)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "experiment_id",
            "preset",
            "unit_kind",
            "direction",
            "baseline",
            "fold",
            "pairs",
            "correct",
            "ties",
            "skipped",
        ]
    )
    for r in reports:
        for f in r.fold_details:
            writer.writerow(
                [
                    r.experiment_id,
                    r.preset.value,
                    r.unit_kind.value,
                    r.direction.value,
                    r.baseline.value,
                    f.fold,
                    f.pairs_total,
                    f.correct,
                    f.ties,
                    f.skipped,
                ]
            )
    return buf.getvalue()
