"""Command-line entry point.

Subcommands: validate, functionals, synth, train, score, experiment.
Every writing run records its fully resolved configuration (defaults
included) as run.json inside --out-dir, or as `<out>.run.json` beside a
single-file output. run.json carries no timestamps, so identical runs
produce identical bytes. The env var NED_SEED overrides --seed when set;
NED_BACKEND picks the numerical backend (see ned_entrain.kernels).

Exit codes: 0 success, 1 validation or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .corpus import (
    Direction,
    FeatureSet,
    UnitKind,
    build_consecutive_pairs,
    load_manifest,
    relabel_unit_kind,
    stable_session_hash,
    sample_nonconsecutive,
    validate_manifest,
    write_corpus,
)
from .entrainment import (
    Preset,
    apply_metric,
    encode_matrix,
    load_model,
    preset_config,
    save_model,
    train_model,
)
from .errors import (
    DimensionMismatch,
    EmptyResult,
    InsufficientUnits,
    NedError,
    SchemaViolation,
    ZeroVector,
)
from .experiments import (
    emit_report,
    emit_skips,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
)
from .features import NUM_DESCRIPTORS, compute_functionals, zscore_fit
from .synthgen import parse_gen_spec

_PRESET_NAMES = {
    "lld": Preset.LLD_AUDITORY,
    "trill": Preset.TRILL_AUDITORY,
    "sent": Preset.SENT_SEMANTIC,
    "use": Preset.USE_SEMANTIC,
}

_DIRECTION_NAMES = {
    "any": Direction.ANY,
    "a_to_b": Direction.A_TO_B,
    "b_to_a": Direction.B_TO_A,
}


def _default_jobs() -> int:
    getter = getattr(os, "process_cpu_count", os.cpu_count)
    return getter() or 1


def _resolve_seed(args: argparse.Namespace) -> int:
    env = os.environ.get("NED_SEED")
    if env is not None and env.strip():
        return int(env)
    return args.seed


def _write_run_json(path: Path, command: str, config: dict) -> None:
    payload = {
        "command": command,
        "config": config,
        "backend": kernels.BACKEND,
        "version": __version__,
    }
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Subcommand handlers

def _cmd_validate(args: argparse.Namespace) -> int:
    diagnostics = validate_manifest(args.manifest)
    for line in diagnostics:
        print(line, file=sys.stderr)
    if diagnostics:
        return 1
    corpus = load_manifest(args.manifest)
    total_units = sum(len(s.units) for s in corpus.sessions)
    print(
        f"OK: {len(corpus.sessions)} sessions, {total_units} units, "
        f"feature_set={corpus.feature_set.value}, dim={corpus.dim}, "
        f"unit_kind={corpus.unit_kind.value}"
    )
    return 0


def _read_frames_csv(path: Path) -> np.ndarray:
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaViolation(f"{path}: empty frames CSV")
        if len(header) != NUM_DESCRIPTORS:
            raise DimensionMismatch(
                f"{path}: expected {NUM_DESCRIPTORS} descriptor columns, "
                f"got {len(header)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != NUM_DESCRIPTORS:
                raise DimensionMismatch(
                    f"{path} line {lineno}: expected {NUM_DESCRIPTORS} values, "
                    f"got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise SchemaViolation(f"{path} line {lineno}: non-numeric value")
    if not rows:
        raise SchemaViolation(f"{path}: no frame rows")
    return np.asarray(rows, dtype=np.float64)


def _cmd_functionals(args: argparse.Namespace) -> int:
    frames_dir = Path(args.frames_dir)
    units_path = frames_dir / "units.jsonl"
    if not units_path.is_file():
        raise SchemaViolation(f"{frames_dir}: missing units.jsonl")
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with units_path.open("r", encoding="utf-8") as fh, out_path.open(
        "w", encoding="utf-8"
    ) as out:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                meta = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(
                    f"{units_path} line {lineno}: invalid JSON ({exc.msg})"
                )
            required = (
                "session_id",
                "speaker",
                "unit_index",
                "start_s",
                "end_s",
                "unit_kind",
                "turn_index",
                "frames_csv",
            )
            missing = [k for k in required if k not in meta]
            if missing:
                raise SchemaViolation(
                    f"{units_path} line {lineno}: missing fields {missing}"
                )
            frames = _read_frames_csv(frames_dir / meta["frames_csv"])
            features = compute_functionals(frames)
            record = {
                "session_id": meta["session_id"],
                "speaker": meta["speaker"],
                "unit_index": meta["unit_index"],
                "start_s": meta["start_s"],
                "end_s": meta["end_s"],
                "unit_kind": meta["unit_kind"],
                "turn_index": meta["turn_index"],
                "features": [float(x) for x in features],
                "feature_set": FeatureSet.LLD228.value,
            }
            out.write(json.dumps(record, separators=(",", ":")) + "\n")
            count += 1
    if count == 0:
        raise EmptyResult(f"{units_path}: no units")
    _write_run_json(
        Path(str(out_path) + ".run.json"),
        "functionals",
        {"frames_dir": str(frames_dir), "out": str(out_path)},
    )
    print(f"wrote {count} units to {out_path}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    from .synthgen import generate_corpus

    spec_obj = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    spec = parse_gen_spec(spec_obj)
    env_seed = os.environ.get("NED_SEED")
    if env_seed is not None and env_seed.strip():
        spec = replace(spec, seed=int(env_seed))
    elif args.seed is not None:
        spec = replace(spec, seed=args.seed)
    out_dir = Path(args.out_dir)
    corpus = generate_corpus(spec)
    manifest_path = write_corpus(corpus, out_dir)
    resolved = asdict(spec)
    resolved["mode"] = spec.mode.value
    _write_run_json(out_dir / "run.json", "synth", resolved)
    print(f"wrote {len(corpus.sessions)} sessions to {manifest_path}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    corpus = load_manifest(args.manifest)
    preset = _PRESET_NAMES[args.preset]
    direction = _DIRECTION_NAMES[args.direction]
    config = preset_config(
        preset,
        input_dim=corpus.dim,
        epochs=args.epochs,
        batch_size=args.batch_size,
    )
    pair_sets = []
    for session in corpus.sessions:
        try:
            pair_sets.append(
                build_consecutive_pairs(session, corpus.unit_kind, direction)
            )
        except EmptyResult:
            continue
    unit_feats = np.stack(
        [u.features for s in corpus.sessions for u in s.units]
    )
    norm = zscore_fit(unit_feats)
    model = train_model(config, pair_sets, seed, norm=norm)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out_path)
    _write_run_json(
        Path(str(out_path) + ".run.json"),
        "train",
        {
            "preset": args.preset,
            "manifest": str(args.manifest),
            "seed": seed,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "direction": args.direction,
            "out": str(out_path),
            "final_loss": model.training_log[-1],
        },
    )
    print(
        f"trained {preset.value} on {len(corpus.sessions)} sessions; "
        f"final epoch loss {model.training_log[-1]:.6f}; saved to {out_path}"
    )
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    model = load_model(args.model)
    corpus = load_manifest(args.manifest)
    if corpus.dim != model.config.spec.input_dim:
        raise DimensionMismatch(
            f"corpus dim {corpus.dim} != model input {model.config.spec.input_dim}"
        )
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    metric = model.config.ned_metric
    with out_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "session_id",
                "pair_index",
                "ned_consecutive",
                "ned_nonconsec_1",
                "ned_nonconsec_mean10",
            ]
        )
        for session in corpus.sessions:
            try:
                pairs = build_consecutive_pairs(
                    session, corpus.unit_kind, Direction.ANY
                )
            except EmptyResult:
                continue
            feats = np.stack([u.features for u in session.units])
            z = encode_matrix(model, feats)
            emb = {u.unit_index: z[i] for i, u in enumerate(session.units)}
            shash = stable_session_hash(session.session_id)
            for pair_index, (x1, x2) in enumerate(pairs.pairs):
                def _metric(za, zb) -> str:
                    try:
                        return repr(apply_metric(metric, za, zb))
                    except ZeroVector:
                        return ""

                ned_c = _metric(emb[x1.unit_index], emb[x2.unit_index])
                cells = {}
                for count in (1, 10):
                    try:
                        sampled = sample_nonconsecutive(
                            session, x1, count, [seed, 20, shash, pair_index, count]
                        )
                    except InsufficientUnits:
                        cells[count] = ""
                        continue
                    vals = []
                    try:
                        for u in sampled:
                            vals.append(
                                apply_metric(
                                    metric, emb[x1.unit_index], emb[u.unit_index]
                                )
                            )
                        cells[count] = repr(float(np.mean(vals)))
                    except ZeroVector:
                        cells[count] = ""
                writer.writerow(
                    [session.session_id, pair_index, ned_c, cells[1], cells[10]]
                )
    _write_run_json(
        Path(str(out_path) + ".run.json"),
        "score",
        {
            "model": str(args.model),
            "manifest": str(args.manifest),
            "seed": seed,
            "out": str(out_path),
        },
    )
    print(f"wrote scores to {out_path}")
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = load_manifest(args.manifest)
    common = dict(
        k=args.k, jobs=args.jobs, epochs=args.epochs, batch_size=args.batch_size
    )
    if args.id == 1:
        if args.manifest_ipu:
            corpus_ipu = load_manifest(args.manifest_ipu)
        else:
            # Degenerate one-IPU-per-turn view of the same corpus.
            corpus_ipu = relabel_unit_kind(corpus, UnitKind.IPU)
        reports = list(run_experiment_1(corpus_ipu, corpus, seed, **common))
    elif args.id == 2:
        preset = _PRESET_NAMES[args.preset]
        reports = list(run_experiment_2(corpus, seed, preset=preset, **common))
    else:
        presets = tuple(
            _PRESET_NAMES[name.strip()] for name in args.presets.split(",") if name.strip()
        )
        if not presets:
            raise SchemaViolation("--presets must name at least one preset")
        reports = run_experiment_3(corpus, presets, seed, **common)
    csv_text, md_text = emit_report(reports)
    (out_dir / "report.csv").write_text(csv_text, encoding="utf-8")
    (out_dir / "report.md").write_text(md_text, encoding="utf-8")
    (out_dir / "skips.csv").write_text(emit_skips(reports), encoding="utf-8")
    _write_run_json(
        out_dir / "run.json",
        "experiment",
        {
            "id": args.id,
            "manifest": str(args.manifest),
            "manifest_ipu": str(args.manifest_ipu) if args.manifest_ipu else None,
            "preset": args.preset,
            "presets": args.presets,
            "seed": seed,
            "k": args.k,
            "jobs": args.jobs,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "out_dir": str(out_dir),
        },
    )
    sys.stdout.write(md_text)
    return 0


# ---------------------------------------------------------------------------
# Parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ned-entrain",
        description="Neural entrainment distance toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a corpus manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser(
        "functionals", help="compute LLD functionals from frame CSVs"
    )
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--out", required=True, help="output session JSONL path")
    p.set_defaults(func=_cmd_functionals)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", required=True, help="generator spec JSON path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override spec seed")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train one model on a whole corpus")
    p.add_argument("--preset", required=True, choices=sorted(_PRESET_NAMES))
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint output path (.npz)")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument(
        "--direction", choices=sorted(_DIRECTION_NAMES), default="any"
    )
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("score", help="score consecutive pairs with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("experiment", help="run a k-fold experiment")
    p.add_argument("--id", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--manifest", required=True)
    p.add_argument(
        "--manifest-ipu",
        default=None,
        help="IPU corpus for experiment 1 (defaults to a one-IPU-per-turn "
        "view of --manifest)",
    )
    p.add_argument(
        "--preset",
        choices=sorted(_PRESET_NAMES),
        default="lld",
        help="preset for experiment 2",
    )
    p.add_argument(
        "--presets",
        default="lld,trill,sent,use",
        help="comma list of presets for experiment 3",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=128)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
