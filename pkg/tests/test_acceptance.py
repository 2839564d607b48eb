"""Acceptance gate: one test per shipped guarantee, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the detail lines;
every test is independent and deterministic. The heavier checks train real
models, so this file takes a few minutes end to end on one core.
"""

import json
import math
import re
import subprocess
import time
from pathlib import Path

import numpy as np

from ned_entrain import kernels
from ned_entrain.corpus import Direction, UnitKind
from ned_entrain.entrainment import Preset, preset_config
from ned_entrain.experiments import (
    Baseline,
    emit_report,
    format_cell,
    run_condition,
    run_experiment_2,
)
from ned_entrain.features import compute_functionals, zscore_apply_matrix, zscore_fit
from ned_entrain.neuralnet import LossKind, MlpSpec
from ned_entrain.synthgen import GenMode, GenSpec, generate_corpus, oracle_accuracy

from _gradcheck import finite_difference_check


def _verdict(cid: str, ok: bool, detail: str) -> None:
    print(f"[{cid}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{cid}: {detail}"


def _corpus(coupling, seed, num_sessions=50, turns=40, dim=64, mode=GenMode.SYMMETRIC_HH):
    return generate_corpus(
        GenSpec(
            num_sessions=num_sessions,
            turns_per_session=turns,
            dim=dim,
            coupling=coupling,
            mode=mode,
            seed=seed,
        )
    )


def _lld_mean(corpus, seed):
    return run_condition(
        corpus,
        Preset.LLD_AUDITORY,
        UnitKind.TURN,
        Direction.ANY,
        (Baseline.ONE_RT,),
        seed,
        "acc",
        k=10,
        jobs=1,
    )[Baseline.ONE_RT].mean


# ---------------------------------------------------------------------------

def test_c01_gradients_match_finite_differences():
    # 20 random nets (<= 8 units/layer, 1-3 hidden layers) covering plain FC,
    # batch-normed FC, the un-normed bottleneck FC, and the final affine,
    # under both losses and the dual objective.
    rng = np.random.default_rng(101)
    worst = 0.0
    t0 = time.perf_counter()
    for i in range(20):
        if i % 2 == 0:
            loss, dual = LossKind.SMOOTH_L1, (i % 4 == 0)
        else:
            loss, dual = LossKind.KL_DIVERGENCE, False
        n_hidden = int(rng.integers(1, 4))
        hidden = [int(w) for w in rng.integers(2, 9, size=n_hidden)]
        dim = int(rng.integers(2, 9))
        spec = MlpSpec(
            layer_widths=tuple([dim] + hidden + [dim]),
            bottleneck_index=1 + hidden.index(min(hidden)),
            loss_kind=loss,
            dual_loss=dual,
        )
        worst = max(worst, finite_difference_check(spec, 200 + i, loss))
    elapsed = time.perf_counter() - t0
    _verdict(
        "C01",
        worst < 1e-4 and elapsed < 10.0,
        f"max rel err {worst:.3e} over 20 nets in {elapsed:.1f}s "
        f"(bounds: 1e-4, 10s)",
    )


def test_c02_loss_oracles():
    worst_l1 = 0.0
    for d in (0.0, 0.5, -0.5, 1.0, -1.0, 3.0, -3.0):
        loss, grad = kernels.smooth_l1(
            np.array([[d]], dtype=np.float64), np.zeros((1, 1))
        )
        want_loss = 0.5 * d * d if abs(d) <= 1.0 else abs(d) - 0.5
        want_grad = d if abs(d) <= 1.0 else math.copysign(1.0, d)
        worst_l1 = max(worst_l1, abs(loss - want_loss), abs(grad[0, 0] - want_grad))

    # KL((1/2,1/2) || (1/4,3/4)) from logits (0,0) vs (0, ln 3)
    kl_case, _ = kernels.kl_softmax(
        np.zeros((1, 2)), np.array([[0.0, math.log(3.0)]])
    )
    kl_err = abs(kl_case - 0.13081203594113698)

    rng = np.random.default_rng(20240)
    min_kl = np.inf
    for _ in range(10_000):
        k = int(rng.integers(2, 12))
        p = np.ascontiguousarray(rng.normal(scale=3.0, size=(1, k)))
        q = np.ascontiguousarray(rng.normal(scale=3.0, size=(1, k)))
        loss, _ = kernels.kl_softmax(p, q)
        min_kl = min(min_kl, loss)

    _verdict(
        "C02",
        worst_l1 < 1e-12 and kl_err < 1e-6 and min_kl >= 0.0,
        f"smooth-L1 worst err {worst_l1:.2e} (<1e-12), KL case err {kl_err:.2e} "
        f"(<1e-6), min KL over 1e4 pairs {min_kl:.2e} (>=0)",
    )


def _brute_functionals(frames: np.ndarray) -> np.ndarray:
    # Independent sort-based reimplementation: plain Python sums and the
    # (n-1)*q linear-interpolation percentile.
    n, ncols = frames.shape
    out = []
    for j in range(ncols):
        col = sorted(float(v) for v in frames[:, j])

        def pct(q):
            pos = (n - 1) * q
            lo = int(pos)
            hi = lo + 1 if lo + 1 < n else lo
            frac = pos - lo
            return col[lo] + (col[hi] - col[lo]) * frac

        mean = sum(col) / n
        std = math.sqrt(sum((v - mean) ** 2 for v in col) / n)
        p1, p99 = pct(0.01), pct(0.99)
        out.extend([mean, pct(0.5), std, p1, p99, p99 - p1])
    return np.asarray(out)


def test_c03_functionals_match_brute_force():
    rng = np.random.default_rng(303)
    worst = 0.0
    for i in range(1000):
        n = int(rng.integers(1, 41))
        scale = (0.5, 1.0, 5.0)[i % 3]
        offset = float(rng.uniform(-10, 10))
        frames = rng.normal(loc=offset, scale=scale, size=(n, 38))
        got = compute_functionals(frames)
        want = _brute_functionals(frames)
        worst = max(worst, float(np.max(np.abs(got - want))))
    _verdict(
        "C03",
        worst < 1e-12,
        f"max component deviation {worst:.3e} over 1000 random matrices (<1e-12)",
    )


def test_c04_normalization_standardizes():
    rng = np.random.default_rng(404)
    x = rng.normal(size=(200, 64)) * rng.uniform(0.5, 8.0, size=64) + rng.uniform(
        -20, 20, size=64
    )
    x[:, 10] = 3.25  # constant dims are excluded from the std contract
    x[:, 40] = -1.0
    norm = zscore_fit(x)
    z = zscore_apply_matrix(x, norm)
    live = ~norm.constant_mask
    mean_err = float(np.max(np.abs(z[:, live].mean(axis=0))))
    std_err = float(np.max(np.abs(z[:, live].std(axis=0) - 1.0)))
    _verdict(
        "C04",
        mean_err < 1e-9 and std_err < 1e-9,
        f"post-normalization |mean| {mean_err:.2e}, |std-1| {std_err:.2e} (<1e-9)",
    )


def test_c05_chance_calibration_all_presets():
    t0 = time.perf_counter()
    corpus = _corpus(coupling=0.0, seed=0)
    means = {}
    for preset in Preset:
        means[preset.value] = run_condition(
            corpus,
            preset,
            UnitKind.TURN,
            Direction.ANY,
            (Baseline.ONE_RT,),
            0,
            "acc",
            k=10,
            jobs=1,
        )[Baseline.ONE_RT].mean
    elapsed = time.perf_counter() - t0
    in_band = all(0.45 <= m <= 0.55 for m in means.values())
    detail = ", ".join(f"{k} {v:.3f}" for k, v in means.items())
    _verdict(
        "C05",
        in_band and elapsed < 300.0,
        f"uncoupled 10-fold means in [0.45, 0.55]: {detail} ({elapsed:.0f}s < 300s)",
    )


def test_c06_coupling_detection_and_rank():
    accs = {}
    for seed in (0, 1, 2):
        for coupling in (0.0, 0.4, 0.8):
            accs[(seed, coupling)] = _lld_mean(_corpus(coupling, seed), seed)
    rank_holds = all(
        accs[(s, 0.8)] > accs[(s, 0.4)] > accs[(s, 0.0)] for s in (0, 1, 2)
    )
    strong = accs[(0, 0.8)]

    # the raw-feature brute force bounds what a trained model can reach
    band_hi = oracle_accuracy(
        GenSpec(num_sessions=50, turns_per_session=40, dim=64, coupling=0.8, seed=0),
        reps=3,
    )
    band_chance = oracle_accuracy(
        GenSpec(num_sessions=50, turns_per_session=40, dim=64, coupling=0.0, seed=0),
        reps=3,
    )
    oracle_ok = (
        band_hi.mean >= 0.75
        and strong <= band_hi.hi + 0.02
        and 0.45 <= band_chance.mean <= 0.55
    )
    per_seed = "; ".join(
        f"seed {s}: " + " > ".join(f"{accs[(s, c)]:.3f}" for c in (0.8, 0.4, 0.0))
        for s in (0, 1, 2)
    )
    _verdict(
        "C06",
        strong >= 0.75 and rank_holds and oracle_ok,
        f"coupled mean {strong:.3f} (>=0.75); rank over 3 seeds: {per_seed}; "
        f"oracle bands {band_hi.mean:.3f} / {band_chance.mean:.3f}",
    )


def test_c07_directional_asymmetry():
    gaps, uncoupled = [], []
    for seed in range(5):
        corpus = _corpus(0.8, seed, mode=GenMode.ONE_WAY_HM)
        a_to_b, b_to_a = run_experiment_2(corpus, seed=seed, k=10, jobs=1)
        gaps.append(b_to_a.mean - a_to_b.mean)
        uncoupled.append(a_to_b.mean)
    mean_gap = float(np.mean(gaps))
    band_ok = all(0.40 <= u <= 0.60 for u in uncoupled)
    _verdict(
        "C07",
        mean_gap >= 0.10 and band_ok,
        f"coupled-uncoupled gap {mean_gap:.3f} over 5 seeds (>=0.10); "
        f"uncoupled per seed {[round(u, 3) for u in uncoupled]} in [0.40, 0.60]",
    )


def test_c08_dual_loss_ablation():
    dual, single = [], []
    for seed in range(5):
        corpus = _corpus(0.3, seed, num_sessions=12, turns=30, dim=768)
        for bucket, flag in ((dual, True), (single, False)):
            bucket.append(
                run_condition(
                    corpus,
                    Preset.SENT_SEMANTIC,
                    UnitKind.TURN,
                    Direction.ANY,
                    (Baseline.ONE_RT,),
                    seed,
                    "acc",
                    k=10,
                    jobs=1,
                    dual_loss=flag,
                )[Baseline.ONE_RT].mean
            )
    mean_dual, mean_single = float(np.mean(dual)), float(np.mean(single))
    _verdict(
        "C08",
        mean_dual >= mean_single,
        f"dual {mean_dual:.4f} >= single {mean_single:.4f} over 5 seeds "
        f"(per-seed gaps {[round(d - s, 4) for d, s in zip(dual, single)]})",
    )


def test_c09_experiment_runs_are_byte_identical(tmp_path, monkeypatch):
    monkeypatch.delenv("NED_SEED", raising=False)
    spec_path = tmp_path / "gen.json"
    spec_path.write_text(
        json.dumps(
            {
                "num_sessions": 12,
                "turns_per_session": 26,
                "dim": 16,
                "coupling": 0.8,
                "seed": 0,
            }
        ),
        encoding="utf-8",
    )
    corpus_dir = tmp_path / "corpus"
    subprocess.run(
        ["ned-entrain", "synth", "--spec", str(spec_path), "--out-dir", str(corpus_dir)],
        check=True,
        capture_output=True,
        timeout=120,
    )
    outputs = []
    for name in ("runA", "runB"):
        out_dir = tmp_path / name
        subprocess.run(
            [
                "ned-entrain", "experiment", "--id", "3",
                "--manifest", str(corpus_dir / "manifest.json"),
                "--out-dir", str(out_dir), "--seed", "0", "--k", "10", "--jobs", "1",
            ],
            check=True,
            capture_output=True,
            timeout=600,
        )
        outputs.append(out_dir)
    report_same = (outputs[0] / "report.csv").read_bytes() == (
        outputs[1] / "report.csv"
    ).read_bytes()
    skips_same = (outputs[0] / "skips.csv").read_bytes() == (
        outputs[1] / "skips.csv"
    ).read_bytes()
    _verdict(
        "C09",
        report_same and skips_same,
        "two `experiment --id 3` runs with the same seed wrote byte-identical "
        "report.csv and skips.csv",
    )


def test_c10_report_cell_format():
    exact = format_cell(0.8414, 0.0003) == "84.14 (±0.03)"

    # and the formatter is what a real synthetic report flows through
    corpus = _corpus(0.8, 0, num_sessions=6, turns=12, dim=6)
    report = run_condition(
        corpus,
        Preset.LLD_AUDITORY,
        UnitKind.TURN,
        Direction.ANY,
        (Baseline.ONE_RT,),
        0,
        "acc",
        k=3,
        jobs=1,
        epochs=1,
    )[Baseline.ONE_RT]
    csv_text, _ = emit_report([report])
    cell = csv_text.splitlines()[1].split(",")[7]
    cell_ok = cell == format_cell(report.mean, report.std) and re.fullmatch(
        r"\d+\.\d{2} \(±\d+\.\d{2}\)", cell
    )
    _verdict(
        "C10",
        exact and bool(cell_ok),
        f'format_cell(0.8414, 0.0003) == "84.14 (±0.03)"; synthetic report '
        f'cell "{cell}" matches the pattern',
    )
