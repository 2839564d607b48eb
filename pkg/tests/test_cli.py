"""End-to-end CLI behavior: exit codes, artifacts, and reproducibility."""

import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ned_entrain.cli import main

SPEC = {
    "num_sessions": 6,
    "turns_per_session": 12,
    "dim": 6,
    "coupling": 0.8,
    "seed": 0,
}


@pytest.fixture(autouse=True)
def _isolate_env(monkeypatch):
    monkeypatch.delenv("NED_SEED", raising=False)
    monkeypatch.delenv("NED_BACKEND", raising=False)


def _write_spec(tmp_path, **overrides) -> Path:
    spec = dict(SPEC)
    spec.update(overrides)
    path = tmp_path / "gen.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    return path


def _synth(tmp_path, out_name="corpus", **overrides) -> Path:
    out_dir = tmp_path / out_name
    spec_path = _write_spec(tmp_path, **overrides)
    assert main(["synth", "--spec", str(spec_path), "--out-dir", str(out_dir)]) == 0
    return out_dir / "manifest.json"


# ---------------------------------------------------------------------------
# synth + validate

def test_synth_then_validate_round_trip(tmp_path, capsys):
    manifest = _synth(tmp_path)
    assert manifest.is_file()
    run = json.loads((manifest.parent / "run.json").read_text())
    assert run["command"] == "synth"
    assert run["config"]["seed"] == 0
    assert run["config"]["coupling"] == 0.8
    assert set(run) == {"command", "config", "backend", "version"}

    assert main(["validate", "--manifest", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert "OK: 6 sessions, 72 units" in out
    assert "dim=6" in out
    assert "unit_kind=TURN" in out


def test_validate_reports_corruption_on_stderr(tmp_path, capsys):
    manifest = _synth(tmp_path)
    session_file = manifest.parent / "synth-0000.jsonl"
    lines = session_file.read_text().splitlines()
    bad = json.loads(lines[1])
    bad["features"] = []
    lines[1] = json.dumps(bad)
    session_file.write_text("\n".join(lines) + "\n", encoding="utf-8")

    assert main(["validate", "--manifest", str(manifest)]) == 1
    err = capsys.readouterr().err
    assert "synth-0000" in err
    assert "line 2" in err


def test_validate_missing_manifest_fails_with_diagnostic(tmp_path, capsys):
    assert main(["validate", "--manifest", str(tmp_path / "nope.json")]) == 1
    assert "manifest not found" in capsys.readouterr().err


def test_unknown_flag_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["validate", "--manifesto", "x.json"])
    assert exc.value.code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


# ---------------------------------------------------------------------------
# Seed resolution

def test_env_seed_overrides_cli_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("NED_SEED", "7")
    out_dir = tmp_path / "c"
    spec_path = _write_spec(tmp_path)
    assert main(
        ["synth", "--spec", str(spec_path), "--out-dir", str(out_dir), "--seed", "3"]
    ) == 0
    run = json.loads((out_dir / "run.json").read_text())
    assert run["config"]["seed"] == 7


def test_cli_seed_overrides_spec_seed(tmp_path):
    out_dir = tmp_path / "c"
    spec_path = _write_spec(tmp_path)
    assert main(
        ["synth", "--spec", str(spec_path), "--out-dir", str(out_dir), "--seed", "3"]
    ) == 0
    run = json.loads((out_dir / "run.json").read_text())
    assert run["config"]["seed"] == 3


# ---------------------------------------------------------------------------
# functionals

def _write_frames_corpus(tmp_path) -> Path:
    frames_dir = tmp_path / "frames"
    frames_dir.mkdir()
    rng = np.random.default_rng(0)
    units = []
    for i, speaker in enumerate(("A", "B", "A", "B")):
        name = f"u{i}.csv"
        frames = rng.normal(size=(6, 38))
        with (frames_dir / name).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"lld_{j}" for j in range(38)])
            writer.writerows(frames.tolist())
        units.append(
            {
                "session_id": "sess-1",
                "speaker": speaker,
                "unit_index": i,
                "start_s": 2.0 * i,
                "end_s": 2.0 * i + 1.0,
                "unit_kind": "TURN",
                "turn_index": i,
                "frames_csv": name,
            }
        )
    with (frames_dir / "units.jsonl").open("w", encoding="utf-8") as fh:
        for u in units:
            fh.write(json.dumps(u) + "\n")
    return frames_dir


def test_functionals_builds_loadable_session(tmp_path, capsys):
    frames_dir = _write_frames_corpus(tmp_path)
    out = tmp_path / "corpus" / "sess-1.jsonl"
    assert main(["functionals", "--frames-dir", str(frames_dir), "--out", str(out)]) == 0
    assert "wrote 4 units" in capsys.readouterr().out

    records = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(records) == 4
    for rec in records:
        assert len(rec["features"]) == 228
        assert rec["feature_set"] == "LLD228"
    assert (out.parent / "sess-1.jsonl.run.json").is_file()

    manifest = out.parent / "manifest.json"
    manifest.write_text(
        json.dumps(
            {
                "corpus_name": "frames-test",
                "feature_set": "LLD228",
                "unit_kind": "TURN",
                "sessions": [
                    {
                        "session_id": "sess-1",
                        "path": "sess-1.jsonl",
                        "interlocutor_kind": "HUMAN_HUMAN",
                        "speakers": ["A", "B"],
                    }
                ],
            }
        ),
        encoding="utf-8",
    )
    assert main(["validate", "--manifest", str(manifest)]) == 0


def test_functionals_rejects_malformed_frames(tmp_path, capsys):
    frames_dir = _write_frames_corpus(tmp_path)
    (frames_dir / "u1.csv").write_text("a,b,c\n1,2,3\n", encoding="utf-8")
    out = tmp_path / "out.jsonl"
    assert main(["functionals", "--frames-dir", str(frames_dir), "--out", str(out)]) == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# train + score

def test_train_then_score_round_trip(tmp_path, capsys):
    manifest = _synth(tmp_path)
    model_path = tmp_path / "model.npz"
    assert main(
        [
            "train", "--preset", "lld", "--manifest", str(manifest),
            "--out", str(model_path), "--epochs", "2", "--batch-size", "32",
        ]
    ) == 0
    assert model_path.is_file()
    run = json.loads((tmp_path / "model.npz.run.json").read_text())
    assert run["command"] == "train"
    assert run["config"]["epochs"] == 2
    assert np.isfinite(run["config"]["final_loss"])

    scores = tmp_path / "scores.csv"
    assert main(
        [
            "score", "--model", str(model_path), "--manifest", str(manifest),
            "--out", str(scores),
        ]
    ) == 0
    rows = list(csv.reader(scores.read_text().splitlines()))
    assert rows[0] == [
        "session_id",
        "pair_index",
        "ned_consecutive",
        "ned_nonconsec_1",
        "ned_nonconsec_mean10",
    ]
    assert len(rows) == 1 + 6 * 11  # every consecutive pair of every session
    for row in rows[1:]:
        float(row[2])
        float(row[3])
        # 12-turn sessions cannot supply ten distinct non-consecutive units
        assert row[4] == ""

    # identical inputs and seed reproduce the file byte for byte
    scores2 = tmp_path / "scores2.csv"
    assert main(
        [
            "score", "--model", str(model_path), "--manifest", str(manifest),
            "--out", str(scores2),
        ]
    ) == 0
    assert scores.read_bytes() == scores2.read_bytes()


def test_score_rejects_dim_mismatch(tmp_path, capsys):
    manifest = _synth(tmp_path)
    other_manifest = _synth(tmp_path, out_name="corpus9", dim=9)
    model_path = tmp_path / "model.npz"
    assert main(
        [
            "train", "--preset", "lld", "--manifest", str(manifest),
            "--out", str(model_path), "--epochs", "1",
        ]
    ) == 0
    assert main(
        [
            "score", "--model", str(model_path), "--manifest", str(other_manifest),
            "--out", str(tmp_path / "s.csv"),
        ]
    ) == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# experiment

def _run_experiment(tmp_path, manifest, out_name, extra=()):
    out_dir = tmp_path / out_name
    args = [
        "experiment", "--manifest", str(manifest), "--out-dir", str(out_dir),
        "--k", "3", "--epochs", "1", "--jobs", "1", *extra,
    ]
    assert main(args) == 0
    return out_dir


def test_experiment_3_writes_all_artifacts(tmp_path, capsys):
    manifest = _synth(tmp_path)
    out_dir = _run_experiment(
        tmp_path, manifest, "exp3", ["--id", "3", "--presets", "lld"]
    )
    for name in ("report.csv", "report.md", "skips.csv", "run.json"):
        assert (out_dir / name).is_file(), name
    stdout = capsys.readouterr().out
    assert (out_dir / "report.md").read_text() in stdout

    rows = list(csv.reader((out_dir / "report.csv").read_text().splitlines()))
    assert len(rows) == 3  # header + ONE_RT + TEN_RT
    assert {r[4] for r in rows[1:]} == {"ONE_RT", "TEN_RT"}
    run = json.loads((out_dir / "run.json").read_text())
    assert run["config"]["id"] == 3
    assert run["config"]["k"] == 3


def test_experiment_2_reports_both_directions(tmp_path):
    spec_over = {"mode": "ONE_WAY_HM", "num_sessions": 6}
    manifest = _synth(tmp_path, **spec_over)
    out_dir = _run_experiment(tmp_path, manifest, "exp2", ["--id", "2"])
    rows = list(csv.reader((out_dir / "report.csv").read_text().splitlines()))
    assert [r[3] for r in rows[1:]] == ["A_TO_B", "B_TO_A"]


def test_experiment_1_defaults_to_relabeled_ipu_view(tmp_path):
    manifest = _synth(tmp_path)
    out_dir = _run_experiment(tmp_path, manifest, "exp1", ["--id", "1"])
    rows = list(csv.reader((out_dir / "report.csv").read_text().splitlines()))
    assert [r[2] for r in rows[1:]] == ["IPU", "TURN"]
    # same underlying corpus, so the two views score identically
    assert rows[1][5] == rows[2][5]


def test_experiment_reruns_are_byte_identical(tmp_path):
    manifest = _synth(tmp_path)
    first = _run_experiment(
        tmp_path, manifest, "runA", ["--id", "3", "--presets", "lld,use"]
    )
    second = _run_experiment(
        tmp_path, manifest, "runB", ["--id", "3", "--presets", "lld,use"]
    )
    assert (first / "report.csv").read_bytes() == (second / "report.csv").read_bytes()
    assert (first / "skips.csv").read_bytes() == (second / "skips.csv").read_bytes()


# ---------------------------------------------------------------------------
# Console script

def test_console_script_runs_end_to_end(tmp_path):
    spec_path = _write_spec(tmp_path)
    out_dir = tmp_path / "cs"
    for args in (
        ["synth", "--spec", str(spec_path), "--out-dir", str(out_dir)],
        ["validate", "--manifest", str(out_dir / "manifest.json")],
    ):
        proc = subprocess.run(
            ["ned-entrain", *args], capture_output=True, text=True, timeout=120
        )
        assert proc.returncode == 0, proc.stderr
    assert "OK: 6 sessions" in proc.stdout
