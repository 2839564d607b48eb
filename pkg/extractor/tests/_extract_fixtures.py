"""Builders shared by the adapter tests."""

from __future__ import annotations

import copy
import json
import wave
from pathlib import Path


def two_turn_transcripts() -> dict:
    return {
        "corpus_name": "toy",
        "sessions": [
            {
                "session_id": "s01",
                "speakers": ["ana", "ben"],
                "units": [
                    {
                        "speaker": "ana",
                        "start_s": 0.0,
                        "end_s": 1.2,
                        "text": "well hello there",
                    },
                    {
                        "speaker": "ben",
                        "start_s": 1.4,
                        "end_s": 2.0,
                        "text": "hello yourself",
                    },
                ],
            }
        ],
    }


def alternating_transcripts(num_units: int) -> dict:
    obj = two_turn_transcripts()
    units = []
    for i in range(num_units):
        units.append(
            {
                "speaker": "ana" if i % 2 == 0 else "ben",
                "start_s": 2.0 * i,
                "end_s": 2.0 * i + 1.5,
                "text": f"utterance number {i} spoken aloud",
            }
        )
    obj["sessions"][0]["units"] = units
    return obj


def write_json(path: Path, obj: dict) -> Path:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    return path


def write_job(
    tmp_path: Path,
    transcripts: dict,
    family: str = "SENT768",
    out_name: str = "out",
    **overrides,
) -> Path:
    manifest = write_json(tmp_path / "transcripts.json", copy.deepcopy(transcripts))
    job = {
        "input_manifest": str(manifest),
        "family": family,
        "out_dir": str(tmp_path / out_name),
    }
    job.update(overrides)
    return write_json(tmp_path / "job.json", job)


def write_wav(path: Path, seed: int = 0, frames: int = 40) -> Path:
    raw = bytearray()
    for i in range(frames):
        value = (i * 13 + seed * 7) % 251 - 125
        raw += int(value).to_bytes(2, "little", signed=True)
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(8000)
        writer.writeframes(bytes(raw))
    return path


def read_records(session_path: Path) -> list[dict]:
    lines = session_path.read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines]
