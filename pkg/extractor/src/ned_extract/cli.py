"""Command-line entry point.

Runs one extraction job and optionally hands the result straight to the
downstream validator. The adapter talks to the core toolkit only through
its public surface: the corpus files it writes and the `ned-entrain`
executable it invokes; it imports nothing from it.

Exit codes: 0 success, 1 extraction or validation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import shutil
import subprocess
import sys

from . import __version__
from .errors import ExtractError
from .extract import extract, load_job


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ned-extract",
        description="embed transcript units into a canonical corpus",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--job", required=True, help="job JSON path")
    parser.add_argument(
        "--validate",
        action="store_true",
        help="run `ned-entrain validate` on the written manifest",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        job = load_job(args.job)
        result = extract(job)
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {result.sessions} sessions, {result.units} units"
        f" -> {job.out_dir}"
    )
    print(f"manifest: {result.manifest_path}")
    if args.validate:
        exe = shutil.which("ned-entrain")
        if exe is None:
            print("error: ned-entrain not found on PATH", file=sys.stderr)
            return 1
        proc = subprocess.run(
            [exe, "validate", "--manifest", str(result.manifest_path)]
        )
        return proc.returncode
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
