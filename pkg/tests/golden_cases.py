"""Shared runner for the golden-file suite (used by the tests and by
``scripts/regen_golden.py``)."""

import io
import os
import shlex
from pathlib import Path

from cotrans.cli import main

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"


def cases():
    out = []
    for line in (GOLDEN / "cases.txt").read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, _, args = line.partition("|")
        out.append((name.strip(), shlex.split(args)))
    return out


def run_case(args) -> str:
    """Report text of one invocation: stdout, then the exit status."""
    buf = io.StringIO()
    old = os.getcwd()
    os.chdir(ROOT)
    try:
        status = main(args, stdout=buf)
    finally:
        os.chdir(old)
    return buf.getvalue() + f"; exit {status}\n"


def expected(name: str) -> str:
    return (GOLDEN / f"{name}.out").read_text()
