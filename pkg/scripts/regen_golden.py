"""Rewrite tests/golden/*.out from the current build.

Run after an intended change of CLI output, then review the diff.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from golden_cases import GOLDEN, cases, run_case  # noqa: E402


def main():
    names = set()
    for name, args in cases():
        names.add(name)
        (GOLDEN / f"{name}.out").write_text(run_case(args))
    for stale in GOLDEN.glob("*.out"):
        if stale.stem not in names:
            stale.unlink()
    print(f"wrote {len(names)} golden files")


if __name__ == "__main__":
    main()
