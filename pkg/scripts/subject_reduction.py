#!/usr/bin/env python3
"""Type-check every intermediate term of every corpus run and report totals."""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from metatheory import drive  # noqa: E402
from frankc.errors import FrankError  # noqa: E402
from frankc.runtime import compile_program  # noqa: E402

ZEROS_INPUTS = ["00 ", "00\b1 ", "0x0 ", "000 ", "0\b\b00 ", " "]


def main() -> int:
    total = 0
    for path in sorted((ROOT / "corpus").glob("*.fk")):
        try:
            compiled = compile_program(path.read_text())
        except FrankError:
            continue
        if compiled.core.body is None:
            continue
        for text in ZEROS_INPUTS if path.stem == "zeros" else [""]:
            audit = drive(compiled, text)
            total += audit.steps
            print(f"{path.stem:14} {text!r:12} {audit.steps:6} steps  normal forms: {audit.normal_forms[-1]}")
    print(f"total: {total} steps, every reduct checked")
    return 0


if __name__ == "__main__":
    sys.exit(main())
