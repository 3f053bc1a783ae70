#!/usr/bin/env python3
"""Compile and run every corpus program, printing outcome, steps and time."""

import argparse
import sys
import time
from pathlib import Path

from frankc.errors import FrankError
from frankc.runtime import ConsoleScript, compile_program, run_compiled

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpus", type=Path, default=ROOT / "corpus")
    ap.add_argument("--input", default="00\b1 ", help="scripted console input for every program")
    args = ap.parse_args()
    for path in sorted(args.corpus.glob("*.fk")):
        start = time.perf_counter()
        try:
            compiled = compile_program(path.read_text())
            if compiled.core.body is None:
                outcome = "library (no main)"
            else:
                r = run_compiled(compiled, ConsoleScript.scripted(args.input))
                outcome = f"= {r.final_value}  [{r.step_count} steps, output {r.console_output!r}]"
        except FrankError as e:
            outcome = f"{type(e).__name__}: {e}"
        print(f"{path.stem:14} {time.perf_counter() - start:6.3f}s  {outcome}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
