"""Command-line entry point: ``frankc check|elaborate|run FILE...``."""

from __future__ import annotations

import argparse
import sys

from . import core as C
from .errors import DesugarError, FrankError, InternalError
from .runtime import CONSOLE, PURE, ConsoleScript, compile_program, run_compiled

EXIT_OK, EXIT_STATIC, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2, 3

_ESCAPES = {"b": "\b", "n": "\n", "t": "\t", "r": "\r", "0": "\0", "\\": "\\"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def decode_input(text: str) -> str:
    """Interpret backslash escapes in ``--input`` (``\\b`` is backspace)."""
    out, chars = [], iter(text)
    for ch in chars:
        if ch == "\\":
            nxt = next(chars, "\\")
            out.append(_ESCAPES.get(nxt, "\\" + nxt))
        else:
            out.append(ch)
    return "".join(out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="frankc", description="Check, elaborate and run Frank programs.")
    parser.add_argument("command", choices=["check", "elaborate", "run"])
    parser.add_argument("paths", nargs="+", metavar="FILE")
    parser.add_argument("--input", help="scripted console input; \\b denotes backspace")
    parser.add_argument("--top-ability", choices=["pure", "console"], default="console")
    parser.add_argument("--trace", action="store_true", help="print every intermediate term to stderr")
    parser.add_argument("--fuel", type=int, default=10 ** 7)
    parser.add_argument("--no-prelude", action="store_true")
    return parser


def _report(err: FrankError, path: str) -> None:
    print(err.diagnostic(path), file=sys.stderr)


def process(args, path: str) -> int:
    try:
        with open(path, encoding="utf-8") as f:
            source = f.read()
    except OSError as e:
        print(f"{path}:0:0: error: UsageError: {e.strerror}", file=sys.stderr)
        return EXIT_USAGE
    top = PURE if args.top_ability == "pure" else CONSOLE
    try:
        compiled = compile_program(source, top, prelude=not args.no_prelude)
        for w in compiled.typed.warnings:
            print(f"{path}: warning: {w}", file=sys.stderr)
    except FrankError as e:
        _report(e, path)
        return EXIT_STATIC
    except RecursionError:
        _report(InternalError("program nested too deeply"), path)
        return EXIT_STATIC
    if args.command == "check":
        return EXIT_OK
    if args.command == "elaborate":
        print(C.show_core(compiled.core))
        return EXIT_OK
    if compiled.core.body is None:
        print(f"{path}:0:0: error: UsageError: run requires a main definition", file=sys.stderr)
        return EXIT_USAGE
    if args.input is None:
        script = ConsoleScript(interactive=True)
    else:
        script = ConsoleScript.scripted(decode_input(args.input), echo=True)
    trace = None
    if args.trace:
        def trace(term, rule):
            print(f"--> [{rule}]\n{C.show_core(term)}", file=sys.stderr)
    try:
        result = run_compiled(compiled, script, args.fuel, trace)
    except DesugarError as e:
        _report(e, path)
        return EXIT_USAGE
    except FrankError as e:
        _report(e, path)
        return EXIT_RUNTIME
    except RecursionError:
        _report(InternalError("evaluation nested too deeply"), path)
        return EXIT_RUNTIME
    finally:
        sys.stdout.flush()
    if result.console_output and not result.console_output.endswith("\n"):
        print()
    if result.exit_kind != "value":
        print(f"{path}:0:0: error: Unhandled: {result.exit_kind} after {result.step_count} steps",
              file=sys.stderr)
        return EXIT_RUNTIME
    print(f"= {result.final_value}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"frankc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.fuel <= 0:
        print("frankc: error: --fuel must be positive", file=sys.stderr)
        return EXIT_USAGE
    status = EXIT_OK
    for path in args.paths:
        status = max(status, process(args, path))
    return status


if __name__ == "__main__":
    sys.exit(main())
