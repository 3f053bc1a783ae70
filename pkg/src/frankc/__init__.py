"""A checker, elaborator and small-step interpreter for Frank programs."""

from .errors import FrankError
from .runtime import CONSOLE, PURE, RunResult, compile_program, run_compiled, run_source

__all__ = ["CONSOLE", "PURE", "FrankError", "RunResult", "compile_program", "run_compiled", "run_source"]
__version__ = "0.1.0"
