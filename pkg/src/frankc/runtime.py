"""Program driver: prelude, checking, elaboration, evaluation and Console I/O."""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass, field
from importlib import resources

from . import core as C
from .desugar import Program, desugar
from .elaborate import elaborate_program
from .errors import DesugarError, EmptyScriptedInput, FuelExhausted
from .evaluator import Normal, Stepper, erase, eval_to_normal, plug_all, reachable_bindings
from .lexer import lex
from .parser import SurfaceProgram, parse_program
from .syntax import CHAR, EMPTY, Ability, DataType, Instance
from .typecheck import TypedProgram, check_program

PURE = Ability(EMPTY)
CONSOLE = Ability(EMPTY, (Instance("Console", ()),))
UNIT = DataType("Unit")


def prelude_source() -> str:
    return resources.files("frankc").joinpath("prelude.fk").read_text(encoding="utf-8")


def load_program(source: str, prelude: bool = True) -> Program:
    """Parse ``source`` (after the prelude, unless disabled) and desugar it."""
    items = ()
    if prelude:
        items = parse_program(lex(prelude_source())).items
    items += parse_program(lex(source)).items
    return desugar(SurfaceProgram(items))


@dataclass
class ConsoleScript:
    """Console input and output; scripted input never blocks."""

    input: deque = field(default_factory=deque)
    output: list = field(default_factory=list)
    interactive: bool = False
    echo: bool = False

    @classmethod
    def scripted(cls, text: str = "", echo: bool = False) -> "ConsoleScript":
        return cls(deque(text), echo=echo)

    def read(self) -> str:
        if self.interactive:
            ch = sys.stdin.read(1)
            return ch if ch else "\0"
        if not self.input:
            raise EmptyScriptedInput("inch with no scripted input left")
        return self.input.popleft()

    def write(self, ch: str):
        self.output.append(ch)
        if self.interactive or self.echo:
            sys.stdout.write(ch)
            sys.stdout.flush()


@dataclass
class RunResult:
    final_value: str | None
    console_output: str
    step_count: int
    exit_kind: str  # "value" or "unhandled(<command>)"
    value: object = None


@dataclass
class Compiled:
    program: Program
    typed: TypedProgram
    core: C.LetRec


def compile_program(source: str, top_ability: Ability = CONSOLE, prelude: bool = True) -> Compiled:
    program = load_program(source, prelude)
    typed = check_program(program, top_ability)
    return Compiled(program, typed, elaborate_program(typed))


def run_compiled(compiled: Compiled, script: ConsoleScript | None = None, fuel: int = 10 ** 7,
                 trace=None) -> RunResult:
    if compiled.core.body is None:
        raise DesugarError("program has no main")
    script = script or ConsoleScript.scripted()
    decls = compiled.program.decls
    console = any(i.iface == "Console" for i in compiled.typed.top_ability.instances)
    term = reachable_bindings(compiled.core)
    stepper = Stepper(decls)
    steps = 0
    while True:
        try:
            normal: Normal = eval_to_normal(decls, term, fuel - steps, trace, stepper)
        except FuelExhausted as e:
            e.steps += steps
            raise
        steps += normal.steps
        req = normal.request
        if req is None:
            return RunResult(render_value(normal.term), "".join(script.output), steps, "value", normal.term)
        if console and req.command == "inch":
            term = plug_all(req.frames, C.Annot(C.Lit(script.read()), CHAR))
        elif console and req.command == "ouch":
            script.write(erase(req.args[0]).value)
            term = plug_all(req.frames, C.Annot(C.Ctor("unit", ()), UNIT))
        else:
            return RunResult(None, "".join(script.output), steps, f"unhandled({req.command})", normal.term)


def run_source(source: str, input_text: str = "", top_ability: Ability = CONSOLE, prelude: bool = True,
               fuel: int = 10 ** 7, trace=None) -> RunResult:
    return run_compiled(compile_program(source, top_ability, prelude), ConsoleScript.scripted(input_text),
                        fuel, trace)


# ---------------------------------------------------------------------------
# Rendering


def _string(w) -> str | None:
    chars = []
    while isinstance(w, C.Ctor) and w.name == "cons" and len(w.args) == 2:
        head = w.args[0]
        if not (isinstance(head, C.Lit) and isinstance(head.value, str)):
            return None
        chars.append(head.value)
        w = w.args[1]
    if not chars or not (isinstance(w, C.Ctor) and w.name == "nil"):
        return None
    esc = {"\b": "\\b", "\n": "\\n", "\t": "\\t", "\r": "\\r", "\0": "\\0", "\\": "\\\\", '"': '\\"'}
    return '"' + "".join(esc.get(c, c) for c in chars) + '"'


def render_value(w, nested: bool = False) -> str:
    """Constructor syntax as results are conventionally printed; char lists as strings."""
    w = erase(w)
    match w:
        case C.Lit(v):
            return C.show_lit(v)
        case C.Ctor(k, ()):
            return k
        case C.Ctor(k, args):
            s = _string(w)
            if s is not None:
                return s
            out = " ".join([k] + [render_value(a, True) for a in args])
            return f"({out})" if nested else out
    return "{<fun>}"
