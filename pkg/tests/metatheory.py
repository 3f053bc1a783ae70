"""Drive a compiled program, type-checking every reduct and classifying normal forms."""

from dataclasses import dataclass, field

from frankc import core as C
from frankc.evaluator import Request, eval_to_normal, handled_by_context, is_value, plug_all, reachable_bindings
from frankc.syntax import CHAR, DataType

UNIT = DataType("Unit")


@dataclass
class Audit:
    steps: int = 0
    checked: int = 0
    rules: dict = field(default_factory=dict)
    normal_forms: list = field(default_factory=list)  # "value" or the command name
    output: str = ""
    value: object = None


def drive(compiled, input_text: str = "", check: bool = True, fuel: int = 10 ** 6) -> Audit:
    """Evaluate ``compiled``, answering Console requests from ``input_text``.

    With ``check`` set, the initial term, every reduct and every term resumed
    after an I/O reply is checked at the program's type and top ability.
    Each normal form must be a value or a request escaping every handler.
    """
    decls = compiled.program.decls
    expected = C.core_type(compiled.typed.main_type)
    ambient = compiled.typed.top_ability
    console = any(i.iface == "Console" for i in ambient.instances)
    memo: dict = {}
    audit = Audit()
    pending = list(input_text)

    def verify(term, rule):
        if check:
            C.check_core(decls, term, expected, ambient, memo=memo)
            audit.checked += 1
        audit.rules[rule] = audit.rules.get(rule, 0) + 1

    term = reachable_bindings(compiled.core)
    verify(term, "initial")
    while True:
        normal = eval_to_normal(decls, term, fuel, verify)
        audit.steps += normal.steps
        req = normal.request
        if req is None:
            assert is_value(normal.term), "normal form without a request must be a value"
            audit.normal_forms.append("value")
            audit.value = normal.term
            return audit
        assert isinstance(req, Request)
        assert plug_all(req.frames, C.App(C.Cmd(req.command), req.args)) == normal.term
        assert req.command not in handled_by_context(req.frames)
        audit.normal_forms.append(req.command)
        if not (console and req.command in ("inch", "ouch")):
            return audit
        if req.command == "inch":
            reply = C.Annot(C.Lit(pending.pop(0)), CHAR)
        else:
            arg = req.args[0]
            while isinstance(arg, C.Annot):
                arg = arg.term
            audit.output += arg.value
            reply = C.Annot(C.Ctor("unit", ()), UNIT)
        term = plug_all(req.frames, reply)
        verify(term, "io")
