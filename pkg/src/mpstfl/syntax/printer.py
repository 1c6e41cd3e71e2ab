"""Pretty-printer producing DSL text that re-parses to an alpha-equivalent AST."""

from __future__ import annotations

from .ast import (
    Bool, Cond, End, ExtChoice, ExtT, Inact, IntChoice, IntT, Nat, PVar, Rec,
    RecT, Session, TVar, TypingEnv, Var,
)


def print_value(v) -> str:
    match v:
        case Nat(n):
            return str(n)
        case Bool(b):
            return "true" if b else "false"
        case Var(name):
            return name
    raise TypeError(f"not a value: {v!r}")


def _cont(p) -> str:
    return "" if isinstance(p, Inact) else "." + print_process(p)


def print_process(p) -> str:
    match p:
        case Inact():
            return "0"
        case ExtChoice(branches):
            items = [f"{b.peer}?{b.label}({b.binder}){_cont(b.cont)}" for b in branches]
        case IntChoice(branches):
            items = [f"{b.peer}!{b.label}({print_value(b.payload)}){_cont(b.cont)}" for b in branches]
        case Cond(c, then, else_):
            return f"if {print_value(c)} then {print_process(then)} else {print_process(else_)}"
        case Rec(var, body):
            return f"mu {var}.{print_process(body)}"
        case PVar(name):
            return name
        case _:
            raise TypeError(f"not a process: {p!r}")
    if len(items) == 1:
        return items[0]
    return "sum{" + ", ".join(items) + "}"


def print_type(t) -> str:
    match t:
        case End():
            return "end"
        case ExtT(branches):
            return "&{" + ", ".join(_tbranch(b, "?") for b in branches) + "}"
        case IntT(branches):
            return "+{" + ", ".join(_tbranch(b, "!") for b in branches) + "}"
        case RecT(var, body):
            return f"mu {var}.{print_type(body)}"
        case TVar(name):
            return name
    raise TypeError(f"not a session type: {t!r}")


def _tbranch(b, direction: str) -> str:
    cont = "" if isinstance(b.cont, End) else "." + print_type(b.cont)
    return f"{b.peer}{direction}{b.label}({b.sort}){cont}"


def print_queue(q) -> str:
    return "[" + ", ".join(f"({m.receiver}, {m.label}({print_value(m.payload)}))" for m in q) + "]"


def print_queue_type(q) -> str:
    return "[" + ", ".join(f"{m.receiver}!{m.label}({m.sort})" for m in q) + "]"


def print_session(s: Session) -> str:
    lines = []
    for name, actor in s.items():
        lines.append(f"participant {name} {{ {print_process(actor.process)} }} queue {print_queue(actor.queue)}")
    return "\n".join(lines) + "\n"


def print_env(g: TypingEnv) -> str:
    lines = [f"{name} : ({print_queue_type(b.queue)}, {print_type(b.type)})" for name, b in g.items()]
    return ";\n".join(lines) + "\n"
