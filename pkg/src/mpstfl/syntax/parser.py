"""Recursive-descent parser for the session / typing-environment DSL.

Grammar summary (``#`` starts a line comment)::

    session := ("participant" ID "{" proc "}" ("queue" "[" msgs? "]")?)+
    proc    := "0" | "sum" "{" pfx ("," pfx)* "}" | pfx | "if" v "then" proc "else" proc
             | "mu" ID "." proc | ID | "conc" "{" chain ("," chain)* "}" ("." proc)?
    pfx     := ID "?" ID "(" ID ")" ("." proc)? | ID "!" ID "(" v ")" ("." proc)?
    env     := ID ":" "(" qtype "," stype ")" (";" ...)*
    stype   := "end" | "+{" ... "}" | "&{" ... "}" | "mu" ID "." stype | ID | "conc" ...

Recursion binders are renamed apart while parsing, so every ``mu`` in one
parse result binds a distinct name.  Trailing ``.0`` / ``.end`` may be left
out.  A single-branch type may be written without braces (``q!l(nat).end``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    Actor, Binding, Bool, Cond, End, ExtChoice, ExtT, InBranch, Inact, IntChoice,
    IntT, Msg, Nat, OutBranch, PVar, QMsg, Rec, RecT, Session, Sort, TBranch,
    TVar, TypingEnv, Var,
)
from .macros import MacroError, Prefix, chain_to_process, chain_to_type, expand_concur


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg = msg
        self.line = line
        self.col = col
        super().__init__(f"line {line}, column {col}: {msg}" if line else msg)


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<id>[A-Za-z][A-Za-z0-9_']*)
  | (?P<nat>\d+)
  | (?P<sym>[{}()\[\],.?!:;+&])
""", re.VERBOSE)

KEYWORDS = {"participant", "queue", "sum", "conc", "if", "then", "else", "mu",
            "true", "false", "end", "nat", "bool"}


@dataclass(frozen=True)
class Token:
    kind: str  # id | nat | sym | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        for i, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.used_names: set[str] = set()
        self.scope: list[tuple[str, str]] = []  # (source name, renamed)

    # -- token helpers ------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "id", "nat") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self, what: str = "identifier") -> str:
        tok = self.tok
        if tok.kind != "id" or tok.text in KEYWORDS:
            raise self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok.text

    def expect_eof(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- binders ------------------------------------------------------------
    def bind(self, name: str) -> str:
        fresh, k = name, 1
        while fresh in self.used_names:
            k += 1
            fresh = f"{name}_{k}"
        self.used_names.add(fresh)
        self.scope.append((name, fresh))
        return fresh

    def lookup(self, name: str, tok: Token) -> str:
        for src, fresh in reversed(self.scope):
            if src == name:
                return fresh
        raise self.error(f"unbound recursion variable {name!r}", tok)

    # -- values and sorts ---------------------------------------------------
    def value(self):
        tok = self.tok
        if tok.kind == "nat":
            self.i += 1
            return Nat(int(tok.text))
        if self.accept("true"):
            return Bool(True)
        if self.accept("false"):
            return Bool(False)
        return Var(self.ident("value"))

    def sort(self) -> Sort:
        if self.accept("nat"):
            return Sort.NAT
        if self.accept("bool"):
            return Sort.BOOL
        raise self.error(f"expected sort 'nat' or 'bool', found {self.tok.text!r}")

    # -- processes ----------------------------------------------------------
    def is_prefix_start(self) -> bool:
        return self.tok.kind == "id" and self.peek().text in ("?", "!") and self.peek().kind == "sym"

    def prefix(self, typed: bool) -> Prefix:
        peer = self.ident("participant")
        direction = self.tok.text
        if not (self.accept("?") or self.accept("!")):
            raise self.error("expected '?' or '!'")
        label = self.ident("label")
        self.expect("(")
        if typed:
            arg = self.sort()
        elif direction == "?":
            arg = self.ident("binder")
        else:
            arg = self.value()
        self.expect(")")
        return Prefix(direction, peer, label, arg)

    def process(self):
        tok = self.tok
        if tok.kind == "nat" and tok.text == "0":
            self.i += 1
            return Inact()
        if self.accept("("):
            p = self.process()
            self.expect(")")
            return p
        if self.accept("sum"):
            return self.sum_process(tok)
        if self.accept("if"):
            cond = self.value()
            self.expect("then")
            then = self.process()
            self.expect("else")
            return Cond(cond, then, self.process())
        if self.accept("mu"):
            name_tok = self.tok
            src = self.ident("recursion variable")
            self.expect(".")
            fresh = self.bind(src)
            body = self.process()
            self.scope.pop()
            if not process_guarded(body, fresh):
                raise self.error(f"unguarded recursion on {src!r}", name_tok)
            return Rec(fresh, body)
        if self.accept("conc"):
            return self.conc(typed=False)
        if self.is_prefix_start():
            return self.choice_of([self.branch(typed=False)], tok)
        if tok.kind == "id" and tok.text not in KEYWORDS:
            self.i += 1
            return PVar(self.lookup(tok.text, tok))
        raise self.error(f"expected a process, found {tok.text or 'end of input'!r}")

    def continuation(self, typed: bool):
        if self.accept("."):
            return self.stype() if typed else self.process()
        return End() if typed else Inact()

    def branch(self, typed: bool):
        tok = self.tok
        pfx = self.prefix(typed)
        return tok, pfx, self.continuation(typed)

    def sum_process(self, tok: Token):
        self.expect("{")
        items = [self.branch(typed=False)]
        while self.accept(","):
            items.append(self.branch(typed=False))
        self.expect("}")
        return self.choice_of(items, tok)

    def choice_of(self, items, tok: Token, typed: bool = False, kind: str | None = None):
        directions = {pfx.direction for _, pfx, _ in items}
        if len(directions) > 1:
            raise self.error("mixed input/output branches in one choice", tok)
        direction = directions.pop()
        if kind is not None and direction != kind:
            want = "outputs" if kind == "!" else "inputs"
            raise self.error(f"this choice admits only {want}", tok)
        seen = set()
        for btok, pfx, _ in items:
            key = (pfx.peer, pfx.label)
            if key in seen:
                raise self.error(f"duplicate branch {pfx.peer}{pfx.direction}{pfx.label} in choice", btok)
            seen.add(key)
        if typed:
            branches = tuple(TBranch(p.peer, p.label, p.arg, c) for _, p, c in items)
            return ExtT(branches) if direction == "?" else IntT(branches)
        if direction == "?":
            return ExtChoice(tuple(InBranch(p.peer, p.label, p.arg, c) for _, p, c in items))
        return IntChoice(tuple(OutBranch(p.peer, p.label, p.arg, c) for _, p, c in items))

    def chain(self, typed: bool) -> list[Prefix]:
        chain = [self.prefix(typed)]
        while self.at(".") and self.peek().kind == "id" and self.peek(2).text in ("?", "!"):
            self.i += 1
            chain.append(self.prefix(typed))
        return chain

    def conc(self, typed: bool):
        tok = self.tok
        self.expect("{")
        chains = [self.chain(typed)]
        while self.accept(","):
            chains.append(self.chain(typed))
        self.expect("}")
        tail = self.continuation(typed)
        try:
            return expand_concur(chains, tail)
        except MacroError as exc:
            raise self.error(str(exc), tok) from None

    # -- sessions -----------------------------------------------------------
    def session(self) -> Session:
        actors = {}
        if self.tok.kind == "eof":
            raise self.error("empty session")
        while self.tok.kind != "eof":
            self.expect("participant")
            name_tok = self.tok
            name = self.ident("participant name")
            if name in actors:
                raise self.error(f"duplicate participant {name!r}", name_tok)
            self.expect("{")
            proc = self.process()
            self.expect("}")
            queue = ()
            if self.accept("queue"):
                queue = self.message_list()
            actors[name] = Actor(proc, queue)
        return Session.of(actors)

    def message_list(self) -> tuple[Msg, ...]:
        self.expect("[")
        msgs = []
        if not self.at("]"):
            msgs.append(self.message())
            while self.accept(","):
                msgs.append(self.message())
        self.expect("]")
        return tuple(msgs)

    def message(self) -> Msg:
        self.expect("(")
        receiver = self.ident("receiver")
        self.expect(",")
        label = self.ident("label")
        self.expect("(")
        tok = self.tok
        payload = self.value()
        if isinstance(payload, Var):
            # nothing binds inside a queue, so a variable here is always free
            raise self.error(f"queued payload must be a literal, got {payload.name!r}", tok)
        self.expect(")")
        self.expect(")")
        return Msg(receiver, label, payload)

    # -- types --------------------------------------------------------------
    def stype(self):
        tok = self.tok
        if self.accept("end"):
            return End()
        if self.accept("("):
            t = self.stype()
            self.expect(")")
            return t
        if self.at("+") or self.at("&"):
            kind = "!" if self.tok.text == "+" else "?"
            self.i += 1
            self.expect("{")
            items = [self.branch(typed=True)]
            while self.accept(","):
                items.append(self.branch(typed=True))
            self.expect("}")
            return self.choice_of(items, tok, typed=True, kind=kind)
        if self.accept("mu"):
            name_tok = self.tok
            src = self.ident("recursion variable")
            self.expect(".")
            fresh = self.bind(src)
            body = self.stype()
            self.scope.pop()
            if not type_guarded(body, fresh):
                raise self.error(f"unguarded recursion on {src!r}", name_tok)
            return RecT(fresh, body)
        if self.accept("conc"):
            return self.conc(typed=True)
        if self.is_prefix_start():
            return self.choice_of([self.branch(typed=True)], tok, typed=True)
        if tok.kind == "id" and tok.text not in KEYWORDS:
            self.i += 1
            return TVar(self.lookup(tok.text, tok))
        raise self.error(f"expected a session type, found {tok.text or 'end of input'!r}")

    def queue_type(self) -> tuple[QMsg, ...]:
        self.expect("[")
        msgs = []
        if not self.at("]"):
            msgs.append(self.qmsg())
            while self.accept(","):
                msgs.append(self.qmsg())
        self.expect("]")
        return tuple(msgs)

    def qmsg(self) -> QMsg:
        receiver = self.ident("receiver")
        self.expect("!")
        label = self.ident("label")
        self.expect("(")
        s = self.sort()
        self.expect(")")
        return QMsg(receiver, label, s)

    def env(self) -> TypingEnv:
        bindings = {}
        while self.tok.kind != "eof":
            name_tok = self.tok
            name = self.ident("participant name")
            if name in bindings:
                raise self.error(f"duplicate participant {name!r}", name_tok)
            self.expect(":")
            self.expect("(")
            q = self.queue_type()
            self.expect(",")
            t = self.stype()
            self.expect(")")
            bindings[name] = Binding(q, t)
            if not self.accept(";"):
                break
        self.expect_eof()
        return TypingEnv.of(bindings)


def process_guarded(p, var: str, guarded: bool = False) -> bool:
    """True iff every occurrence of ``var`` in ``p`` sits under a choice prefix."""
    match p:
        case PVar(name):
            return guarded or name != var
        case Inact():
            return True
        case ExtChoice(branches) | IntChoice(branches):
            return all(process_guarded(b.cont, var, True) for b in branches)
        case Cond(_, then, else_):
            return process_guarded(then, var, guarded) and process_guarded(else_, var, guarded)
        case Rec(_, body):
            return process_guarded(body, var, guarded)
    raise TypeError(f"not a process: {p!r}")


def type_guarded(t, var: str, guarded: bool = False) -> bool:
    match t:
        case TVar(name):
            return guarded or name != var
        case End():
            return True
        case ExtT(branches) | IntT(branches):
            return all(type_guarded(b.cont, var, True) for b in branches)
        case RecT(_, body):
            return type_guarded(body, var, guarded)
    raise TypeError(f"not a session type: {t!r}")


def parse_session(text: str) -> Session:
    p = _Parser(text)
    return p.session()


def parse_env(text: str) -> TypingEnv:
    p = _Parser(text)
    if p.tok.kind == "eof":
        return TypingEnv(())
    return p.env()


def parse_process(text: str):
    p = _Parser(text)
    proc = p.process()
    p.expect_eof()
    return proc


def parse_type(text: str):
    p = _Parser(text)
    t = p.stype()
    p.expect_eof()
    return t


def parse_queue_type(text: str) -> tuple[QMsg, ...]:
    p = _Parser(text)
    q = p.queue_type()
    p.expect_eof()
    return q


__all__ = [
    "ParseError", "parse_session", "parse_env", "parse_process", "parse_type",
    "parse_queue_type", "process_guarded", "type_guarded", "tokenize",
    "chain_to_process", "chain_to_type",
]
