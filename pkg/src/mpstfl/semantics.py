"""Asynchronous reduction of sessions and seeded random simulation.

Each participant owns an output queue.  A send appends to the sender's own
queue; a receive by ``p`` from ``q`` consumes the oldest message addressed
to ``p`` in ``q``'s queue (the head of that receiver lane, which the queue
congruence can always bring to the front).
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field

from .congruence import (
    OpenTermError, _IdMemo, lane_head, session_key, session_terminated,
    unfold_process_head,
)
from .syntax.ast import (
    Actor, Bool, Cond, ExtChoice, InBranch, Inact, IntChoice, Msg, OutBranch,
    PVar, Rec, Session, Var,
)

log = logging.getLogger(__name__)


# -- labels -----------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Send:
    subject: str
    peer: str
    label: str
    kind = "send"

    def __str__(self) -> str:
        return f"{self.subject}:{self.peer}!{self.label}"


@dataclass(frozen=True, order=True)
class Recv:
    subject: str
    peer: str
    label: str
    kind = "recv"

    def __str__(self) -> str:
        return f"{self.subject}:{self.peer}?{self.label}"


@dataclass(frozen=True, order=True)
class CondStep:
    subject: str
    kind = "if"

    def __str__(self) -> str:
        return f"{self.subject}:if"


TransitionLabel = Send | Recv | CondStep


def parse_label(text: str) -> TransitionLabel:
    subject, _, rest = text.partition(":")
    if rest == "if":
        return CondStep(subject)
    for sym, ctor in (("!", Send), ("?", Recv)):
        if sym in rest:
            peer, _, label = rest.partition(sym)
            return ctor(subject, peer, label)
    raise ValueError(f"bad transition label {text!r}")


@dataclass(frozen=True)
class Step:
    label: TransitionLabel
    next: Session


class Steps(list):
    """Successor list; ``stuck`` names participants blocked on a non-boolean conditional."""

    def __init__(self, items=(), stuck=()):
        super().__init__(items)
        self.stuck = tuple(stuck)


# -- substitution -----------------------------------------------------------

_fv_memo = _IdMemo()


def free_value_vars(p) -> frozenset:
    hit = _fv_memo.get(p)
    if hit is not None:
        return hit
    match p:
        case Inact() | PVar():
            out = frozenset()
        case ExtChoice(branches):
            out = frozenset().union(*(free_value_vars(b.cont) - {b.binder} for b in branches))
        case IntChoice(branches):
            out = frozenset().union(*(
                free_value_vars(b.cont) | ({b.payload.name} if isinstance(b.payload, Var) else frozenset())
                for b in branches))
        case Cond(c, then, else_):
            out = free_value_vars(then) | free_value_vars(else_)
            if isinstance(c, Var):
                out |= {c.name}
        case Rec(_, body):
            out = free_value_vars(body)
        case _:
            raise TypeError(f"not a process: {p!r}")
    return _fv_memo.put(p, out)


def _sv(v, x, val):
    return val if isinstance(v, Var) and v.name == x else v


def apply_subst(p, binder: str, v):
    """``p[v/binder]``; returns ``p`` itself when ``binder`` is not free."""
    if binder not in free_value_vars(p):
        return p
    match p:
        case ExtChoice(branches):
            return ExtChoice(tuple(
                b if b.binder == binder else InBranch(b.peer, b.label, b.binder, apply_subst(b.cont, binder, v))
                for b in branches))
        case IntChoice(branches):
            return IntChoice(tuple(
                OutBranch(b.peer, b.label, _sv(b.payload, binder, v), apply_subst(b.cont, binder, v))
                for b in branches))
        case Cond(c, then, else_):
            return Cond(_sv(c, binder, v), apply_subst(then, binder, v), apply_subst(else_, binder, v))
        case Rec(var, body):
            return Rec(var, apply_subst(body, binder, v))
    return p


# -- reduction --------------------------------------------------------------

def normalize(n: Session) -> Session:
    """Unfold every participant's recursion at the head (the ``mu`` precongruence)."""
    changes = {}
    for name, a in n.items():
        head = unfold_process_head(a.process)
        if head is not a.process:
            changes[name] = Actor(head, a.queue)
    return n.update(**changes) if changes else n


def _ground(v, who: str):
    if isinstance(v, Var):
        raise OpenTermError(f"free variable {v.name!r} in process of {who!r}")
    return v


def successors(n: Session) -> Steps:
    """All one-step reductions of ``n``, in a deterministic order."""
    steps, stuck = [], []
    heads = {name: unfold_process_head(a.process) for name, a in n.items()}
    for p, head in heads.items():
        actor = n[p]
        match head:
            case IntChoice(branches):
                for b in branches:
                    msg = Msg(b.peer, b.label, _ground(b.payload, p))
                    nxt = n.update(**{p: Actor(unfold_process_head(b.cont), actor.queue + (msg,))})
                    steps.append(Step(Send(p, b.peer, b.label), nxt))
            case ExtChoice(branches):
                by_key = {(b.peer, b.label): b for b in branches}
                for q in sorted({b.peer for b in branches}):
                    if q not in n:
                        continue
                    queue = n[q].queue
                    i = lane_head(queue, p)
                    if i is None:
                        continue
                    msg = queue[i]
                    b = by_key.get((q, msg.label))
                    if b is None:
                        continue
                    cont = unfold_process_head(apply_subst(b.cont, b.binder, msg.payload))
                    rest = queue[:i] + queue[i + 1:]
                    if q == p:
                        nxt = n.update(**{p: Actor(cont, rest)})
                    else:
                        nxt = n.update(**{p: Actor(cont, actor.queue), q: Actor(n[q].process, rest)})
                    steps.append(Step(Recv(p, q, msg.label), nxt))
            case Cond(c, then, else_):
                c = _ground(c, p)
                if not isinstance(c, Bool):
                    stuck.append(p)
                    continue
                branch = then if c.value else else_
                nxt = n.update(**{p: Actor(unfold_process_head(branch), actor.queue)})
                steps.append(Step(CondStep(p), nxt))
    return Steps(steps, stuck)


def enabled_kinds(steps) -> set[tuple[str, str]]:
    return {(s.label.subject, s.label.kind) for s in steps}


def self_sends(n: Session) -> list[str]:
    """Participants that may queue a message addressed to themselves (lint)."""
    return [name for name, a in n.items()
            if any(m.receiver == name for m in a.queue) or _sends_to(a.process, name)]


def _sends_to(p, name: str) -> bool:
    match p:
        case IntChoice(branches):
            return any(b.peer == name or _sends_to(b.cont, name) for b in branches)
        case ExtChoice(branches):
            return any(_sends_to(b.cont, name) for b in branches)
        case Cond(_, then, else_):
            return _sends_to(then, name) or _sends_to(else_, name)
        case Rec(_, body):
            return _sends_to(body, name)
    return False


# -- simulation -------------------------------------------------------------

def state_hash(n: Session) -> str:
    return hashlib.sha256(session_key(n).encode()).hexdigest()[:12]


@dataclass
class Trace:
    steps: list[Step] = field(default_factory=list)
    terminal: str = "cutoff"  # terminated | deadlocked | cutoff
    final: Session | None = None

    @property
    def labels(self) -> list[str]:
        return [str(s.label) for s in self.steps]

    def lines(self) -> list[str]:
        return [f"{i} {s.label} {state_hash(s.next)}" for i, s in enumerate(self.steps)]

    def to_json(self) -> dict:
        return {
            "steps": [{"idx": i, "label": str(s.label), "state": state_hash(s.next)}
                      for i, s in enumerate(self.steps)],
            "terminal": self.terminal,
        }


def simulate(n: Session, max_steps: int, seed: int = 0, policy: str = "fair") -> Trace:
    """Random walk over the reduction relation.

    ``uniform`` picks among all enabled steps.  ``fair`` rotates over the
    participants that have an enabled step, so a participant that stays
    enabled fires within ``len(n)`` scheduler turns.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    if policy not in ("uniform", "fair"):
        raise ValueError(f"unknown policy {policy!r}")
    rng = random.Random(seed)
    trace = Trace()
    cur = normalize(n)
    order = list(cur.participants)
    turn = 0
    for _ in range(max_steps):
        steps = successors(cur)
        if not steps:
            break
        if policy == "uniform":
            step = rng.choice(steps)
        else:
            ready = {s.label.subject for s in steps}
            for k in range(len(order)):
                who = order[(turn + k) % len(order)]
                if who in ready:
                    turn = (turn + k + 1) % len(order)
                    break
            step = rng.choice([s for s in steps if s.label.subject == who])
        trace.steps.append(step)
        cur = step.next
    trace.final = cur
    if not successors(cur):
        trace.terminal = "terminated" if session_terminated(cur) else "deadlocked"
    return trace
