"""Canonical forms for the structural congruences on queues, sessions and environments.

Queues are compared through their per-receiver projection: swapping adjacent
messages with different receivers is the only non-trivial queue rule, and the
permutations it generates are exactly those preserving every receiver's FIFO
order.  Recursion is never folded; callers unfold at the head on demand.
"""

from __future__ import annotations

from .syntax.ast import (
    Cond, End, ExtChoice, ExtT, InBranch, Inact, IntChoice, IntT, OutBranch, PVar,
    Rec, RecT, Session, TBranch, TVar, TypingEnv,
)
from .syntax.printer import print_process, print_type, print_value


class OpenTermError(ValueError):
    """A free process or type variable reached a place that needs a closed term."""


# -- queues -----------------------------------------------------------------

def canon_queue(h) -> dict[str, tuple]:
    """Project a queue onto receivers: ``{receiver: ((label, payload), ...)}``."""
    lanes: dict[str, list] = {}
    for m in h:
        lanes.setdefault(m.receiver, []).append((m.label, m.payload))
    return {r: tuple(lanes[r]) for r in sorted(lanes)}


def canon_queue_type(q) -> dict[str, tuple]:
    lanes: dict[str, list] = {}
    for m in q:
        lanes.setdefault(m.receiver, []).append((m.label, m.sort))
    return {r: tuple(lanes[r]) for r in sorted(lanes)}


def queues_congruent(h1, h2) -> bool:
    return canon_queue(h1) == canon_queue(h2)


def queue_types_congruent(q1, q2) -> bool:
    return canon_queue_type(q1) == canon_queue_type(q2)


def lane_head(h, receiver: str):
    """Index of the oldest message to ``receiver`` in ``h``, or None."""
    for i, m in enumerate(h):
        if m.receiver == receiver:
            return i
    return None


# -- unfolding --------------------------------------------------------------

def subst_pvar(p, var: str, repl):
    match p:
        case PVar(name):
            return repl if name == var else p
        case Inact():
            return p
        case ExtChoice(branches):
            new = tuple(InBranch(b.peer, b.label, b.binder, subst_pvar(b.cont, var, repl)) for b in branches)
            return ExtChoice(new)
        case IntChoice(branches):
            new = tuple(OutBranch(b.peer, b.label, b.payload, subst_pvar(b.cont, var, repl)) for b in branches)
            return IntChoice(new)
        case Cond(c, then, else_):
            return Cond(c, subst_pvar(then, var, repl), subst_pvar(else_, var, repl))
        case Rec(v, body):
            if v == var:
                return p
            return Rec(v, subst_pvar(body, var, repl))
    raise TypeError(f"not a process: {p!r}")


def subst_tvar(t, var: str, repl):
    match t:
        case TVar(name):
            return repl if name == var else t
        case End():
            return t
        case ExtT(branches) | IntT(branches):
            new = tuple(TBranch(b.peer, b.label, b.sort, subst_tvar(b.cont, var, repl)) for b in branches)
            return type(t)(new)
        case RecT(v, body):
            if v == var:
                return t
            return RecT(v, subst_tvar(body, var, repl))
    raise TypeError(f"not a session type: {t!r}")


class _IdMemo:
    """Memo keyed on object identity; holds the key object so ids stay valid."""

    def __init__(self, limit: int = 200_000):
        self.data: dict[int, tuple] = {}
        self.limit = limit

    def get(self, obj):
        hit = self.data.get(id(obj))
        if hit is not None and hit[0] is obj:
            return hit[1]
        return None

    def put(self, obj, value):
        if len(self.data) >= self.limit:
            self.data.clear()
        self.data[id(obj)] = (obj, value)
        return value


_unfold_memo = _IdMemo()


def unfold_process(p):
    """One unfolding step ``mu X.P -> P[mu X.P / X]``; other terms unchanged."""
    if isinstance(p, PVar):
        raise OpenTermError(f"free process variable {p.name!r}")
    if not isinstance(p, Rec):
        return p
    hit = _unfold_memo.get(p)
    if hit is None:
        free = _free_vars(p, PVar, Rec)
        if free:
            raise OpenTermError(f"free process variable {min(free)!r}")
        hit = _unfold_memo.put(p, subst_pvar(p.body, p.var, p))
    return hit


def unfold_type(t):
    """One unfolding step ``mu t.T -> T[mu t.T / t]``; other terms unchanged."""
    if isinstance(t, TVar):
        raise OpenTermError(f"free type variable {t.name!r}")
    if not isinstance(t, RecT):
        return t
    hit = _unfold_memo.get(t)
    if hit is None:
        free = _free_vars(t, TVar, RecT)
        if free:
            raise OpenTermError(f"free type variable {min(free)!r}")
        hit = _unfold_memo.put(t, subst_tvar(t.body, t.var, t))
    return hit


def _free_vars(term, var_cls, rec_cls, bound=frozenset()) -> set:
    match term:
        case _ if isinstance(term, var_cls):
            return set() if term.name in bound else {term.name}
        case _ if isinstance(term, rec_cls):
            return _free_vars(term.body, var_cls, rec_cls, bound | {term.var})
        case ExtChoice(branches) | IntChoice(branches) | ExtT(branches) | IntT(branches):
            out = set()
            for b in branches:
                out |= _free_vars(b.cont, var_cls, rec_cls, bound)
            return out
        case Cond(_, then, else_):
            return _free_vars(then, var_cls, rec_cls, bound) | _free_vars(else_, var_cls, rec_cls, bound)
    return set()


def unfold_process_head(p):
    """Unfold until the head is not a recursion.  Guardedness bounds the loop."""
    seen = 0
    while isinstance(p, Rec):
        p = unfold_process(p)
        seen += 1
        if seen > 10_000:
            raise OpenTermError("unguarded recursion")
    if isinstance(p, PVar):
        raise OpenTermError(f"free process variable {p.name!r}")
    return p


def unfold_type_head(t):
    seen = 0
    while isinstance(t, RecT):
        t = unfold_type(t)
        seen += 1
        if seen > 10_000:
            raise OpenTermError("unguarded recursive type")
    if isinstance(t, TVar):
        raise OpenTermError(f"free type variable {t.name!r}")
    return t


def type_depth(t) -> int:
    """Number of leading ``mu`` binders."""
    n = 0
    while isinstance(t, RecT):
        n += 1
        t = t.body
    return n


# -- terminated participants ------------------------------------------------

def _is_done_process(p) -> bool:
    return isinstance(p, Inact)


def _is_done_type(t) -> bool:
    return isinstance(t, End)


def fend(g: TypingEnv) -> bool:
    """Every binding is (empty queue, end), up to head unfolding."""
    return all(not b.queue and isinstance(unfold_type_head(b.type), End) for _, b in g.items())


def session_terminated(n: Session) -> bool:
    return all(not a.queue and isinstance(unfold_process_head(a.process), Inact) for _, a in n.items())


# -- canonical printing -----------------------------------------------------

def _lanes_text(lanes: dict, show) -> str:
    return ";".join(f"{r}:" + ",".join(f"{lab}({show(x)})" for lab, x in msgs) for r, msgs in lanes.items())


def session_key(n: Session) -> str:
    """Canonical text: terminated participants elided, queues per receiver."""
    parts = []
    for name, a in n.items():
        if _is_done_process(a.process) and not a.queue:
            continue
        lanes = _lanes_text(canon_queue(a.queue), print_value)
        parts.append(f"{name}{{{print_process(a.process)}}}[{lanes}]")
    return " | ".join(parts)


def env_key(g: TypingEnv) -> str:
    parts = []
    for name, b in g.items():
        if _is_done_type(b.type) and not b.queue:
            continue
        lanes = _lanes_text(canon_queue_type(b.queue), str)
        parts.append(f"{name}:([{lanes}], {print_type(b.type)})")
    return " | ".join(parts)


def session_congruent(a: Session, b: Session) -> bool:
    return session_key(a) == session_key(b)


def env_congruent(a: TypingEnv, b: TypingEnv) -> bool:
    return env_key(a) == env_key(b)


class StateKeyer:
    """Compact state keys for explorers.

    Two states get equal keys iff their canonical printings are equal.  Term
    printings are cached per object and interned to small integers, so keys
    stay cheap when states share large continuation terms.
    """

    def __init__(self):
        self._text_memo = _IdMemo()
        self._part_memo = _IdMemo()
        self._intern: dict = {}

    def _term_id(self, term, show) -> int:
        text = self._text_memo.get(term)
        if text is None:
            text = self._text_memo.put(term, show(term))
        return self._intern.setdefault(text, len(self._intern))

    def _actor_id(self, a) -> int:
        hit = self._part_memo.get(a)
        if hit is None:
            if _is_done_process(a.process) and not a.queue:
                hit = -1
            else:
                lanes = tuple((r, tuple((lab, print_value(v)) for lab, v in msgs))
                              for r, msgs in canon_queue(a.queue).items())
                comp = ("p", self._term_id(a.process, print_process), lanes)
                hit = self._intern.setdefault(comp, len(self._intern))
            self._part_memo.put(a, hit)
        return hit

    def _binding_id(self, b) -> int:
        hit = self._part_memo.get(b)
        if hit is None:
            if _is_done_type(b.type) and not b.queue:
                hit = -1
            else:
                comp = ("t", self._term_id(b.type, print_type), tuple(canon_queue_type(b.queue).items()))
                hit = self._intern.setdefault(comp, len(self._intern))
            self._part_memo.put(b, hit)
        return hit

    def session(self, n: Session) -> tuple:
        return tuple((name, k) for name, a in n.items() if (k := self._actor_id(a)) >= 0)

    def env(self, g: TypingEnv) -> tuple:
        return tuple((name, k) for name, b in g.items() if (k := self._binding_id(b)) >= 0)
