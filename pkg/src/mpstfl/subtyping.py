"""Coinductive subtyping on session types, queue/type pairs and environments.

A subtype may offer fewer internal-choice branches and more external-choice
branches than its supertype, provided both choices address the same set of
participants; recursion is related up to unfolding.
"""

from __future__ import annotations

import functools

from .congruence import OpenTermError, queue_types_congruent, unfold_type, unfold_type_head
from .syntax.ast import End, ExtT, IntT, RecT, TVar, TypingEnv
from .syntax.parser import type_guarded


def _check_closed(t, bound=frozenset()):
    match t:
        case TVar(name):
            if name not in bound:
                raise OpenTermError(f"free type variable {name!r}")
        case ExtT(branches) | IntT(branches):
            for b in branches:
                _check_closed(b.cont, bound)
        case RecT(var, body):
            if not type_guarded(body, var):
                raise OpenTermError(f"unguarded recursion on {var!r}")
            _check_closed(body, bound | {var})


def _related(a, b, assumed: set) -> bool:
    if (a, b) in assumed:
        return True
    assumed.add((a, b))
    if isinstance(a, RecT):
        return _related(unfold_type(a), b, assumed)
    if isinstance(b, RecT):
        return _related(a, unfold_type(b), assumed)
    match a, b:
        case End(), End():
            return True
        case IntT(), IntT():
            # every branch the subtype may pick must be allowed by the supertype
            few, many = a.branches, {(y.peer, y.label): y for y in b.branches}
        case ExtT(), ExtT():
            # every branch the supertype may receive must be handled by the subtype
            few, many = b.branches, {(x.peer, x.label): x for x in a.branches}
        case _:
            return False
    if {x.peer for x in a.branches} != {y.peer for y in b.branches}:
        return False
    for x in few:
        y = many.get((x.peer, x.label))
        if y is None or x.sort != y.sort:
            return False
        sub, sup = (x.cont, y.cont) if isinstance(a, IntT) else (y.cont, x.cont)
        if not _related(sub, sup, assumed):
            return False
    return True


@functools.lru_cache(maxsize=65536)
def subtype(a, b) -> bool:
    """Decide ``a <= b`` for closed, guarded session types.

    Assume-and-check coinduction: a pair met again while it is being checked
    is taken to hold.  The pairs visited are pairs of subterms of unfoldings,
    so the search is finite.
    """
    _check_closed(a)
    _check_closed(b)
    return _related(a, b, set())


def subtype_pair(a, b) -> bool:
    """``(queue_a, type_a) <= (queue_b, type_b)``: congruent queue types and subtyped session types."""
    (qa, ta), (qb, tb) = a, b
    return queue_types_congruent(qa, qb) and subtype(ta, tb)


def _live_domain(g: TypingEnv) -> set[str]:
    """Participants whose binding is not congruent to (empty, end)."""
    return {p for p, b in g.items() if b.queue or not isinstance(unfold_type_head(b.type), End)}


def subtype_env(a: TypingEnv, b: TypingEnv) -> bool:
    """Pointwise subtyping over equal domains, up to elision of terminated bindings."""
    dom = _live_domain(a)
    if dom != _live_domain(b):
        return False
    return all(subtype_pair((a[p].queue, a[p].type), (b[p].queue, b[p].type)) for p in dom)
