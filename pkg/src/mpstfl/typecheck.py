"""Type checking of values, queues, processes and sessions.

Processes are checked against a declared session type.  Subsumption is not
a separate search step: it is folded into choice matching (an internal
choice may use a subset of the type's outputs, an external choice may accept
extra inputs, peer sets must agree) and into process-variable lookup, where
the recorded type only has to be a subtype of the expected one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .congruence import OpenTermError, canon_queue, canon_queue_type, unfold_type_head
from .subtyping import subtype
from .syntax.ast import (
    EMPTY_THETA, Bool, Cond, End, ExtChoice, ExtT, Inact, IntChoice, IntT, Nat,
    PVar, Rec, RecT, Session, SharedEnv, Sort, TBranch, TVar, TypingEnv, Var,
)
from .syntax.parser import process_guarded
from .syntax.printer import print_type, print_value


@dataclass
class TypeCheckError(Exception):
    location: str
    rule: str
    expected: str
    found: str

    def __str__(self) -> str:
        return f"{self.location or '<root>'}: [{self.rule}] expected {self.expected}, found {self.found}"

    def to_json(self) -> dict:
        return {"location": self.location, "rule": self.rule,
                "expected": self.expected, "found": self.found}


def _path(path: str, seg: str) -> str:
    return f"{path}/{seg}" if path else seg


# -- values and queues ------------------------------------------------------

def check_value(theta: SharedEnv, v, s: Sort, path: str = "") -> None:
    match v:
        # the rule named is the one for the expected sort that failed to apply
        case Nat():
            if s is not Sort.NAT:
                raise TypeCheckError(path, "t-bool", str(s), print_value(v))
        case Bool():
            if s is not Sort.BOOL:
                raise TypeCheckError(path, "t-nat", str(s), print_value(v))
        case Var(name):
            found = theta.sort_of(name)
            if found is None:
                raise TypeCheckError(path, "t-var", str(s), f"unbound variable {name}")
            if found is not s:
                raise TypeCheckError(path, "t-var", str(s), f"{name}:{found}")
        case _:
            raise TypeError(f"not a value: {v!r}")


def infer_value(theta: SharedEnv, v) -> Sort | None:
    match v:
        case Nat():
            return Sort.NAT
        case Bool():
            return Sort.BOOL
        case Var(name):
            return theta.sort_of(name)
    return None


def check_queue(h, q, path: str = "queue") -> None:
    """Queue ``h`` against queue type ``q``, compared lane by lane per receiver."""
    lanes, tlanes = canon_queue(h), canon_queue_type(q)
    if set(lanes) != set(tlanes):
        raise TypeCheckError(path, "t-queue", f"receivers {sorted(tlanes)}", f"receivers {sorted(lanes)}")
    for r in lanes:
        msgs, tmsgs = lanes[r], tlanes[r]
        if len(msgs) != len(tmsgs):
            raise TypeCheckError(_path(path, r), "t-queue", f"{len(tmsgs)} messages", f"{len(msgs)} messages")
        for i, ((label, v), (tlabel, s)) in enumerate(zip(msgs, tmsgs)):
            where = _path(path, f"{r}[{i}]")
            if label != tlabel:
                raise TypeCheckError(where, "t-elm", f"label {tlabel}", f"label {label}")
            check_value(EMPTY_THETA, v, s, where)


# -- processes --------------------------------------------------------------

def _closed_type(t, bound=frozenset()) -> None:
    match t:
        case TVar(name):
            if name not in bound:
                raise OpenTermError(f"free type variable {name!r}")
        case ExtT(branches) | IntT(branches):
            for b in branches:
                _closed_type(b.cont, bound)
        case RecT(var, body):
            _closed_type(body, bound | {var})


def _guarded(p) -> bool:
    match p:
        case Rec(var, body):
            return process_guarded(body, var) and _guarded(body)
        case ExtChoice(branches) | IntChoice(branches):
            return all(_guarded(b.cont) for b in branches)
        case Cond(_, then, else_):
            return _guarded(then) and _guarded(else_)
    return True


def check_process(theta: SharedEnv, p, t, path: str = "") -> None:
    """Raise :class:`TypeCheckError` unless ``theta |- p : t`` is derivable."""
    _closed_type(t)
    if not _guarded(p):
        raise TypeCheckError(path, "t-rec", "guarded recursion", "unguarded recursion")
    _check(theta, p, t, path)


def _head(t, path):
    try:
        return unfold_type_head(t)
    except OpenTermError as exc:
        raise TypeCheckError(path, "t-sub", "closed guarded type", str(exc)) from None


def _check(theta: SharedEnv, p, t, path: str) -> None:
    match p:
        case Inact():
            head = _head(t, path)
            if not isinstance(head, End):
                raise TypeCheckError(path, "t-0", print_type(head), "0")
        case IntChoice(branches):
            head = _head(t, path)
            if not isinstance(head, IntT):
                raise TypeCheckError(path, "t-out", print_type(head), "internal choice")
            tb = {(b.peer, b.label): b for b in head.branches}
            peers = {b.peer for b in branches}
            tpeers = {b.peer for b in head.branches}
            if peers != tpeers:
                raise TypeCheckError(path, "t-out", f"peers {sorted(tpeers)}", f"peers {sorted(peers)}")
            for b in branches:
                where = _path(path, f"{b.peer}!{b.label}")
                y = tb.get((b.peer, b.label))
                if y is None:
                    raise TypeCheckError(where, "t-out", "a branch of " + print_type(head), f"{b.peer}!{b.label}")
                check_value(theta, b.payload, y.sort, where)
                _check(theta, b.cont, y.cont, where)
        case ExtChoice(branches):
            head = _head(t, path)
            if not isinstance(head, ExtT):
                raise TypeCheckError(path, "t-in", print_type(head), "external choice")
            pb = {(b.peer, b.label): b for b in branches}
            peers = {b.peer for b in branches}
            tpeers = {b.peer for b in head.branches}
            if peers != tpeers:
                raise TypeCheckError(path, "t-in", f"peers {sorted(tpeers)}", f"peers {sorted(peers)}")
            for y in head.branches:
                where = _path(path, f"{y.peer}?{y.label}")
                b = pb.get((y.peer, y.label))
                if b is None:
                    raise TypeCheckError(where, "t-in", f"{y.peer}?{y.label}", "no such branch")
                _check(theta.with_value(b.binder, y.sort), b.cont, y.cont, where)
            covered = {(y.peer, y.label) for y in head.branches}
            for b in branches:
                if (b.peer, b.label) in covered:
                    continue
                # extra input branch: typable at some type, then dropped by s-in
                if _infer_branch(theta, b) is None:
                    where = _path(path, f"{b.peer}?{b.label}")
                    raise TypeCheckError(where, "t-sub", "a typable extra branch", "untypable continuation")
        case Cond(c, then, else_):
            check_value(theta, c, Sort.BOOL, _path(path, "if"))
            _check(theta, then, t, _path(path, "then"))
            _check(theta, else_, t, _path(path, "else"))
        case Rec(var, body):
            _check(theta.with_proc(var, t), body, t, path)
        case PVar(name):
            recorded = theta.type_of(name)
            if recorded is None:
                raise TypeCheckError(path, "t-var", print_type(t), f"unbound process variable {name}")
            if isinstance(recorded, TVar) or not subtype(recorded, t):
                raise TypeCheckError(path, "t-var", print_type(t), f"{name}:{print_type(recorded)}")
        case _:
            raise TypeError(f"not a process: {p!r}")


# -- inference for extra external branches -----------------------------------

# An unused binder may take either sort, so a process can have several
# incomparable minimal types.  Inference returns a bounded list of candidates.
MAX_CANDIDATES = 64


def _infer_branch(theta: SharedEnv, b) -> TBranch | None:
    for cand in _branch_candidates(theta, b):
        return cand
    return None


def _branch_candidates(theta: SharedEnv, b) -> list[TBranch]:
    out = []
    for s in (Sort.NAT, Sort.BOOL):
        for t in infer_types(theta.with_value(b.binder, s), b.cont):
            out.append(TBranch(b.peer, b.label, s, t))
    return out[:MAX_CANDIDATES]


def infer_process(theta: SharedEnv, p):
    """Some type of ``p``, or None."""
    found = infer_types(theta, p)
    return found[0] if found else None


def _product(options: list[list]) -> list[tuple]:
    combos = [()]
    for opts in options:
        combos = [c + (o,) for c in combos for o in opts][:MAX_CANDIDATES]
    return combos


def _dedup(items: list) -> list:
    return list(dict.fromkeys(items))[:MAX_CANDIDATES]


def infer_types(theta: SharedEnv, p) -> list:
    """Candidate types of ``p``; empty when ``p`` has no type.

    Complete for finite processes up to the candidate cap: every type of
    ``p`` is a supertype of some candidate.  Recursive processes are typed
    by their syntactic shape only.
    """
    match p:
        case Inact():
            return [End()]
        case IntChoice(branches):
            options = []
            for b in branches:
                s = infer_value(theta, b.payload)
                conts = infer_types(theta, b.cont)
                if s is None or not conts:
                    return []
                options.append([TBranch(b.peer, b.label, s, c) for c in conts])
            return _dedup([IntT(bs) for bs in _product(options)])
        case ExtChoice(branches):
            options = [_branch_candidates(theta, b) for b in branches]
            if not all(options):
                return []
            return _dedup([ExtT(bs) for bs in _product(options)])
        case Cond(c, then, else_):
            if infer_value(theta, c) is not Sort.BOOL:
                return []
            joined = []
            for t1 in infer_types(theta, then):
                for t2 in infer_types(theta, else_):
                    j = _join(t1, t2)
                    if j is not None:
                        joined.append(j)
            return _dedup(joined)
        case Rec(var, body):
            tvar = f"t_{var}"
            out = []
            for t in infer_types(theta.with_proc(var, TVar(tvar)), body):
                out.append(RecT(tvar, t) if tvar in _tvars(t) else t)
            return _dedup(out)
        case PVar(name):
            t = theta.type_of(name)
            return [t] if t is not None else []
    return []


def _join(a, b):
    """A least common supertype of two inferred types, or None if there is none."""
    if a == b:
        return a
    if _closed(a) and _closed(b):
        if subtype(b, a):
            return a
        if subtype(a, b):
            return b
    match a, b:
        case IntT(xs), IntT(ys):
            if {x.peer for x in xs} != {y.peer for y in ys}:
                return None
            merged = {(x.peer, x.label): x for x in xs}
            for y in ys:
                x = merged.get((y.peer, y.label))
                if x is None:
                    merged[(y.peer, y.label)] = y
                    continue
                cont = _join(x.cont, y.cont) if x.sort == y.sort else None
                if cont is None:
                    return None
                merged[(y.peer, y.label)] = TBranch(x.peer, x.label, x.sort, cont)
            return IntT(tuple(merged.values()))
        case ExtT(xs), ExtT(ys):
            peers = {x.peer for x in xs}
            if peers != {y.peer for y in ys}:
                return None
            ymap = {(y.peer, y.label): y for y in ys}
            kept = []
            for x in xs:
                y = ymap.get((x.peer, x.label))
                if y is None or x.sort != y.sort:
                    continue
                cont = _join(x.cont, y.cont)
                if cont is not None:
                    kept.append(TBranch(x.peer, x.label, x.sort, cont))
            if {k.peer for k in kept} != peers:
                return None
            return ExtT(tuple(kept))
    return None


def _tvars(t) -> set:
    match t:
        case TVar(name):
            return {name}
        case ExtT(branches) | IntT(branches):
            return set().union(*(_tvars(b.cont) for b in branches))
        case RecT(var, body):
            return _tvars(body) - {var}
    return set()


def _closed(t) -> bool:
    return not _tvars(t)


# -- sessions ---------------------------------------------------------------

def check_session(n: Session, g: TypingEnv) -> list[TypeCheckError]:
    """All typing errors of ``g |- n``; an empty list means the session is well typed."""
    errors = []
    if set(n.participants) != set(g.participants):
        errors.append(TypeCheckError("", "t-sess", f"participants {sorted(g.participants)}",
                                     f"participants {sorted(n.participants)}"))
        return errors
    for name, actor in n.items():
        b = g[name]
        try:
            check_queue(actor.queue, b.queue, f"{name}/queue")
        except TypeCheckError as e:
            errors.append(e)
        try:
            check_process(EMPTY_THETA, actor.process, b.type, name)
        except TypeCheckError as e:
            errors.append(e)
        except OpenTermError as e:
            errors.append(TypeCheckError(name, "t-sess", "closed guarded type", str(e)))
    return errors


def well_typed(n: Session, g: TypingEnv) -> bool:
    return not check_session(n, g)
