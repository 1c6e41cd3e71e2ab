"""Random session types, environments and well-typed sessions for property tests.

Environments come from two sources.  Protocol environments are projections
of small random global protocols (sequences of two-party exchanges, gathers
where one participant receives from several in any order, and two-party
loops), optionally advanced a few steps so that queues are non-empty.  Free
environments give every participant an independent random type, which
yields plenty of unsafe and stuck configurations.

Sessions realize each type with a canonical process, then prune internal
choices, widen external choices with extra typable branches, or wrap
sub-processes in conditionals, so that checking exercises subsumption.
"""

from __future__ import annotations

import random

from .envcheck import env_successors
from .syntax.ast import (
    Actor, Binding, Bool, Cond, End, ExtChoice, ExtT, InBranch, Inact, IntChoice, IntT,
    Msg, Nat, OutBranch, PVar, QMsg, Rec, RecT, Session, Sort, TBranch, TVar, TypingEnv, Var,
)
from .syntax.macros import Prefix, expand_concur

NAMES = ("p", "q", "r")
LABELS = ("a", "b", "c")
SORTS = (Sort.NAT, Sort.BOOL)


# -- random local types -----------------------------------------------------

def random_type(rng: random.Random, me: str, peers: tuple[str, ...], depth: int = 3,
                tvars: tuple[str, ...] = (), rec_p: float = 0.2, fresh=None) -> object:
    """A closed (given ``tvars`` bound outside), guarded random session type for participant ``me``."""
    fresh = fresh if fresh is not None else iter(range(10**6))
    if depth <= 0 or rng.random() < 0.2:
        if tvars and rng.random() < 0.5:
            return TVar(rng.choice(tvars))
        return End()
    if rng.random() < rec_p:
        var = f"t{next(fresh)}"
        body = _random_choice(rng, me, peers, depth, tvars + (var,), rec_p / 2, fresh)
        return RecT(var, body)
    return _random_choice(rng, me, peers, depth, tvars, rec_p, fresh)


def _random_choice(rng, me, peers, depth, tvars, rec_p, fresh):
    ctor = rng.choice((IntT, ExtT))
    k = rng.randint(1, 2)
    seen, branches = set(), []
    for _ in range(k):
        peer, label = rng.choice(peers), rng.choice(LABELS)
        if (peer, label) in seen:
            continue
        seen.add((peer, label))
        cont = random_type(rng, me, peers, depth - 1, tvars, rec_p, fresh)
        branches.append(TBranch(peer, label, rng.choice(SORTS), cont))
    return ctor(tuple(branches))


# -- related types ----------------------------------------------------------

def random_supertype(rng: random.Random, t, depth: int = 4):
    """A type ``u`` with ``t <= u``: internal choices may gain branches, external ones lose some."""
    return _mutate(rng, t, depth, up=True)


def random_subtype(rng: random.Random, t, depth: int = 4):
    """A type ``u`` with ``u <= t``."""
    return _mutate(rng, t, depth, up=False)


def _mutate(rng, t, depth, up):
    match t:
        case RecT(var, body):
            return RecT(var, _mutate(rng, body, depth, up))
        case IntT(branches) | ExtT(branches):
            new = [TBranch(b.peer, b.label, b.sort, _mutate(rng, b.cont, depth - 1, up) if depth > 0 else b.cont)
                   for b in branches]
            grow = (isinstance(t, IntT) == up)
            peers = sorted({b.peer for b in new})
            if grow and rng.random() < 0.5:
                used = {(b.peer, b.label) for b in new}
                spare = [(p, l) for p in peers for l in LABELS + ("d",) if (p, l) not in used]
                if spare:
                    p, l = rng.choice(spare)
                    new.append(TBranch(p, l, rng.choice(SORTS), End()))
            elif not grow and len(new) > 1 and rng.random() < 0.5:
                drop = rng.randrange(len(new))
                rest = new[:drop] + new[drop + 1:]
                if {b.peer for b in rest} == set(peers):
                    new = rest
            return type(t)(tuple(new))
    return t


# -- protocol environments --------------------------------------------------

def _seq(a, b):
    """Replace every ``end`` leaf of ``a`` by ``b``."""
    match a:
        case End():
            return b
        case IntT(branches) | ExtT(branches):
            return type(a)(tuple(TBranch(x.peer, x.label, x.sort, _seq(x.cont, b)) for x in branches))
        case RecT(var, body):
            return RecT(var, _seq(body, b))
    return a


def _exchange(rng, a, b, depth):
    """Local types of ``a`` and ``b`` for a random finite exchange started by ``a``."""
    if depth <= 0 or rng.random() < 0.3:
        return End(), End()
    labels = rng.sample(LABELS, rng.randint(1, 2))
    ta, tb = [], []
    for lab in labels:
        s = rng.choice(SORTS)
        # the receiver may answer in the continuation
        if rng.random() < 0.5:
            ca, cb = _exchange(rng, b, a, depth - 1)
            ca, cb = cb, ca
        else:
            ca, cb = _exchange(rng, a, b, depth - 1)
        ta.append(TBranch(b, lab, s, ca))
        tb.append(TBranch(a, lab, s, cb))
    return IntT(tuple(ta)), ExtT(tuple(tb))


def _gather(rng, target, senders):
    chains, sends = [], {}
    for s in senders:
        lab, sort = rng.choice(LABELS), rng.choice(SORTS)
        chains.append([Prefix("?", s, lab, sort)])
        sends[s] = IntT((TBranch(target, lab, sort, End()),))
    return expand_concur(chains, End()), sends


def _loop(rng, a, b, fresh):
    var = f"t{next(fresh)}"
    s = rng.choice(SORTS)
    body_a, body_b = _exchange(rng, b, a, 2)
    body_a, body_b = body_b, body_a
    ta = RecT(var, IntT((TBranch(b, "more", s, _seq(body_a, TVar(var))), TBranch(b, "stop", s, End()))))
    tb = RecT(var, ExtT((TBranch(a, "more", s, _seq(body_b, TVar(var))), TBranch(a, "stop", s, End()))))
    return ta, tb


def random_protocol_env(rng: random.Random, k: int | None = None) -> TypingEnv:
    k = k or rng.randint(2, 3)
    names = NAMES[:k]
    fresh = iter(range(10**6))
    local = {n: End() for n in names}
    for _ in range(rng.randint(1, 3)):
        kind = rng.random()
        if kind < 0.5:
            a, b = rng.sample(names, 2)
            ta, tb = _exchange(rng, a, b, 3)
            parts = {a: ta, b: tb}
        elif kind < 0.75 and k >= 3:
            target = rng.choice(names)
            g, sends = _gather(rng, target, [n for n in names if n != target])
            parts = {target: g, **sends}
        else:
            a, b = rng.sample(names, 2)
            ta, tb = _loop(rng, a, b, fresh)
            parts = {a: ta, b: tb}
        for n, t in parts.items():
            local[n] = _seq(local[n], t)
    env = TypingEnv.of({n: Binding((), t) for n, t in local.items()})
    for _ in range(rng.choice((0, 0, 1, 2, 3))):
        steps = env_successors(env, 4)
        if not steps:
            break
        env = rng.choice(steps).env
    return env


def random_free_env(rng: random.Random, k: int | None = None) -> TypingEnv:
    k = k or rng.randint(2, 3)
    names = NAMES[:k]
    fresh = iter(range(10**6))
    out = {}
    for n in names:
        peers = tuple(x for x in names if x != n)
        t = random_type(rng, n, peers, 3, (), 0.2, fresh)
        queue = []
        if rng.random() < 0.3:
            for _ in range(rng.randint(1, 2)):
                queue.append(QMsg(rng.choice(peers), rng.choice(LABELS), rng.choice(SORTS)))
        out[n] = Binding(tuple(queue), t)
    return TypingEnv.of(out)


def random_env(rng: random.Random) -> TypingEnv:
    return random_protocol_env(rng) if rng.random() < 0.5 else random_free_env(rng)


# -- realizing types as processes -------------------------------------------

def _literal(rng, s: Sort):
    return Nat(rng.randint(0, 2)) if s is Sort.NAT else Bool(rng.random() < 0.5)


class _Realizer:
    def __init__(self, rng: random.Random, variation: float):
        self.rng = rng
        self.variation = variation
        self.counter = 0

    def fresh(self, base: str) -> str:
        self.counter += 1
        return f"{base}{self.counter}"

    def value(self, s: Sort, scope):
        opts = [x for x, xs in scope if xs is s]
        if opts and self.rng.random() < 0.5:
            return Var(self.rng.choice(opts))
        return _literal(self.rng, s)

    def process(self, t, scope=(), pvars=None):
        pvars = pvars or {}
        rng = self.rng
        p = self._process(t, scope, pvars)
        if rng.random() < self.variation / 3 and not isinstance(t, (TVar, RecT)):
            bools = [x for x, s in scope if s is Sort.BOOL]
            cond = Var(rng.choice(bools)) if bools and rng.random() < 0.5 else Bool(rng.random() < 0.5)
            other = self._process(t, scope, pvars)
            p = Cond(cond, p, other) if rng.random() < 0.5 else Cond(cond, other, p)
        return p

    def _process(self, t, scope, pvars):
        rng = self.rng
        match t:
            case End():
                return Inact()
            case TVar(name):
                return PVar(pvars[name])
            case RecT(var, body):
                x = self.fresh("X")
                return Rec(x, self.process(body, scope, {**pvars, var: x}))
            case IntT(branches):
                keep = list(branches)
                if len(keep) > 1 and rng.random() < self.variation:
                    drop = rng.randrange(len(keep))
                    rest = keep[:drop] + keep[drop + 1:]
                    if {b.peer for b in rest} == {b.peer for b in keep}:
                        keep = rest
                return IntChoice(tuple(OutBranch(b.peer, b.label, self.value(b.sort, scope),
                                                 self.process(b.cont, scope, pvars)) for b in keep))
            case ExtT(branches):
                out = []
                for b in branches:
                    x = self.fresh("x")
                    out.append(InBranch(b.peer, b.label, x, self.process(b.cont, scope + ((x, b.sort),), pvars)))
                if rng.random() < self.variation:
                    used = {(b.peer, b.label) for b in branches}
                    spare = [(b.peer, l) for b in branches for l in LABELS + ("d",) if (b.peer, l) not in used]
                    if spare:
                        peer, lab = rng.choice(spare)
                        out.append(InBranch(peer, lab, self.fresh("x"), Inact()))
                return ExtChoice(tuple(out))
        raise TypeError(f"not a session type: {t!r}")


def realize(rng: random.Random, g: TypingEnv, variation: float = 0.3) -> Session:
    """A session typed by ``g``: canonical processes with random pruning, widening and conditionals."""
    r = _Realizer(rng, variation)
    actors = {}
    for name, b in g.items():
        queue = tuple(Msg(m.receiver, m.label, _literal(rng, m.sort)) for m in b.queue)
        actors[name] = Actor(r.process(b.type), queue)
    return Session.of(actors)


def random_typed_pair(rng: random.Random, variation: float = 0.3) -> tuple[Session, TypingEnv]:
    from .typecheck import check_session
    while True:
        g = random_env(rng)
        n = realize(rng, g, variation)
        if not check_session(n, g):
            return n, g
