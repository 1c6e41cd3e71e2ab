"""Type checking: fixed examples and agreement with a brute-force derivation search."""

import itertools
import random

import pytest

from mpstfl import TypeCheckError, check_process, check_queue, check_session, check_value, parse_env
from mpstfl import parse_process, parse_session, parse_type
from mpstfl.flgen import gen_centralized, gen_decentralized, gen_multimodel_upgrade
from mpstfl.syntax.ast import (
    EMPTY_THETA, Bool, Cond, End, ExtChoice, ExtT, InBranch, Inact, IntChoice, IntT, Msg, Nat,
    OutBranch, QMsg, SharedEnv, Sort, TBranch, Var,
)
from mpstfl.typecheck import infer_types

from conftest import load


def ok(theta, p, t) -> bool:
    try:
        check_process(theta, p, t)
        return True
    except TypeCheckError:
        return False


# -- values and queues ----------------------------------------------------------

def test_values():
    check_value(EMPTY_THETA, Nat(5), Sort.NAT)
    check_value(SharedEnv((("x", Sort.BOOL),)), Var("x"), Sort.BOOL)
    with pytest.raises(TypeCheckError) as exc:
        check_value(EMPTY_THETA, Bool(True), Sort.NAT)
    assert exc.value.rule == "t-nat"
    with pytest.raises(TypeCheckError):
        check_value(EMPTY_THETA, Var("y"), Sort.NAT)


def test_queues():
    check_queue((), ())
    check_queue((Msg("q", "l", Nat(5)),), (QMsg("q", "l", Sort.NAT),))
    with pytest.raises(TypeCheckError):
        check_queue((Msg("q", "l", Bool(True)),), (QMsg("q", "l", Sort.NAT),))
    with pytest.raises(TypeCheckError):
        check_queue((Msg("q", "l", Nat(1)),), ())


def test_queue_lanes_may_interleave_differently():
    h = (Msg("p", "a", Nat(1)), Msg("q", "b", Bool(False)))
    check_queue(h, (QMsg("q", "b", Sort.BOOL), QMsg("p", "a", Sort.NAT)))
    with pytest.raises(TypeCheckError):
        check_queue((Msg("p", "a", Nat(1)), Msg("p", "b", Nat(1))),
                    (QMsg("p", "b", Sort.NAT), QMsg("p", "a", Sort.NAT)))


# -- processes ------------------------------------------------------------------

def test_server_process():
    s, g = gen_centralized(3)
    check_process(EMPTY_THETA, s["p1"].process, g["p1"].type)


def test_inact_end():
    check_process(EMPTY_THETA, Inact(), End())


def test_upgraded_client():
    q, t2prime, t2 = gen_multimodel_upgrade()
    check_process(EMPTY_THETA, q, t2prime)
    check_process(EMPTY_THETA, q, t2)


def test_peer_set_mismatch():
    with pytest.raises(TypeCheckError) as exc:
        check_process(EMPTY_THETA, parse_process("q!l(5).0"), parse_type("+{r!l(nat).end}"))
    assert "peers" in exc.value.expected


def test_missing_input_branch():
    with pytest.raises(TypeCheckError):
        check_process(EMPTY_THETA, parse_process("q?a(x)"), parse_type("&{q?a(nat), q?b(nat)}"))


def test_conditional_needs_bool():
    with pytest.raises(TypeCheckError):
        check_process(EMPTY_THETA, parse_process("q?a(x).if x then 0 else 0"), parse_type("&{q?a(nat)}"))
    check_process(EMPTY_THETA, parse_process("q?a(x).if x then 0 else 0"), parse_type("&{q?a(bool)}"))


def test_recursion_against_recursive_type():
    p = parse_process("mu X.sum{q?more(x).q!ack(x).X, q?stop(x)}")
    t = parse_type("mu t.&{q?more(nat).+{q!ack(nat).t}, q?stop(nat)}")
    check_process(EMPTY_THETA, p, t)
    # the type may be written with a different unfolding
    check_process(EMPTY_THETA, p, parse_type(
        "&{q?more(nat).+{q!ack(nat).mu t.&{q?more(nat).+{q!ack(nat).t}, q?stop(nat)}}, q?stop(nat)}"))


def test_recursive_process_uses_fewer_outputs():
    p = parse_process("mu X.q!a(1).X")
    check_process(EMPTY_THETA, p, parse_type("mu t.+{q!a(nat).t, q!b(nat).end}"))
    assert not ok(EMPTY_THETA, p, parse_type("mu t.+{q!b(nat).t}"))


def test_open_type_is_an_error():
    with pytest.raises(Exception):
        check_process(EMPTY_THETA, Inact(), parse_type("mu t.+{q!a(nat).t}").body)


def test_extra_branch_with_conditional_join():
    p = parse_process("sum{q?a(x), q?b(y).if true then q!c(1) else q!d(1)}")
    check_process(EMPTY_THETA, p, parse_type("&{q?a(nat)}"))
    assert IntT((TBranch("q", "c", Sort.NAT, End()), TBranch("q", "d", Sort.NAT, End()))) in \
        infer_types(EMPTY_THETA, parse_process("if true then q!c(1) else q!d(1)"))


def test_extra_branch_unused_binder_takes_either_sort():
    p = parse_process("sum{q?a(x), q?b(y).if true then r?c(z).if z then 0 else 0 else r?c(w)}")
    check_process(EMPTY_THETA, p, parse_type("&{q?a(nat)}"))


# -- sessions --------------------------------------------------------------------

def test_fl_sessions_well_typed():
    for n in (2, 3, 4):
        assert check_session(*gen_centralized(n)) == []
        assert check_session(*gen_decentralized(n)) == []


def test_example_session_typed_by_example_env():
    assert check_session(load("orphan.ses"), load("gamma.env")) == []


def test_session_errors_are_collected():
    n = parse_session("participant p { q!a(true) } queue [(q, b(1))]\nparticipant q { p?a(x) } queue []")
    g = parse_env("p : ([], +{q!a(nat)}); q : ([], &{p?a(nat)})")
    errors = check_session(n, g)
    assert {e.location.split("/")[0] for e in errors} == {"p"}
    assert len(errors) == 2
    assert all(set(e.to_json()) == {"location", "rule", "expected", "found"} for e in errors)


def test_domain_mismatch():
    errors = check_session(parse_session("participant p { 0 } queue []"), parse_env("q : ([], end)"))
    assert errors and errors[0].rule == "t-sess"


# -- brute-force derivation search ------------------------------------------------
#
# Universe: types of depth <= 2 over the (peer, label) pairs below with at most
# two branches per choice.  A process has a type when some type of the
# universe matches it rule by rule (t-0, t-out, t-in, t-cond) and is a subtype
# of the target.  Subtyping here is the finite structural relation, written
# out independently of the package.

KEYS = (("q", "a"), ("q", "b"), ("r", "a"))
SORTS = (Sort.NAT, Sort.BOOL)


def _universe(depth: int) -> list:
    if depth == 0:
        return [End()]
    below = _universe(depth - 1)
    out = [End()]
    for k in (1, 2):
        for keys in itertools.combinations(KEYS, k):
            for sorts in itertools.product(SORTS, repeat=k):
                for conts in itertools.product(below, repeat=k):
                    bs = tuple(TBranch(p, lab, s, c) for (p, lab), s, c in zip(keys, sorts, conts))
                    out.append(IntT(bs))
                    out.append(ExtT(bs))
    return out


U1 = _universe(1)


def sub(a, b) -> bool:
    if isinstance(a, End) or isinstance(b, End):
        return isinstance(a, End) and isinstance(b, End)
    if type(a) is not type(b) or {x.peer for x in a.branches} != {y.peer for y in b.branches}:
        return False
    amap = {(x.peer, x.label): x for x in a.branches}
    bmap = {(y.peer, y.label): y for y in b.branches}
    small, big = (amap, bmap) if isinstance(a, IntT) else (bmap, amap)
    for key, x in small.items():
        y = big.get(key)
        if y is None or x.sort != y.sort:
            return False
        lo, hi = (x.cont, y.cont) if isinstance(a, IntT) else (y.cont, x.cont)
        if not sub(lo, hi):
            return False
    return True


def _sort(theta: dict, v):
    match v:
        case Nat():
            return Sort.NAT
        case Bool():
            return Sort.BOOL
        case Var(name):
            return theta.get(name)


def exact_types(theta: dict, p, depth: int) -> list:
    """Every universe type of the given depth that types ``p`` via a syntax-directed rule then subsumption."""
    match p:
        case Inact():
            return [End()]
        case Cond(c, then, else_):
            if _sort(theta, c) is not Sort.BOOL:
                return []
            return [t for t in _universe_at(depth) if derivable(theta, then, t) and derivable(theta, else_, t)]
        case IntChoice(branches):
            options = []
            for b in branches:
                s = _sort(theta, b.payload)
                if s is None:
                    return []
                options.append([(s, c) for c in U1 if derivable(theta, b.cont, c)])
            return [IntT(tuple(TBranch(b.peer, b.label, s, c) for b, (s, c) in zip(branches, combo)))
                    for combo in itertools.product(*options)]
        case ExtChoice(branches):
            options = []
            for b in branches:
                options.append([(s, c) for s in SORTS for c in U1
                                if derivable({**theta, b.binder: s}, b.cont, c)])
            return [ExtT(tuple(TBranch(b.peer, b.label, s, c) for b, (s, c) in zip(branches, combo)))
                    for combo in itertools.product(*options)]
    raise AssertionError(p)


def _universe_at(depth):
    return U1 if depth <= 1 else _universe(2)


_memo = {}


def derivable(theta: dict, p, t) -> bool:
    key = (tuple(sorted(theta.items())), p, t)
    if key not in _memo:
        _memo[key] = any(sub(t0, t) for t0 in exact_types(theta, p, 1))
    return _memo[key]


def random_process(rng, depth, scope=(), counter=None):
    counter = counter if counter is not None else itertools.count()
    def value():
        if scope and rng.random() < 0.4:
            return Var(rng.choice(scope))
        return Nat(1) if rng.random() < 0.6 else Bool(True)
    r = rng.random()
    if depth == 0 or r < 0.15:
        return Inact()
    if r < 0.25:
        return Cond(value(), random_process(rng, depth - 1, scope, counter),
                    random_process(rng, depth - 1, scope, counter))
    keys = rng.sample(KEYS, rng.randint(1, 2))
    if rng.random() < 0.5:
        return IntChoice(tuple(OutBranch(p, lab, value(), random_process(rng, depth - 1, scope, counter))
                               for p, lab in keys))
    branches = []
    for p, lab in keys:
        x = f"x{next(counter)}"
        branches.append(InBranch(p, lab, x, random_process(rng, depth - 1, scope + (x,), counter)))
    return ExtChoice(tuple(branches))


def test_checker_agrees_with_derivation_search():
    rng = random.Random(2024)
    u2 = _universe(2)
    checked = positives = 0
    for _ in range(120):
        p = random_process(rng, 2)
        if isinstance(p, Cond):
            continue
        candidates = exact_types({}, p, 1)
        targets = rng.sample(u2, 15) + rng.sample(candidates, min(5, len(candidates)))
        for t0 in candidates[:5]:
            targets += [t for t in rng.sample(u2, 400) if sub(t0, t)][:5]
        for t in targets:
            want = derivable({}, p, t)
            assert ok(EMPTY_THETA, p, t) == want, (p, t)
            checked += 1
            positives += want
    assert checked > 1000 and positives > 200


# -- metatheory properties ---------------------------------------------------------

def test_typing_closed_under_supertype_env():
    from mpstfl.randgen import random_supertype, random_typed_pair
    from mpstfl.subtyping import subtype_env
    from mpstfl.syntax.ast import Binding
    rng = random.Random(77)
    for _ in range(150):
        n, g = random_typed_pair(rng)
        wider = g.update(**{p: Binding(g[p].queue, random_supertype(rng, g[p].type)) for p in g.participants})
        assert subtype_env(g, wider)
        assert check_session(n, wider) == []


def test_substitution_preserves_typing():
    from mpstfl import apply_subst
    rng = random.Random(78)
    checked = 0
    for _ in range(150):
        p = random_process(rng, 2, ("z",))
        for s, v in ((Sort.NAT, Nat(3)), (Sort.BOOL, Bool(False))):
            theta = SharedEnv((("z", s),))
            candidates = exact_types({"z": s}, p, 1) if not isinstance(p, Cond) else []
            for t in rng.sample(candidates, min(4, len(candidates))) + rng.sample(U1, 4):
                if ok(theta, p, t):
                    assert ok(EMPTY_THETA, apply_subst(p, "z", v), t), (p, t)
                    checked += 1
    assert checked > 100
