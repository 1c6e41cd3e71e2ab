"""Subtyping: fixed facts, algebraic laws and a greatest-fixpoint oracle."""

import random

import pytest

from mpstfl import OpenTermError, parse_env, parse_type, print_type, subtype, subtype_env, subtype_pair, unfold_type
from mpstfl.flgen import gen_multimodel_upgrade
from mpstfl.randgen import random_subtype, random_supertype, random_type
from mpstfl.syntax.ast import End, IntT, QMsg, RecT, Sort

from conftest import load


# -- oracle ---------------------------------------------------------------------

def _head(t):
    while isinstance(t, RecT):
        t = unfold_type(t)
    return t


def _local(a, b):
    """Whether the pair of unfolded heads matches, and the continuation pairs it requires."""
    if isinstance(a, End) or isinstance(b, End):
        return isinstance(a, End) and isinstance(b, End), []
    if type(a) is not type(b) or {x.peer for x in a.branches} != {y.peer for y in b.branches}:
        return False, []
    amap = {(x.peer, x.label): x for x in a.branches}
    bmap = {(y.peer, y.label): y for y in b.branches}
    keys = amap if isinstance(a, IntT) else bmap
    kids = []
    for key in keys:
        x, y = amap.get(key), bmap.get(key)
        if x is None or y is None or x.sort != y.sort:
            return False, []
        kids.append((x.cont, y.cont))
    return True, kids


def oracle(a, b) -> bool:
    """Greatest fixpoint over the finite graph of reachable head pairs.

    A pair is rejected if its heads mismatch or it can reach a rejected pair;
    every other reachable pair belongs to the largest relation closed under
    the matching conditions.
    """
    def key(x, y):
        return print_type(x), print_type(y)

    start = key(a, b)
    todo, nodes, parents = [(a, b)], {}, {}
    while todo:
        x, y = todo.pop()
        k = key(x, y)
        if k in nodes:
            continue
        ok, kids = _local(_head(x), _head(y))
        nodes[k] = ok
        for cx, cy in kids:
            parents.setdefault(key(cx, cy), []).append(k)
            todo.append((cx, cy))
    bad = [k for k, ok in nodes.items() if not ok]
    rejected = set(bad)
    while bad:
        for parent in parents.get(bad.pop(), ()):
            if parent not in rejected:
                rejected.add(parent)
                bad.append(parent)
    return start not in rejected


# -- generators ------------------------------------------------------------------

PEERS = ("q", "r")


def _rand(rng, depth=3):
    return random_type(rng, "p", PEERS, depth, (), 0.35)


def _pairs(seed: int, count: int):
    rng = random.Random(seed)
    for _ in range(count):
        t = _rand(rng)
        match rng.randrange(4):
            case 0:
                yield t, random_supertype(rng, t)
            case 1:
                yield random_subtype(rng, t), t
            case 2:
                yield t, _rand(rng)
            case _:
                yield t, random_supertype(rng, random_subtype(rng, t))


# -- fixed facts -----------------------------------------------------------------

def test_external_choice_with_extra_branch():
    a = parse_type("&{q?l1(nat).r?l2(nat), r?l2(nat), r?l3(nat)}")
    b = parse_type("&{q?l1(nat).r?l2(nat), r?l3(nat)}")
    assert subtype(a, b)
    assert not subtype(b, a)


def test_end_end():
    assert subtype(End(), End())


def test_peer_sets_must_agree():
    assert not subtype(parse_type("+{p!l(nat)}"), parse_type("+{q!l(nat)}"))


def test_upgraded_client_type():
    _, t2prime, t2 = gen_multimodel_upgrade()
    assert subtype(t2prime, t2)
    assert t2prime == load("t2prime.st") and t2 == load("t2.st")


def test_internal_choice_fewer_branches():
    assert subtype(parse_type("+{q!a(nat)}"), parse_type("+{q!a(nat), q!b(nat)}"))
    assert not subtype(parse_type("+{q!a(nat), q!b(nat)}"), parse_type("+{q!a(nat)}"))


def test_sorts_are_invariant():
    assert not subtype(parse_type("+{q!a(nat)}"), parse_type("+{q!a(bool)}"))


def test_recursive_types_up_to_unfolding():
    a = parse_type("mu t.+{q!a(nat).t}")
    b = parse_type("+{q!a(nat).mu s.+{q!a(nat).+{q!a(nat).s}}}")
    assert subtype(a, b) and subtype(b, a)


def test_recursive_subtype_with_more_inputs():
    a = parse_type("mu t.&{q?a(nat).t, q?b(nat).end}")
    b = parse_type("mu t.&{q?a(nat).t}")
    assert subtype(a, b) and not subtype(b, a)


def test_open_type_rejected():
    with pytest.raises(OpenTermError):
        subtype(parse_type("mu t.+{q!a(nat).t}").body, End())


def test_pairs():
    _, t2prime, t2 = gen_multimodel_upgrade()
    assert subtype_pair(((), t2prime), ((), t2))
    assert not subtype_pair(((QMsg("q", "l", Sort.NAT),), End()), ((), End()))
    h1 = (QMsg("p", "l1", Sort.NAT), QMsg("q", "l2", Sort.BOOL))
    assert subtype_pair((h1, End()), (h1[::-1], End()))
    assert not subtype_pair(((QMsg("p", "a", Sort.NAT), QMsg("p", "b", Sort.NAT)), End()),
                            ((QMsg("p", "b", Sort.NAT), QMsg("p", "a", Sort.NAT)), End()))


def test_envs():
    g, g2 = load("gamma.env"), load("gamma_prime.env")
    assert subtype_env(g, g2)
    assert subtype_env(g, g)
    assert not subtype_env(g2, g)
    assert not subtype_env(parse_env("p : ([], end)"), parse_env("p : ([], end); q : ([], q!a(nat))"))


def test_envs_modulo_terminated_bindings():
    assert subtype_env(parse_env("p : ([], end)"), parse_env("q : ([], end)"))


# -- laws and oracle -------------------------------------------------------------

def test_agrees_with_fixpoint_oracle():
    seen_true = 0
    for a, b in _pairs(7, 600):
        got = subtype(a, b)
        assert got == oracle(a, b), (a, b)
        seen_true += got
    assert 100 < seen_true < 550  # the generator exercises both outcomes


def test_reflexive():
    rng = random.Random(11)
    for _ in range(300):
        t = _rand(rng)
        assert subtype(t, t)


def test_generators_respect_direction():
    rng = random.Random(12)
    for _ in range(300):
        t = _rand(rng)
        assert subtype(t, random_supertype(rng, t))
        assert subtype(random_subtype(rng, t), t)


def test_transitive():
    rng = random.Random(13)
    chains = 0
    for _ in range(400):
        a = _rand(rng)
        b = random_supertype(rng, a)
        c = random_supertype(rng, b) if rng.random() < 0.7 else _rand(rng)
        if subtype(a, b) and subtype(b, c):
            chains += 1
            assert subtype(a, c)
    assert chains > 250


def test_unfold_invariant():
    for a, b in _pairs(17, 300):
        want = subtype(a, b)
        assert subtype(unfold_type(a), b) == want
        assert subtype(a, unfold_type(b)) == want
