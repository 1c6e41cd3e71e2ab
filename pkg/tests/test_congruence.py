"""Queue canonicalization against a brute-force closure of the swap rule, plus unfolding."""

import itertools
from collections import defaultdict, deque

import pytest

from mpstfl import (
    OpenTermError, canon_queue, env_congruent, parse_env, parse_process, parse_session,
    parse_type, session_congruent, unfold_process, unfold_type,
)
from mpstfl.congruence import StateKeyer, canon_queue_type, fend, queue_types_congruent
from mpstfl.subtyping import subtype_env
from mpstfl.syntax.ast import (
    Binding, Bool, End, ExtT, IntT, Msg, Nat, QMsg, RecT, Sort, TBranch, TVar, TypingEnv,
)

ALPHABET = [Msg(r, lab, v) for r in ("p", "q") for lab in ("a", "b") for v in (Nat(1), Bool(True))]


def all_queues(max_len: int):
    for k in range(max_len + 1):
        yield from itertools.product(ALPHABET, repeat=k)


def swap_closure(h: tuple) -> frozenset:
    """Every queue reachable from ``h`` by swapping adjacent messages to different receivers."""
    seen, todo = {h}, deque([h])
    while todo:
        cur = todo.popleft()
        for i in range(len(cur) - 1):
            a, b = cur[i], cur[i + 1]
            if a.receiver != b.receiver:
                nxt = cur[:i] + (b, a) + cur[i + 2:]
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
    return frozenset(seen)


def test_canon_queue_matches_swap_closure():
    by_key = defaultdict(set)
    queues = list(all_queues(4))
    for h in queues:
        by_key[repr(canon_queue(h))].add(h)
    for h in queues:
        assert swap_closure(h) == by_key[repr(canon_queue(h))]


def test_canon_queue_example():
    h = (Msg("p", "l1", Nat(1)), Msg("q", "l2", Nat(2)), Msg("p", "l3", Nat(3)))
    assert canon_queue(h) == {"p": (("l1", Nat(1)), ("l3", Nat(3))), "q": (("l2", Nat(2)),)}
    assert canon_queue(()) == {}


def test_same_receiver_order_matters():
    for a, b in itertools.product(ALPHABET, repeat=2):
        if a.receiver == b.receiver and a != b:
            assert canon_queue((a, b)) != canon_queue((b, a))
            s1 = parse_session(f"participant r {{ 0 }} queue [({a.receiver}, {a.label}(1)), ({b.receiver}, {b.label}(2))]")
            s2 = parse_session(f"participant r {{ 0 }} queue [({b.receiver}, {b.label}(2)), ({a.receiver}, {a.label}(1))]")
            assert not session_congruent(s1, s2)


def test_queue_types_modulo_reordering():
    a = (QMsg("p", "l1", Sort.NAT), QMsg("q", "l2", Sort.BOOL))
    assert queue_types_congruent(a, a[::-1])
    assert canon_queue_type(a) == {"p": (("l1", Sort.NAT),), "q": (("l2", Sort.BOOL),)}


def test_terminated_participant_elided():
    n = parse_session("participant p { q!a(1) } queue []\nparticipant q { p?a(x) } queue []")
    bigger = parse_session(
        "participant p { q!a(1) } queue []\nparticipant q { p?a(x) } queue []\nparticipant z { 0 } queue []")
    assert session_congruent(n, bigger)
    assert env_congruent(parse_env("p : ([], end)"), TypingEnv.of({}))


def test_non_terminated_participant_not_elided():
    a = parse_session("participant p { 0 } queue [(q, a(1))]")
    assert not session_congruent(a, parse_session("participant z { 0 } queue []"))


def test_different_receivers_swap_in_sessions():
    a = parse_session("participant r { 0 } queue [(p, a(1)), (q, b(2))]")
    b = parse_session("participant r { 0 } queue [(q, b(2)), (p, a(1))]")
    assert session_congruent(a, b)
    keyer = StateKeyer()
    assert keyer.session(a) == keyer.session(b)


def test_keyer_matches_congruence_on_envs():
    g1 = parse_env("p : ([q!a(nat), r!b(bool)], end); z : ([], end)")
    g2 = parse_env("p : ([r!b(bool), q!a(nat)], end)")
    g3 = parse_env("p : ([q!a(nat), q!b(bool)], end)")
    keyer = StateKeyer()
    assert keyer.env(g1) == keyer.env(g2)
    assert keyer.env(g1) != keyer.env(g3)


def test_fend():
    assert fend(parse_env("p : ([], end); q : ([], end)"))
    assert not fend(parse_env("p : ([q!a(nat)], end)"))
    assert not fend(parse_env("p : ([], q!a(nat))"))


# -- unfolding -------------------------------------------------------------------

def test_unfold_process_once():
    p = parse_process("mu X.q!l(1).X")
    assert unfold_process(p) == parse_process(f"q!l(1).mu {p.var}.q!l(1).{p.var}")


def test_unfold_end():
    assert unfold_type(End()) == End()


def test_unfold_type_twice_keeps_ext_head():
    t = parse_type("mu t.&{q?l(nat).t}")
    once = unfold_type(t)
    assert isinstance(once, ExtT)
    twice = unfold_type(once.branches[0].cont)
    assert isinstance(twice, ExtT)
    assert twice == once


def test_unfold_open_term_rejected():
    with pytest.raises(OpenTermError):
        unfold_type(TVar("t"))


@pytest.mark.parametrize("text", ["end", "+{q!a(nat)}", "&{q?a(nat).mu t.+{q!b(nat).t}}"])
def test_unfold_is_identity_without_head_recursion(text):
    t = parse_type(text)
    assert unfold_type(t) == t


def test_env_keys_equal_for_unfolded_type():
    """Congruence does not fold recursion; explicit unfolding gives a distinct but equivalent key."""
    g = parse_env("p : ([], mu t.+{q!a(nat).t})")
    b = g["p"]
    unfolded = TypingEnv.of({"p": Binding(b.queue, unfold_type(b.type))})
    assert subtype_env(g, unfolded) and subtype_env(unfolded, g)


def test_unfold_rec_with_other_free_variable_rejected():
    t = RecT("t", IntT((TBranch("q", "a", Sort.NAT, TVar("s")),)))
    with pytest.raises(OpenTermError):
        unfold_type(t)
