"""Reduction relation and simulation."""

import random

import pytest

from mpstfl import apply_subst, parse_process, parse_session, simulate, successors
from mpstfl.congruence import session_key, unfold_process_head
from mpstfl.flgen import gen_centralized
from mpstfl.randgen import random_env, realize
from mpstfl.semantics import CondStep, Recv, Send, parse_label, self_sends
from mpstfl.syntax.ast import (
    Actor, Bool, Cond, ExtChoice, InBranch, Inact, IntChoice, Msg, Nat, OutBranch, Rec, Var,
)

from conftest import load
from test_congruence import swap_closure


def _labels(steps):
    return sorted(str(s.label) for s in steps)


def test_example_two_receptions():
    assert _labels(successors(load("orphan.ses"))) == ["p:q?l1", "p:r?l2"]


def test_example_single_reception():
    assert _labels(successors(load("unsupported.ses"))) == ["p:q?l1"]


def test_terminated_has_no_steps():
    assert successors(load("terminated.ses")) == []


def test_send_appends_to_own_queue():
    n = parse_session("participant p { q!a(1).q!b(2) } queue [(r, c(3))]")
    (step,) = successors(n)
    assert step.label == Send("p", "q", "a")
    assert step.next["p"].queue == (Msg("r", "c", Nat(3)), Msg("q", "a", Nat(1)))


def test_receive_behind_other_receiver():
    n = parse_session("participant p { r?x(v) } queue []\n"
                      "participant q { 0 } queue []\n"
                      "participant r { 0 } queue [(q, a(1)), (p, x(2))]")
    (step,) = successors(n)
    assert step.label == Recv("p", "r", "x")
    assert step.next["r"].queue == (Msg("q", "a", Nat(1)),)


def test_label_mismatch_blocks():
    n = parse_session("participant p { r?b(v) } queue []\nparticipant r { 0 } queue [(p, a(2))]")
    assert successors(n) == []


def test_conditionals():
    n = parse_session("participant p { if true then q!a(1) else q!b(1) } queue []")
    (step,) = successors(n)
    assert step.label == CondStep("p")
    assert step.next["p"].process == parse_process("q!a(1)")


def test_non_boolean_condition_is_stuck():
    n = parse_session("participant p { if 3 then 0 else 0 } queue []")
    steps = successors(n)
    assert steps == [] and steps.stuck == ("p",)


def test_recursion_unfolds_at_head():
    n = parse_session("participant p { mu X.q!a(1).X } queue []")
    (step,) = successors(n)
    assert step.label == Send("p", "q", "a")
    # the reduct is kept unfolded at the head, so the next send is immediately visible
    assert isinstance(step.next["p"].process, IntChoice)
    assert _labels(successors(step.next)) == ["p:q!a"]


def test_self_send_permitted():
    n = parse_session("participant p { p!a(1).p?a(x) } queue []")
    assert self_sends(n) == ["p"]
    trace = simulate(n, 10)
    assert trace.labels == ["p:p!a", "p:p?a"] and trace.terminal == "terminated"


def test_free_variable_is_an_error():
    with pytest.raises(ValueError):
        successors(parse_session("participant p { q!a(x) } queue []"))


def test_label_round_trip():
    for lab in (Send("p", "q", "a"), Recv("q", "p", "a"), CondStep("r")):
        assert parse_label(str(lab)) == lab


# -- substitution ---------------------------------------------------------------

def test_subst_payload():
    assert apply_subst(parse_process("q!l(x).0"), "x", Nat(5)) == parse_process("q!l(5).0")


def test_subst_respects_shadowing():
    p = ExtChoice((InBranch("q", "m", "x", IntChoice((OutBranch("q", "l", Var("x"), Inact()),))),))
    assert apply_subst(p, "x", Nat(5)) == p


def test_subst_condition():
    p = Cond(Var("x"), Inact(), Inact())
    assert apply_subst(p, "x", Bool(True)) == Cond(Bool(True), Inact(), Inact())


# -- reference semantics ---------------------------------------------------------

def _subst(p, x, v):
    match p:
        case IntChoice(bs):
            return IntChoice(tuple(OutBranch(b.peer, b.label, v if b.payload == Var(x) else b.payload,
                                             _subst(b.cont, x, v)) for b in bs))
        case ExtChoice(bs):
            return ExtChoice(tuple(b if b.binder == x else InBranch(b.peer, b.label, b.binder, _subst(b.cont, x, v))
                                   for b in bs))
        case Cond(c, t, e):
            return Cond(v if c == Var(x) else c, _subst(t, x, v), _subst(e, x, v))
        case Rec(var, body):
            return Rec(var, _subst(body, x, v))
    return p


def _key(n) -> str:
    """State key up to head unfolding, the one recursion step both sides may take."""
    return session_key(n.update(**{p: Actor(unfold_process_head(a.process), a.queue) for p, a in n.items()}))


def reference_successors(n) -> set:
    """Reductions read literally: receive only at the front of some rearrangement of the sender's queue."""
    out = set()
    for p, a in n.items():
        head = unfold_process_head(a.process)
        match head:
            case IntChoice(bs):
                for b in bs:
                    nxt = n.update(**{p: Actor(b.cont, a.queue + (Msg(b.peer, b.label, b.payload),))})
                    out.add((str(Send(p, b.peer, b.label)), _key(nxt)))
            case Cond(Bool(v), t, e):
                out.add((str(CondStep(p)), _key(n.update(**{p: Actor(t if v else e, a.queue)}))))
            case ExtChoice(bs):
                for q, sender in n.items():
                    for h in swap_closure(sender.queue):
                        if not h or h[0].receiver != p:
                            continue
                        match = [b for b in bs if (b.peer, b.label) == (q, h[0].label)]
                        if not match:
                            continue
                        cont = _subst(match[0].cont, match[0].binder, h[0].payload)
                        if q == p:
                            nxt = n.update(**{p: Actor(cont, h[1:])})
                        else:
                            nxt = n.update(**{p: Actor(cont, a.queue), q: Actor(sender.process, h[1:])})
                        out.add((str(Recv(p, q, h[0].label)), _key(nxt)))
    return out


def _random_walk_states(seed, count=200, walk=6):
    rng = random.Random(seed)
    for _ in range(count):
        g = random_env(rng)
        n = realize(rng, g, 0.4)
        for _ in range(walk):
            yield n
            steps = successors(n)
            if not steps:
                break
            n = rng.choice(steps).next


def test_successors_match_reference():
    checked = 0
    for n in _random_walk_states(5):
        got = {(str(s.label), _key(s.next)) for s in successors(n)}
        assert got == reference_successors(n), session_key(n)
        checked += 1
    assert checked > 500


def test_queue_size_conservation():
    for n in _random_walk_states(6, 100):
        before = sum(len(a.queue) for _, a in n.items())
        for s in successors(n):
            after = sum(len(a.queue) for _, a in s.next.items())
            assert after - before == {"send": 1, "recv": -1, "if": 0}[s.label.kind]


# -- simulation ------------------------------------------------------------------

def test_centralized_run_has_eight_steps():
    n, _ = gen_centralized(3)
    for seed in range(20):
        trace = simulate(n, 100, seed, "fair")
        assert len(trace.steps) == 8 and trace.terminal == "terminated"


def test_terminated_trace_is_empty():
    trace = simulate(load("terminated.ses"), 100, 0)
    assert trace.steps == [] and trace.terminal == "terminated"


def test_deadlock_reached_for_some_seed():
    n = load("orphan.ses")
    outcomes = {}
    for seed in range(50):
        trace = simulate(n, 100, seed, "uniform")
        outcomes.setdefault(trace.terminal, trace)
    dead = outcomes["deadlocked"]
    assert dead.labels[0] == "p:r?l2"
    assert dead.final["q"].queue == (Msg("p", "l1", Nat(1)),)
    assert "terminated" in outcomes


def test_same_seed_same_trace():
    n, _ = gen_centralized(4)
    a, b = simulate(n, 100, 7), simulate(n, 100, 7)
    assert a.to_json() == b.to_json()
    assert a.lines() == b.lines()


def test_fair_policy_rotates():
    n = parse_session("participant p { mu X.q!a(1).X } queue []\n"
                      "participant q { mu Y.p?a(x).Y } queue []\n"
                      "participant r { mu Z.if true then q!t(1).Z else q!u(1).Z } queue []")
    trace = simulate(n, 60, 3, "fair")
    subjects = [s.label.subject for s in trace.steps]
    # p and r are always enabled, so both fire in every window of three steps
    for i in range(len(subjects) - 2):
        assert {"p", "r"} <= set(subjects[i:i + 3])
    assert "q" in subjects


def test_bad_arguments():
    with pytest.raises(ValueError):
        simulate(load("terminated.ses"), -1)
    with pytest.raises(ValueError):
        simulate(load("terminated.ses"), 1, policy="random")
