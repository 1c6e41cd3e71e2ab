"""Session-level property checking, co-simulation against a typing environment, and verdict transfer.

Co-simulation explores pairs (session, environment).  Every communication
step of the session must be mirrored by an environment step with the same
label whose result still types the reduct (subject reduction; asserted when
the environment is safe).  Conditional steps leave the environment alone.
Whenever the environment can move, the session must be able to follow after
some conditional steps (session fidelity).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .congruence import StateKeyer, lane_head, session_terminated, unfold_process_head
from .envcheck import (
    DEFAULT_BOUND, DEFAULT_MAX_STATES, check_env_deadlock, check_env_liveness,
    check_env_safety, env_successors, explore_env, normalize_env,
)
from .lts import (
    StateGraph, Verdict, describe_obligation, discharges, enabled_pairs, explore,
    find_liveness_violation,
)
from .semantics import CondStep, normalize, successors
from .syntax.ast import Cond, ExtChoice, IntChoice, Session, TypingEnv
from .typecheck import check_session


def explore_session(n: Session, max_states: int = DEFAULT_MAX_STATES, bound: int = DEFAULT_BOUND) -> StateGraph:
    """Reachable state graph of ``n``; queues longer than ``bound`` are cut off."""
    keyer = StateKeyer()
    stuck: dict[int, tuple] = {}

    def step(m):
        succ = successors(m)
        out, cut = [], False
        for s in succ:
            if isinstance(s.label, CondStep) or s.label.kind == "recv" or len(s.next[s.label.subject].queue) <= bound:
                out.append((s.label, s.next))
            else:
                cut = True
        if succ.stuck:
            stuck[id(m)] = succ.stuck
        return out, cut

    graph = explore(normalize(n), step, keyer.session, max_states)
    if graph.reason == "queue bound exceeded":
        graph.reason = f"queue bound {bound} exceeded"
    graph.stuck = {i: stuck[id(m)] for i, m in enumerate(graph.states) if id(m) in stuck}
    return graph


# -- properties -------------------------------------------------------------

def safety_violation(m: Session) -> dict | None:
    """A message at a lane head whose sender the receiver listens to, but with an unsupported label."""
    for p, a in m.items():
        head = unfold_process_head(a.process)
        if not isinstance(head, ExtChoice):
            continue
        labels = {(b.peer, b.label) for b in head.branches}
        for q in sorted({b.peer for b in head.branches}):
            if q not in m:
                continue
            i = lane_head(m[q].queue, p)
            if i is None:
                continue
            msg = m[q].queue[i]
            if (q, msg.label) not in labels:
                return {"receiver": p, "sender": q, "label": msg.label,
                        "supported": sorted(l for (pq, l) in labels if pq == q)}
    return None


def _stats(graph: StateGraph) -> dict:
    return graph.stats() | {"complete": graph.complete}


def check_session_safety(graph: StateGraph) -> Verdict:
    for i, m in enumerate(graph.states):
        bad = safety_violation(m)
        if bad is not None:
            detail = (f"{bad['receiver']} cannot receive {bad['label']} from {bad['sender']};"
                      f" supported from {bad['sender']}: {', '.join(bad['supported'])}")
            return Verdict("safe", "no", graph.prefix(i), None, detail, _stats(graph), bad)
    if not graph.complete:
        return Verdict("safe", "inconclusive", detail=graph.reason or "", stats=_stats(graph))
    return Verdict("safe", "yes", stats=_stats(graph))


def check_session_deadlock(graph: StateGraph) -> Verdict:
    for i in graph.terminals():
        if not session_terminated(graph.states[i]):
            detail = "stuck in a non-terminated session"
            stuck = getattr(graph, "stuck", {}).get(i)
            if stuck:
                detail += f" (non-boolean condition at {', '.join(stuck)})"
            return Verdict("deadlock-free", "no", graph.prefix(i), None, detail, _stats(graph))
    if not graph.complete:
        return Verdict("deadlock-free", "inconclusive", detail=graph.reason or "", stats=_stats(graph))
    return Verdict("deadlock-free", "yes", stats=_stats(graph))


def session_obligations(m: Session) -> list[tuple]:
    out = []
    for p, a in m.items():
        head = unfold_process_head(a.process)
        match head:
            case Cond():
                out.append(("if", p))
            case IntChoice():
                out.append(("out", p))
            case ExtChoice(branches):
                out.append(("in", p, frozenset((b.peer, b.label) for b in branches)))
        seen = set()
        for msg in a.queue:
            if msg.receiver not in seen:
                seen.add(msg.receiver)
                out.append(("msg", p, msg.receiver, msg.label))
    return out


def _obligation_json(o: tuple) -> list:
    return [sorted(map(list, x)) if isinstance(x, frozenset) else x for x in o]


def check_session_liveness(graph: StateGraph) -> Verdict:
    if not graph.complete:
        return Verdict("live", "inconclusive", detail=graph.reason or "", stats=_stats(graph))
    v = find_liveness_violation(graph, lambda i: session_obligations(graph.states[i]), discharges,
                                lambda i: enabled_pairs(graph, i))
    if v is None:
        return Verdict("live", "yes", stats=_stats(graph))
    return Verdict("live", "no", v.prefix + v.path, v.cycle, describe_obligation(v.obligation),
                   _stats(graph), {"obligation": _obligation_json(v.obligation)})


CHECKS = {"safe": check_session_safety, "deadlock-free": check_session_deadlock, "live": check_session_liveness}


def check_session_property(n: Session, prop: str, max_states: int = DEFAULT_MAX_STATES,
                           bound: int = DEFAULT_BOUND) -> Verdict:
    return CHECKS[prop](explore_session(n, max_states, bound))


# -- co-simulation ----------------------------------------------------------

@dataclass
class CoSimStep:
    session_label: str
    env_label: str | None
    typed: bool

    def to_json(self) -> dict:
        return {"session": self.session_label, "env": self.env_label, "typed": self.typed}


@dataclass
class CoSimReport:
    env_safe: str = "inconclusive"
    pairs: int = 0
    steps: list[CoSimStep] = field(default_factory=list)
    sr_ok: bool = True
    fidelity_ok: bool = True
    complete: bool = True
    reason: str = ""
    divergences: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.sr_ok and self.fidelity_ok

    def to_json(self) -> dict:
        return {
            "env_safe": self.env_safe,
            "pairs": self.pairs,
            "steps": len(self.steps),
            "subject_reduction": self.sr_ok,
            "fidelity": self.fidelity_ok,
            "complete": self.complete,
            "reason": self.reason,
            "divergences": self.divergences,
        }


class NotTypable(ValueError):
    def __init__(self, errors):
        super().__init__("; ".join(map(str, errors)))
        self.errors = errors


MAX_RECORDED_STEPS = 10_000


def cosimulate(n: Session, g: TypingEnv, bound: int = DEFAULT_BOUND,
               max_states: int = DEFAULT_MAX_STATES) -> CoSimReport:
    errors = check_session(n, g)
    if errors:
        raise NotTypable(errors)
    report = CoSimReport()
    report.env_safe = check_env_safety(explore_env(g, bound, max_states)).result
    assert_sr = report.env_safe == "yes"
    keyer = StateKeyer()
    init = (normalize(n), normalize_env(g))
    seen = {(keyer.session(init[0]), keyer.env(init[1]))}
    queue = deque([(init, [], [])])
    while queue:
        (m, env), strace, etrace = queue.popleft()
        report.pairs += 1
        env_steps = env_successors(env, bound)
        by_label = {s.label: s.env for s in env_steps}
        if env_steps.bound_exceeded:
            report.complete = False
            report.reason = f"queue bound {bound} exceeded"
        nexts = []
        for s in successors(m):
            if isinstance(s.label, CondStep):
                env2, elab = env, None
            else:
                env2 = by_label.get(s.label)
                elab = str(s.label) if env2 is not None else None
                if env2 is None:
                    if s.label.kind == "send" and len(s.next[s.label.subject].queue) > bound:
                        report.complete = False
                        report.reason = f"queue bound {bound} exceeded"
                        continue
                    if assert_sr:
                        report.sr_ok = False
                        report.divergences.append({
                            "kind": "subject-reduction", "reason": "no matching environment step",
                            "session_trace": strace + [str(s.label)], "env_trace": etrace})
                    continue
            typed = not check_session(s.next, env2)
            if len(report.steps) < MAX_RECORDED_STEPS:
                report.steps.append(CoSimStep(str(s.label), elab, typed))
            if not typed:
                if assert_sr:
                    report.sr_ok = False
                    report.divergences.append({
                        "kind": "subject-reduction", "reason": "reduct not typable",
                        "session_trace": strace + [str(s.label)],
                        "env_trace": etrace + ([elab] if elab else [])})
                continue
            nexts.append((s, env2, elab))
        if env_steps and not _fidelity(m, env, by_label):
            report.fidelity_ok = False
            report.divergences.append({
                "kind": "fidelity", "reason": "environment can move but the session cannot follow",
                "session_trace": strace, "env_trace": etrace})
        for s, env2, elab in nexts:
            k = (keyer.session(s.next), keyer.env(env2))
            if k in seen:
                continue
            if len(seen) >= max_states:
                report.complete = False
                report.reason = f"state cap {max_states} reached"
                continue
            seen.add(k)
            queue.append(((s.next, env2), strace + [str(s.label)], etrace + ([elab] if elab else [])))
    return report


def _fidelity(m: Session, env: TypingEnv, by_label: dict, limit: int = 10_000) -> bool:
    """Some session run of conditional steps then one communication is matched by an env step."""
    frontier, seen = deque([m]), 0
    while frontier and seen < limit:
        cur = frontier.popleft()
        seen += 1
        for s in successors(cur):
            if isinstance(s.label, CondStep):
                frontier.append(s.next)
                continue
            env2 = by_label.get(s.label)
            if env2 is not None and not check_session(s.next, env2):
                return True
    return False


# -- transfer of verdicts ---------------------------------------------------

@dataclass
class TransferReport:
    env: dict[str, Verdict]
    session: dict[str, Verdict]

    def implication(self, prop: str) -> str:
        e, s = self.env[prop].result, self.session[prop].result
        if e == "no":
            return "vacuous"
        if e == "inconclusive" or s == "inconclusive":
            return "untested"
        return "confirmed" if s == "yes" else "violated"

    @property
    def implications(self) -> dict[str, str]:
        return {p: self.implication(p) for p in ("safe", "deadlock-free", "live")}

    @property
    def violated(self) -> list[str]:
        return [p for p, r in self.implications.items() if r == "violated"]

    def to_json(self) -> dict:
        return {
            "env": {p: v.result for p, v in self.env.items()},
            "session": {p: v.result for p, v in self.session.items()},
            "implications": self.implications,
        }


def transfer_check(n: Session, g: TypingEnv, bound: int = DEFAULT_BOUND,
                   max_states: int = DEFAULT_MAX_STATES) -> TransferReport:
    errors = check_session(n, g)
    if errors:
        raise NotTypable(errors)
    eg = explore_env(g, bound, max_states)
    sg = explore_session(n, max_states, bound)
    env = {"safe": check_env_safety(eg), "deadlock-free": check_env_deadlock(eg), "live": check_env_liveness(eg)}
    ses = {"safe": check_session_safety(sg), "deadlock-free": check_session_deadlock(sg),
           "live": check_session_liveness(sg)}
    return TransferReport(env, ses)
