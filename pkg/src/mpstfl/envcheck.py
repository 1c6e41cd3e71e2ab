"""Reduction of typing environments and checking of safety, deadlock-freedom and liveness.

Environments are explored with a per-participant bound on queue-type length.
A send that would exceed the bound is cut off, which makes the explored
graph partial: violations found in it are still real, but a positive answer
becomes inconclusive.

For exploration an environment is compiled into a table of type nodes, so a
state is a tuple of node ids plus one FIFO lane per (sender, receiver) pair.
Lanes per receiver are exactly the queue-type congruence classes, and node
ids are interned by canonical printing, so equal compact states are
congruent environments.
"""

from __future__ import annotations

from dataclasses import dataclass

from .congruence import fend, lane_head, unfold_type_head
from .lts import (
    StateGraph, Verdict, describe_obligation, discharges, enabled_pairs, explore,
    find_liveness_violation,
)
from .semantics import Recv, Send
from .syntax.ast import Binding, End, ExtT, IntT, QMsg, Sort, TypingEnv
from .syntax.printer import print_type

DEFAULT_BOUND = 16
DEFAULT_MAX_STATES = 1_000_000


@dataclass(frozen=True)
class EnvStep:
    label: Send | Recv
    env: TypingEnv


class EnvSteps(list):
    """Successor list; ``bound_exceeded`` lists the send labels cut off by the queue bound."""

    def __init__(self, items=(), bound_exceeded=()):
        super().__init__(items)
        self.bound_exceeded = tuple(bound_exceeded)


def normalize_env(g: TypingEnv) -> TypingEnv:
    changes = {}
    for name, b in g.items():
        head = unfold_type_head(b.type)
        if head is not b.type:
            changes[name] = Binding(b.queue, head)
    return g.update(**changes) if changes else g


def env_successors(g: TypingEnv, bound: int = DEFAULT_BOUND) -> EnvSteps:
    """All one-step reductions of ``g`` (send appends to the sender's queue; receive needs label and sort)."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    steps, cut = [], []
    for p, b in g.items():
        head = unfold_type_head(b.type)
        match head:
            case IntT(branches):
                for br in branches:
                    lab = Send(p, br.peer, br.label)
                    if len(b.queue) + 1 > bound:
                        cut.append(lab)
                        continue
                    q = b.queue + (QMsg(br.peer, br.label, br.sort),)
                    steps.append(EnvStep(lab, g.update(**{p: Binding(q, unfold_type_head(br.cont))})))
            case ExtT(branches):
                by_key = {(br.peer, br.label): br for br in branches}
                for q in sorted({br.peer for br in branches}):
                    if q not in g:
                        continue
                    queue = g[q].queue
                    i = lane_head(queue, p)
                    if i is None:
                        continue
                    msg = queue[i]
                    br = by_key.get((q, msg.label))
                    if br is None or br.sort != msg.sort:
                        continue
                    rest = queue[:i] + queue[i + 1:]
                    cont = unfold_type_head(br.cont)
                    if q == p:
                        nxt = g.update(**{p: Binding(rest, cont)})
                    else:
                        nxt = g.update(**{p: Binding(b.queue, cont), q: Binding(rest, g[q].type)})
                    steps.append(EnvStep(Recv(p, q, msg.label), nxt))
    return EnvSteps(steps, cut)


# -- compiled environments --------------------------------------------------

_END, _INT, _EXT = 0, 1, 2


class CompiledEnv:
    """Integer encoding of an environment and of every type reachable from it."""

    def __init__(self, g: TypingEnv):
        self.names = list(g.participants)
        extra = set()
        for _, b in g.items():
            extra |= {m.receiver for m in b.queue}
            extra |= _peers(b.type)
        self.receivers = self.names + sorted(extra - set(self.names))
        self.n, self.m = len(self.names), len(self.receivers)
        self.ridx = {r: i for i, r in enumerate(self.receivers)}
        self.nodes: list[tuple] = []
        self.types: list = []
        self.msgs: list[tuple[str, str]] = []  # interned (label, sort)
        self._msg_ids: dict[tuple[str, str], int] = {}
        self._by_text: dict[str, int] = {}
        self._by_id: dict[int, tuple] = {}
        self._steps: dict[tuple[int, int], tuple] = {}
        types = tuple(self._compile(b.type) for _, b in g.items())
        lanes = [[] for _ in range(self.n * self.m)]
        for pi, (_, b) in enumerate(g.items()):
            for msg in b.queue:
                lanes[pi * self.m + self.ridx[msg.receiver]].append(self._msg(msg.label, msg.sort.value))
        self.init = (types, tuple(tuple(x) for x in lanes))

    def _msg(self, label: str, sort: str) -> int:
        key = (label, sort)
        mid = self._msg_ids.get(key)
        if mid is None:
            mid = self._msg_ids[key] = len(self.msgs)
            self.msgs.append(key)
        return mid

    def _compile(self, t) -> int:
        """Node id of ``t``, compiling every reachable continuation on first sight."""
        hit = self._by_id.get(id(t))
        if hit is not None and hit[0] is t:
            return hit[1]
        head = unfold_type_head(t)
        text = print_type(head)
        nid = self._by_text.get(text)
        if nid is None:
            nid = len(self.nodes)
            self._by_text[text] = nid
            self.nodes.append(None)
            self.types.append(head)
            self._by_id[id(t)] = (t, nid)
            self.nodes[nid] = self._node(head)
        self._by_id[id(t)] = (t, nid)
        return nid

    def _node(self, head) -> tuple:
        match head:
            case End():
                return (_END,)
            case IntT(branches):
                return (_INT, tuple((self.ridx[b.peer], b.peer, b.label, self._msg(b.label, b.sort.value),
                                     self._compile(b.cont)) for b in branches))
            case ExtT(branches):
                by_sender: dict[str, dict] = {}
                for b in branches:
                    by_sender.setdefault(b.peer, {})[self._msg(b.label, b.sort.value)] = (b.label, self._compile(b.cont))
                table = tuple((self.ridx[q], q, by_sender[q]) for q in sorted(by_sender))
                opts = frozenset((b.peer, b.label) for b in branches)
                return (_EXT, table, opts)
        raise TypeError(f"not a session type: {head!r}")

    def _step_table(self, pi: int, nid: int) -> tuple:
        """Per participant and node: ``(kind, [(lane index, msg id, label, cont)])``."""
        key = (pi, nid)
        hit = self._steps.get(key)
        if hit is None:
            node, p, m = self.nodes[nid], self.names[pi], self.m
            if node[0] == _INT:
                hit = (_INT, tuple((pi * m + ri, mid, Send(p, peer, lab), cont)
                                   for ri, peer, lab, mid, cont in node[1]))
            elif node[0] == _EXT:
                rows = []
                for qi, q, table in node[1]:
                    if qi < self.n:
                        rows.append((qi * m + pi, {mid: (Recv(p, q, lab), cont) for mid, (lab, cont) in table.items()}))
                hit = (_EXT, tuple(rows))
            else:
                hit = (_END, ())
            self._steps[key] = hit
        return hit

    # state operations

    def successors(self, st, bound: int):
        types, lanes = st
        m = self.m
        out, cut = [], False
        for pi, t in enumerate(types):
            kind, rows = self._step_table(pi, t)
            if kind == _INT:
                base = pi * m
                if sum(len(lanes[k]) for k in range(base, base + m)) + 1 > bound:
                    cut = True
                    continue
                for k, mid, lab, cont in rows:
                    nl = lanes[:k] + (lanes[k] + (mid,),) + lanes[k + 1:]
                    out.append((lab, (types[:pi] + (cont,) + types[pi + 1:], nl)))
            elif kind == _EXT:
                for k, table in rows:
                    lane = lanes[k]
                    if lane:
                        hit = table.get(lane[0])
                        if hit is not None:
                            nl = lanes[:k] + (lane[1:],) + lanes[k + 1:]
                            out.append((hit[0], (types[:pi] + (hit[1],) + types[pi + 1:], nl)))
        return out, cut

    def decode(self, st) -> TypingEnv:
        types, lanes = st
        out = []
        for pi, name in enumerate(self.names):
            queue = tuple(QMsg(r, self.msgs[mid][0], Sort(self.msgs[mid][1]))
                          for ri, r in enumerate(self.receivers) for mid in lanes[pi * self.m + ri])
            out.append((name, Binding(queue, self.types[types[pi]])))
        return TypingEnv(tuple(out))

    def is_fend(self, st) -> bool:
        types, lanes = st
        return all(self.nodes[t][0] == _END for t in types) and not any(lanes)

    def safety_violation(self, st) -> dict | None:
        types, lanes = st
        for pi, t in enumerate(types):
            node = self.nodes[t]
            if node[0] != _EXT:
                continue
            for qi, q, table in node[1]:
                if qi >= self.n:
                    continue
                lane = lanes[qi * self.m + pi]
                if lane and lane[0] not in table:
                    lab, sort = self.msgs[lane[0]]
                    return {"receiver": self.names[pi], "sender": q, "label": lab, "sort": sort,
                            "supported": sorted(f"{l}({self.msgs[mid][1]})" for mid, (l, _) in table.items())}
        return None

    def obligations(self, st) -> list[tuple]:
        types, lanes = st
        out = []
        for pi, p in enumerate(self.names):
            for ri, r in enumerate(self.receivers):
                lane = lanes[pi * self.m + ri]
                if lane:
                    out.append(("msg", p, r, self.msgs[lane[0]][0]))
            node = self.nodes[types[pi]]
            if node[0] == _EXT:
                out.append(("in", p, node[2]))
        return out


def _peers(t, seen=None) -> set:
    seen = set() if seen is None else seen
    if id(t) in seen:
        return set()
    seen.add(id(t))
    match t:
        case ExtT(branches) | IntT(branches):
            out = {b.peer for b in branches}
            for b in branches:
                out |= _peers(b.cont, seen)
            return out
        case _ if hasattr(t, "body"):
            return _peers(t.body, seen)
    return set()


def explore_env(g: TypingEnv, bound: int = DEFAULT_BOUND, max_states: int = DEFAULT_MAX_STATES) -> StateGraph:
    """Breadth-first closure of the environment reduction; ``graph.state(i)`` decodes a state."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    comp = CompiledEnv(g)
    graph = explore(comp.init, lambda st: comp.successors(st, bound), lambda st: st, max_states)
    graph.decode = comp.decode
    graph.compiled = comp
    if graph.reason == "queue bound exceeded":
        graph.reason = f"queue bound {bound} exceeded"
    return graph


# -- properties -------------------------------------------------------------

def safety_violation(g: TypingEnv) -> dict | None:
    """The first label/sort mismatch at a queue head, or None."""
    for p, b in g.items():
        head = unfold_type_head(b.type)
        if not isinstance(head, ExtT):
            continue
        supported = {(br.peer, br.label, br.sort) for br in head.branches}
        for q in sorted({br.peer for br in head.branches}):
            if q not in g:
                continue
            i = lane_head(g[q].queue, p)
            if i is None:
                continue
            msg = g[q].queue[i]
            if (q, msg.label, msg.sort) not in supported:
                return {
                    "receiver": p, "sender": q, "label": msg.label, "sort": str(msg.sort),
                    "supported": sorted(f"{l}({s})" for (pq, l, s) in supported if pq == q),
                }
    return None


def _stats(graph: StateGraph) -> dict:
    return graph.stats() | {"complete": graph.complete}


def _compiled(graph: StateGraph):
    return getattr(graph, "compiled", None)


def _unsafe_at(graph: StateGraph, i: int):
    comp = _compiled(graph)
    return comp.safety_violation(graph.states[i]) if comp else safety_violation(graph.state(i))


def _is_fend(graph: StateGraph, i: int) -> bool:
    comp = _compiled(graph)
    return comp.is_fend(graph.states[i]) if comp else fend(graph.state(i))


def check_env_safety(graph: StateGraph) -> Verdict:
    for i in range(len(graph)):
        bad = _unsafe_at(graph, i)
        if bad is not None:
            detail = (f"{bad['receiver']} cannot receive {bad['label']}({bad['sort']}) from {bad['sender']};"
                      f" supported from {bad['sender']}: {', '.join(bad['supported'])}")
            return Verdict("safe", "no", graph.prefix(i), None, detail, _stats(graph), bad)
    if not graph.complete:
        return Verdict("safe", "inconclusive", detail=graph.reason or "", stats=_stats(graph))
    return Verdict("safe", "yes", stats=_stats(graph))


def check_env_deadlock(graph: StateGraph) -> Verdict:
    safe = check_env_safety(graph)
    if safe.result == "no":
        return Verdict("deadlock-free", "no", safe.witness, None, "unsafe: " + safe.detail, safe.stats, safe.info)
    for i in graph.terminals():
        if not _is_fend(graph, i):
            return Verdict("deadlock-free", "no", graph.prefix(i), None,
                           "stuck in a non-terminated environment", _stats(graph))
    if not graph.complete:
        return Verdict("deadlock-free", "inconclusive", detail=graph.reason or "", stats=_stats(graph))
    return Verdict("deadlock-free", "yes", stats=_stats(graph))


def env_obligations(g: TypingEnv) -> list[tuple]:
    """Pending obligations: queued lane heads and waiting external choices."""
    out = []
    for p, b in g.items():
        seen = set()
        for m in b.queue:
            if m.receiver not in seen:
                seen.add(m.receiver)
                out.append(("msg", p, m.receiver, m.label))
        head = unfold_type_head(b.type)
        if isinstance(head, ExtT):
            out.append(("in", p, frozenset((br.peer, br.label) for br in head.branches)))
    return out


def _obligation_json(o: tuple) -> list:
    return [sorted(map(list, x)) if isinstance(x, frozenset) else x for x in o]


def check_env_liveness(graph: StateGraph) -> Verdict:
    safe = check_env_safety(graph)
    if safe.result == "no":
        return Verdict("live", "no", safe.witness, None, "unsafe: " + safe.detail, safe.stats, safe.info)
    if not graph.complete:
        return Verdict("live", "inconclusive", detail=graph.reason or "", stats=_stats(graph))
    comp = _compiled(graph)
    if comp:
        obligations = lambda i: comp.obligations(graph.states[i])  # noqa: E731
    else:
        obligations = lambda i: env_obligations(graph.state(i))  # noqa: E731
    v = find_liveness_violation(graph, obligations, discharges, lambda i: enabled_pairs(graph, i))
    if v is None:
        return Verdict("live", "yes", stats=_stats(graph))
    return Verdict("live", "no", v.prefix + v.path, v.cycle, describe_obligation(v.obligation),
                   _stats(graph), {"obligation": _obligation_json(v.obligation)})


CHECKS = {"safe": check_env_safety, "deadlock-free": check_env_deadlock, "live": check_env_liveness}


def check_env(g: TypingEnv, prop: str, bound: int = DEFAULT_BOUND,
              max_states: int = DEFAULT_MAX_STATES) -> Verdict:
    return CHECKS[prop](explore_env(g, bound, max_states))
