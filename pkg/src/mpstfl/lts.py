"""Explicit-state exploration and the property machinery shared by sessions and environments.

States are numbered in BFS order, so state 0 is the initial state and BFS
parents give shortest witness prefixes.  Liveness is decided per obligation:
an obligation is violated when some state carrying it can reach, without a
discharging edge, either a terminal state or a fair strongly connected
sub-graph (Streett fairness per participant and action kind).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable


class Inconclusive(Exception):
    """Exploration stopped early; ``graph`` holds the partial state graph."""

    def __init__(self, reason: str, graph: "StateGraph | None" = None):
        super().__init__(reason)
        self.reason = reason
        self.graph = graph


@dataclass
class StateGraph:
    states: list = field(default_factory=list)
    succ: list[list[tuple]] = field(default_factory=list)  # [(label, target)]
    parent: list = field(default_factory=list)  # (pred, label) or None
    truncated: set[int] = field(default_factory=set)  # not (fully) expanded
    complete: bool = True
    reason: str | None = None
    decode: Callable | None = None  # compact state -> term, when states are stored compactly

    def state(self, i: int):
        return self.decode(self.states[i]) if self.decode else self.states[i]

    def __len__(self) -> int:
        return len(self.states)

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.succ)

    def is_terminal(self, i: int) -> bool:
        return not self.succ[i] and i not in self.truncated

    def terminals(self) -> list[int]:
        return [i for i in range(len(self.states)) if self.is_terminal(i)]

    def prefix(self, i: int) -> list:
        """Labels of a shortest path from the initial state to ``i``."""
        out = []
        while self.parent[i] is not None:
            i, lab = self.parent[i]
            out.append(lab)
        out.reverse()
        return out

    def stats(self) -> dict:
        return {"states": len(self.states), "edges": self.n_edges}


def explore(init, step: Callable, key: Callable, max_states: int) -> StateGraph:
    """Breadth-first closure.

    ``step(state)`` returns ``(successors, truncated)`` where successors is a
    list of ``(label, next_state)`` and ``truncated`` says some successor was
    cut off (for instance by a queue bound).  The graph is returned in all
    cases; ``complete`` is False when a cap or a truncation was hit.
    """
    if max_states < 1:
        raise ValueError("max_states must be >= 1")
    g = StateGraph()
    index: dict[Hashable, int] = {key(init): 0}
    g.states.append(init)
    g.succ.append([])
    g.parent.append(None)
    frontier = deque([0])
    while frontier:
        i = frontier.popleft()
        nexts, cut = step(g.states[i])
        if cut:
            g.truncated.add(i)
            g.complete = False
            g.reason = g.reason or "queue bound exceeded"
        edges = g.succ[i]
        for lab, nxt in nexts:
            k = key(nxt)
            j = index.get(k)
            if j is None:
                if len(g.states) >= max_states:
                    g.truncated.add(i)
                    g.complete = False
                    g.reason = f"state cap {max_states} reached"
                    continue
                j = len(g.states)
                index[k] = j
                g.states.append(nxt)
                g.succ.append([])
                g.parent.append((i, lab))
                frontier.append(j)
            edges.append((lab, j))
    # states left in the frontier were never expanded
    for i in frontier:
        g.truncated.add(i)
    return g


# -- verdicts ---------------------------------------------------------------

@dataclass
class Verdict:
    property: str
    result: str  # yes | no | inconclusive
    witness: list = field(default_factory=list)
    cycle: list | None = None
    detail: str = ""
    stats: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.result == "yes"

    def to_json(self) -> dict:
        out = {
            "property": self.property,
            "result": self.result,
            "witness": [str(x) for x in self.witness],
            "detail": self.detail,
            "stats": dict(self.stats),
        }
        if self.info:
            out["info"] = self.info
        if self.cycle is not None:
            out["cycle"] = [str(x) for x in self.cycle]
        return out


# -- strongly connected components ------------------------------------------

def sccs(nodes: Iterable[int], adj: Callable[[int], Iterable[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative; ``adj`` must only yield members of ``nodes``."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(adj(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def fair_components(nodes: set[int], edges: Callable[[int], list[tuple]],
                    enabled: Callable[[int], set]) -> list[set[int]]:
    """Maximal fair sub-graphs of the graph restricted to ``nodes``.

    ``edges(i)`` lists ``(label, j)``; a label fires the fairness pair
    ``(label.subject, label.kind)``.  A component is fair when every pair
    enabled at one of its states fires on one of its internal edges.
    Components that are not fair lose the states enabling an unfired pair
    and are split again (Streett refinement).
    """
    out = []
    work = [set(nodes)]
    while work:
        region = work.pop()
        comps = sccs(sorted(region), lambda i: (j for _, j in edges(i) if j in region))
        for comp in comps:
            cs = set(comp)
            fired = set()
            has_edge = False
            for i in comp:
                for lab, j in edges(i):
                    if j in cs:
                        has_edge = True
                        fired.add((lab.subject, lab.kind))
            if not has_edge:
                continue
            wanted = set().union(*(enabled(i) for i in comp))
            unfair = wanted - fired
            if not unfair:
                out.append(cs)
                continue
            rest = {i for i in comp if not (enabled(i) & unfair)}
            if rest:
                work.append(rest)
    return out


def _cyclic_nodes(g: StateGraph) -> set[int]:
    nodes = set()
    for comp in sccs(range(len(g)), lambda i: (j for _, j in g.succ[i])):
        if len(comp) > 1 or any(j == comp[0] for _, j in g.succ[comp[0]]):
            nodes.update(comp)
    return nodes


def _path(start: int, goal: Callable[[int], bool], edges: Callable[[int], Iterable[tuple]],
          allowed: Callable[[int], bool] = lambda i: True) -> tuple[list, int] | None:
    """Shortest labeled path from ``start`` to a state satisfying ``goal``."""
    if goal(start):
        return [], start
    prev = {start: None}
    q = deque([start])
    while q:
        i = q.popleft()
        for lab, j in edges(i):
            if j in prev or not allowed(j):
                continue
            prev[j] = (i, lab)
            if goal(j):
                labs = []
                k = j
                while prev[k] is not None:
                    k, lab2 = prev[k]
                    labs.append(lab2)
                labs.reverse()
                return labs, j
            q.append(j)
    return None


def _fair_cycle(comp: set[int], edges, enabled) -> list:
    """A closed walk inside ``comp`` that fires every pair enabled in it (at least one edge)."""
    start = min(comp)
    internal = [(i, lab, j) for i in sorted(comp) for lab, j in edges(i) if j in comp]
    wanted = set().union(*(enabled(i) for i in comp))
    inside = lambda j: j in comp  # noqa: E731
    walk, cur = [], start
    for pair in sorted(wanted):
        if any((lab.subject, lab.kind) == pair for lab in walk):
            continue
        i, lab, j = next(e for e in internal if (e[1].subject, e[1].kind) == pair)
        hop = _path(cur, lambda k, i=i: k == i, edges, inside)
        walk += hop[0] + [lab]
        cur = j
    if not walk:
        i, lab, j = internal[0]
        walk = _path(cur, lambda k: k == i, edges, inside)[0] + [lab]
        cur = j
    return walk + _path(cur, lambda k: k == start, edges, inside)[0]


def discharges(o: tuple, lab) -> bool:
    """Does a transition labeled ``lab`` discharge obligation ``o``?

    Obligations: ``("if", p)`` a pending conditional, ``("out", p)`` a pending
    internal choice, ``("msg", owner, receiver, label)`` a queued message and
    ``("in", p, branches)`` a pending external choice.
    """
    match o:
        case ("if", p):
            return lab.kind == "if" and lab.subject == p
        case ("out", p):
            return lab.kind == "send" and lab.subject == p
        case ("msg", owner, receiver, label):
            return lab.kind == "recv" and (lab.subject, lab.peer, lab.label) == (receiver, owner, label)
        case ("in", p, branches):
            return lab.kind == "recv" and lab.subject == p and (lab.peer, lab.label) in branches
    raise ValueError(f"unknown obligation {o!r}")


def describe_obligation(o: tuple) -> str:
    match o:
        case ("if", p):
            return f"{p} never reduces its conditional"
        case ("out", p):
            return f"{p} never performs its pending send"
        case ("msg", owner, receiver, label):
            return f"message {label} queued by {owner} for {receiver} is never received"
        case ("in", p, branches):
            opts = ", ".join(f"{q}?{l}" for q, l in sorted(branches))
            return f"{p} waits forever on {{{opts}}}"
    return repr(o)


def enabled_pairs(g: StateGraph, i: int) -> set:
    return {(lab.subject, lab.kind) for lab, _ in g.succ[i]}


@dataclass
class LivenessViolation:
    state: int
    obligation: tuple
    prefix: list
    path: list
    cycle: list | None
    end: int


def find_liveness_violation(g: StateGraph, obligations: Callable[[int], Iterable[tuple]],
                            discharges: Callable[[tuple, object], bool],
                            enabled: Callable[[int], set]) -> LivenessViolation | None:
    """Search for a fair maximal path along which some obligation stays pending forever.

    For each obligation, a multi-source BFS from the states carrying it
    follows only non-discharging edges.  Whatever it reaches is reachable
    from a carrier, so meeting a terminal state or a fair component is a
    violation.  Finite maximal paths count as fair.  Requires a complete graph.
    """
    n = len(g)
    labels: dict = {}
    succ = []
    for edges in g.succ:
        succ.append([(labels.setdefault(lab, len(labels)), j) for lab, j in edges])
    label_list = list(labels)
    terminal = [g.is_terminal(i) for i in range(n)]
    carriers: dict[tuple, list[int]] = {}
    for i in range(n):
        for o in obligations(i):
            carriers.setdefault(o, []).append(i)
    cyclic = _cyclic_nodes(g)
    best = None
    for o in sorted(carriers, key=repr):
        blocked = {k for k, lab in enumerate(label_list) if discharges(o, lab)}
        parent: dict[int, tuple | None] = {}
        q = deque()
        for i in carriers[o]:
            parent[i] = None
            q.append(i)
        hit = None
        while q:
            i = q.popleft()
            if terminal[i]:
                hit = i
                break
            for k, j in succ[i]:
                if k not in blocked and j not in parent:
                    parent[j] = (i, k)
                    q.append(j)
        fair = []
        if hit is None:
            region = cyclic.intersection(parent)
            if not region:
                continue

            def sub_edges(i, blocked=blocked):
                return [(label_list[k], j) for k, j in succ[i] if k not in blocked]

            fair = fair_components(region, sub_edges, enabled)
            if not fair:
                continue
            target = set().union(*fair)
            hit = min(target, key=lambda i: (_depth(parent, i), i))
        path, cur = [], hit
        while parent[cur] is not None:
            cur, k = parent[cur]
            path.append(label_list[k])
        path.reverse()
        s = cur
        if best is not None and (best.state, len(best.path)) <= (s, len(path)):
            continue
        cycle = None
        end = hit
        for comp in fair:
            if hit in comp:
                def sub_edges(i, blocked=blocked):
                    return [(label_list[k], j) for k, j in succ[i] if k not in blocked]
                cycle = _fair_cycle(comp, sub_edges, enabled)
                start = min(comp)
                if hit != start:
                    path += _path(hit, lambda k: k == start, sub_edges, lambda k: k in comp)[0]
                    end = start
                break
        best = LivenessViolation(s, o, g.prefix(s), path, cycle, end)
    return best


def _depth(parent: dict, i: int) -> int:
    d = 0
    while parent[i] is not None:
        i = parent[i][0]
        d += 1
    return d
