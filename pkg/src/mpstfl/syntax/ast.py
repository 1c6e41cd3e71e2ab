"""Abstract syntax for processes, sessions, session types and typing environments.

All nodes are frozen dataclasses, so terms can be shared freely between
states during exploration and used as dictionary keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union


# -- values -----------------------------------------------------------------

@dataclass(frozen=True)
class Nat:
    value: int


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


Value = Union[Nat, Bool, Var]


# -- processes --------------------------------------------------------------

@dataclass(frozen=True)
class Inact:
    pass


@dataclass(frozen=True)
class InBranch:
    peer: str
    label: str
    binder: str
    cont: "Process"


@dataclass(frozen=True)
class OutBranch:
    peer: str
    label: str
    payload: Value
    cont: "Process"


@dataclass(frozen=True)
class ExtChoice:
    branches: tuple[InBranch, ...]


@dataclass(frozen=True)
class IntChoice:
    branches: tuple[OutBranch, ...]


@dataclass(frozen=True)
class Cond:
    cond: Value
    then: "Process"
    else_: "Process"


@dataclass(frozen=True)
class Rec:
    var: str
    body: "Process"


@dataclass(frozen=True)
class PVar:
    name: str


Process = Union[Inact, ExtChoice, IntChoice, Cond, Rec, PVar]


# -- queues and sessions ----------------------------------------------------

@dataclass(frozen=True)
class Msg:
    receiver: str
    label: str
    payload: Value


Queue = tuple  # tuple[Msg, ...], oldest message first


@dataclass(frozen=True)
class Actor:
    process: Process
    queue: tuple[Msg, ...] = ()


@dataclass(frozen=True)
class Session:
    """Participants mapped to (process, output queue), kept sorted by name."""

    actors: tuple[tuple[str, Actor], ...]

    @classmethod
    def of(cls, mapping) -> "Session":
        items = mapping.items() if hasattr(mapping, "items") else mapping
        return cls(tuple(sorted(items, key=lambda kv: kv[0])))

    def __getitem__(self, name: str) -> Actor:
        for n, a in self.actors:
            if n == name:
                return a
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.actors)

    def __iter__(self) -> Iterator[str]:
        return (n for n, _ in self.actors)

    def __len__(self) -> int:
        return len(self.actors)

    def items(self):
        return iter(self.actors)

    @property
    def participants(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.actors)

    def update(self, **changes: Actor) -> "Session":
        return Session(tuple((n, changes.get(n, a)) for n, a in self.actors))


# -- types ------------------------------------------------------------------

class Sort(Enum):
    NAT = "nat"
    BOOL = "bool"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class End:
    pass


@dataclass(frozen=True)
class TBranch:
    peer: str
    label: str
    sort: Sort
    cont: "SessionType"


@dataclass(frozen=True)
class ExtT:
    branches: tuple[TBranch, ...]


@dataclass(frozen=True)
class IntT:
    branches: tuple[TBranch, ...]


@dataclass(frozen=True)
class RecT:
    var: str
    body: "SessionType"


@dataclass(frozen=True)
class TVar:
    name: str


SessionType = Union[End, ExtT, IntT, RecT, TVar]


@dataclass(frozen=True)
class QMsg:
    receiver: str
    label: str
    sort: Sort


@dataclass(frozen=True)
class Binding:
    queue: tuple[QMsg, ...]
    type: SessionType


@dataclass(frozen=True)
class TypingEnv:
    """Participants mapped to (queue type, session type), sorted by name."""

    bindings: tuple[tuple[str, Binding], ...]

    @classmethod
    def of(cls, mapping) -> "TypingEnv":
        items = mapping.items() if hasattr(mapping, "items") else mapping
        return cls(tuple(sorted(items, key=lambda kv: kv[0])))

    def __getitem__(self, name: str) -> Binding:
        for n, b in self.bindings:
            if n == name:
                return b
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.bindings)

    def __iter__(self) -> Iterator[str]:
        return (n for n, _ in self.bindings)

    def __len__(self) -> int:
        return len(self.bindings)

    def items(self):
        return iter(self.bindings)

    @property
    def participants(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.bindings)

    def update(self, **changes: Binding) -> "TypingEnv":
        return TypingEnv(tuple((n, changes.get(n, b)) for n, b in self.bindings))


@dataclass(frozen=True)
class SharedEnv:
    """Sorts of value variables and types of process variables (Theta)."""

    values: tuple[tuple[str, Sort], ...] = ()
    procs: tuple[tuple[str, SessionType], ...] = field(default=())

    def sort_of(self, name: str) -> Sort | None:
        for n, s in reversed(self.values):
            if n == name:
                return s
        return None

    def type_of(self, name: str) -> SessionType | None:
        for n, t in reversed(self.procs):
            if n == name:
                return t
        return None

    def with_value(self, name: str, sort: Sort) -> "SharedEnv":
        return SharedEnv(self.values + ((name, sort),), self.procs)

    def with_proc(self, name: str, t: SessionType) -> "SharedEnv":
        return SharedEnv(self.values, self.procs + ((name, t),))


EMPTY_THETA = SharedEnv()


def value_sort(v: Value) -> Sort | None:
    match v:
        case Nat():
            return Sort.NAT
        case Bool():
            return Sort.BOOL
    return None


def is_ground(v: Value) -> bool:
    return not isinstance(v, Var)
