"""The concurrent-input macro ``conc{R1, ..., Rk}.Q``.

A chain is a linear list of prefixes headed by an input.  The macro expands
to an external choice over every chain, each followed by the expansion of
the remaining chains, with the tail appended at every leaf.  For processes
the prefixes carry binders and payload values; for session types they carry
sorts.  The same expansion serves both.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .ast import (
    End, ExtChoice, ExtT, InBranch, IntChoice, IntT, OutBranch, Process, RecT,
    SessionType, Sort, TBranch, TVar, Value,
)


class MacroError(ValueError):
    pass


@dataclass(frozen=True)
class Prefix:
    """One ``peer?label(arg)`` or ``peer!label(arg)`` step of a chain.

    ``arg`` is a binder name or payload value in a process chain and a
    :class:`Sort` in a type chain.
    """

    direction: str  # "?" or "!"
    peer: str
    label: str
    arg: Union[str, Value, Sort]

    @property
    def is_input(self) -> bool:
        return self.direction == "?"


PrefixChain = Sequence[Prefix]


def _is_type_chain(chain: PrefixChain) -> bool:
    return any(isinstance(p.arg, Sort) for p in chain)


def chain_to_process(chain: PrefixChain, tail: Process) -> Process:
    out = tail
    for p in reversed(chain):
        if p.is_input:
            out = ExtChoice((InBranch(p.peer, p.label, p.arg, out),))
        else:
            out = IntChoice((OutBranch(p.peer, p.label, p.arg, out),))
    return out


def chain_to_type(chain: PrefixChain, tail: SessionType) -> SessionType:
    out = tail
    for p in reversed(chain):
        ctor = ExtT if p.is_input else IntT
        out = ctor((TBranch(p.peer, p.label, p.arg, out),))
    return out


def _validate(chains: Sequence[PrefixChain]) -> None:
    if not chains:
        raise MacroError("conc needs at least one chain")
    heads = set()
    for chain in chains:
        if not chain:
            raise MacroError("empty chain in conc")
        head = chain[0]
        if not head.is_input:
            raise MacroError(f"conc chain must start with an input, got {head.peer}!{head.label}")
        key = (head.peer, head.label)
        if key in heads:
            raise MacroError(f"duplicate conc head {head.peer}?{head.label}")
        heads.add(key)


def expand_concur(chains: Sequence[PrefixChain], tail):
    """Expand ``conc{chains}.tail`` into nested external choices.

    ``tail`` decides the target language: a :class:`SessionType` tail
    produces a type, anything else a process.  With k chains the result has
    k! root-to-leaf interleavings.
    """
    chains = [list(c) for c in chains]
    _validate(chains)
    as_type = isinstance(tail, (End, ExtT, IntT, RecT, TVar))
    if not as_type and chains and _is_type_chain(chains[0]):
        raise MacroError("type chain with a process tail")
    return _expand(chains, tail, as_type)


def _expand(chains: list[list[Prefix]], tail, as_type: bool):
    if len(chains) == 1:
        return (chain_to_type if as_type else chain_to_process)(chains[0], tail)
    branches = []
    for i, chain in enumerate(chains):
        rest = _expand(chains[:i] + chains[i + 1:], tail, as_type)
        head, body = chain[0], chain[1:]
        if as_type:
            branches.append(TBranch(head.peer, head.label, head.arg, chain_to_type(body, rest)))
        else:
            branches.append(InBranch(head.peer, head.label, head.arg, chain_to_process(body, rest)))
    return ExtT(tuple(branches)) if as_type else ExtChoice(tuple(branches))
