"""Generators for one-shot federated-learning sessions and their typing environments.

Participants are ``p1 ... pn``; payloads are the literal ``1`` of sort nat.
In the centralized protocol ``p1`` is the server and the others are clients;
in the decentralized one every participant plays both roles.
"""

from __future__ import annotations

from .syntax.ast import Session, TypingEnv
from .syntax.parser import parse_env, parse_process, parse_session, parse_type


def _check_n(n: int) -> None:
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"federated learning needs at least 2 participants, got {n!r}")


def _seq(prefixes: list[str], tail: str, typed: bool) -> str:
    """Nest prefixes right to left: ``a.b.tail``, braced when writing types."""
    out = tail
    for pre in reversed(prefixes):
        if typed:
            brace = "+{" if "!" in pre else "&{"
            out = f"{brace}{pre}" + (f".{out}" if out != "end" else "") + "}"
        else:
            out = pre + (f".{out}" if out != "0" else "")
    return out


def _conc(chains: list[str], tail: str, typed: bool) -> str:
    done = "end" if typed else "0"
    body = "conc{" + ", ".join(chains) + "}"
    return body if tail == done else f"{body}.{tail}"


def centralized_text(n: int) -> tuple[str, str]:
    _check_n(n)
    clients = [f"p{i}" for i in range(2, n + 1)]
    ses, env = [], []
    server = _seq([f"{c}!ld(1)" for c in clients],
                  _conc([f"{c}?upd(x{c[1:]})" for c in clients], "0", False), False)
    server_t = _seq([f"{c}!ld(nat)" for c in clients],
                    _conc([f"{c}?upd(nat)" for c in clients], "end", True), True)
    ses.append(f"participant p1 {{ {server} }} queue []")
    env.append(f"p1 : ([], {server_t})")
    for c in clients:
        ses.append(f"participant {c} {{ p1?ld(x).p1!upd(1) }} queue []")
        env.append(f"{c} : ([], {_client_type()})")
    return "\n".join(ses) + "\n", ";\n".join(env) + "\n"


def _client_type() -> str:
    return "&{p1?ld(nat).+{p1!upd(nat)}}"


def _upgraded_client_type() -> str:
    return "&{p1?ld(nat).+{p1!upd(nat)}, p1?ld2(nat).+{p1!upd2(nat)}}"


def _upgraded_client() -> str:
    return "sum{p1?ld(x).p1!upd(1), p1?ld2(y).p1!upd2(1)}"


def decentralized_text(n: int) -> tuple[str, str]:
    _check_n(n)
    names = [f"p{i}" for i in range(1, n + 1)]
    ses, env = [], []
    for me in names:
        others = [p for p in names if p != me]
        proc = _seq([f"{o}!ld(1)" for o in others],
                    _conc([f"{o}?ld(x{o[1:]}).{o}!upd(1)" for o in others],
                          _conc([f"{o}?upd(y{o[1:]})" for o in others], "0", False), False), False)
        typ = _seq([f"{o}!ld(nat)" for o in others],
                   _conc([f"{o}?ld(nat).{o}!upd(nat)" for o in others],
                         _conc([f"{o}?upd(nat)" for o in others], "end", True), True), True)
        ses.append(f"participant {me} {{ {proc} }} queue []")
        env.append(f"{me} : ([], {typ})")
    return "\n".join(ses) + "\n", ";\n".join(env) + "\n"


def gen_centralized(n: int) -> tuple[Session, TypingEnv]:
    s, e = centralized_text(n)
    return parse_session(s), parse_env(e)


def gen_decentralized(n: int) -> tuple[Session, TypingEnv]:
    s, e = decentralized_text(n)
    return parse_session(s), parse_env(e)


def gen_multimodel_upgrade():
    """The two-model client ``Q'`` with its own type ``T2'`` and the plain client type ``T2``."""
    return parse_process(_upgraded_client()), parse_type(_upgraded_client_type()), parse_type(_client_type())


def upgrade_centralized(n: int, client: str = "p2", widen_env: bool = False) -> tuple[Session, TypingEnv]:
    """``FL_C(n)`` with ``client`` running ``Q'``; with ``widen_env`` its binding gets ``T2'`` too."""
    _check_n(n)
    if client == "p1" or client not in {f"p{i}" for i in range(2, n + 1)}:
        raise ValueError(f"no client named {client!r}")
    session, env = gen_centralized(n)
    q, t2prime, _ = gen_multimodel_upgrade()
    session = session.update(**{client: session[client].__class__(q, ())})
    if widen_env:
        env = env.update(**{client: env[client].__class__((), t2prime)})
    return session, env
