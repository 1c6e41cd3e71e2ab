"""Command-line interface.

Exit codes: 0 the property holds (or the command succeeded), 1 it fails,
2 usage, I/O or parse error, 3 inconclusive because a bound or cap was hit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .envcheck import CHECKS as ENV_CHECKS, DEFAULT_BOUND, explore_env
from .flgen import centralized_text, decentralized_text
from .semantics import self_sends, simulate
from .sessioncheck import (
    CHECKS as SESSION_CHECKS, NotTypable, cosimulate, explore_session, transfer_check,
)
from .subtyping import subtype
from .syntax import (
    ParseError, parse_env, parse_process, parse_session, parse_type, print_env,
    print_process, print_session, print_type,
)
from .typecheck import check_session

OK, FAIL, USAGE, INCONCLUSIVE = 0, 1, 2, 3
DEFAULT_MAX_STATES = 1_000_000
KINDS = {".ses": "session", ".env": "env", ".st": "type", ".proc": "process"}


class CliError(Exception):
    pass


def _max_states(arg: int | None) -> int:
    if arg is not None:
        return arg
    raw = os.environ.get("MPST_MAX_STATES")
    if raw is None:
        return DEFAULT_MAX_STATES
    try:
        value = int(raw)
    except ValueError:
        raise CliError(f"MPST_MAX_STATES must be an integer, got {raw!r}") from None
    if value < 1:
        raise CliError("MPST_MAX_STATES must be >= 1")
    return value


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _parse(path: str, kind: str):
    text = _read(path)
    parser = {"session": parse_session, "env": parse_env, "type": parse_type, "process": parse_process}[kind]
    try:
        return parser(text)
    except ParseError as exc:
        raise CliError(f"{path}: {exc}") from None


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps({"v": 1, **payload}, sort_keys=True, indent=2))
    else:
        print(text)


def _verdict_code(result: str) -> int:
    return {"yes": OK, "no": FAIL}.get(result, INCONCLUSIVE)


def _verdict_text(v) -> str:
    lines = [f"{v.property}: {v.result}"]
    if v.detail:
        lines.append(f"  {v.detail}")
    if v.witness:
        lines.append("  witness: " + " ; ".join(map(str, v.witness)))
    if v.cycle:
        lines.append("  cycle:   " + " ; ".join(map(str, v.cycle)))
    lines.append(f"  states: {v.stats.get('states')}  edges: {v.stats.get('edges')}")
    return "\n".join(lines)


# -- commands ---------------------------------------------------------------

def cmd_parse(args) -> int:
    kind = args.kind or KINDS.get(Path(args.file).suffix)
    if kind is None:
        raise CliError(f"cannot guess the kind of {args.file}; pass --kind")
    term = _parse(args.file, kind)
    printer = {"session": print_session, "env": print_env, "type": print_type, "process": print_process}[kind]
    text = printer(term)
    payload = {"kind": kind, "text": text}
    if kind == "session":
        lint = self_sends(term)
        if lint:
            print(f"warning: self-addressed messages queued by {', '.join(lint)}", file=sys.stderr)
            payload["lint"] = {"self_sends": lint}
    _emit(args, payload, text)
    return OK


def cmd_typecheck(args) -> int:
    n = _parse(args.session, "session")
    g = _parse(args.env, "env")
    errors = check_session(n, g)
    per = {}
    for p in sorted(set(n.participants) | set(g.participants)):
        errs = [e for e in errors if e.location == p or e.location.startswith(p + "/")]
        per[p] = {"ok": not errs, "errors": [e.to_json() for e in errs]}
    general = [e.to_json() for e in errors if e.location == ""]
    payload = {"ok": not errors, "participants": per, "errors": general}
    text = "well typed" if not errors else "\n".join(["type errors:"] + [f"  {e}" for e in errors])
    _emit(args, payload, text)
    return OK if not errors else FAIL


def cmd_subtype(args) -> int:
    a = _parse(args.file_a, "type")
    b = _parse(args.file_b, "type")
    try:
        holds = subtype(a, b)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    _emit(args, {"subtype": holds, "sub": print_type(a), "super": print_type(b)},
          f"{'is' if holds else 'is not'} a subtype")
    return OK if holds else FAIL


def cmd_check_env(args) -> int:
    g = _parse(args.file, "env")
    graph = explore_env(g, args.bound, _max_states(args.max_states))
    v = ENV_CHECKS[args.property](graph)
    _emit(args, v.to_json(), _verdict_text(v))
    return _verdict_code(v.result)


def cmd_check_session(args) -> int:
    n = _parse(args.file, "session")
    graph = explore_session(n, _max_states(args.max_states), args.bound)
    v = SESSION_CHECKS[args.property](graph)
    _emit(args, v.to_json(), _verdict_text(v))
    return _verdict_code(v.result)


def _typed_pair(args):
    n = _parse(args.session, "session")
    g = _parse(args.env, "env")
    return n, g


def cmd_cosim(args) -> int:
    n, g = _typed_pair(args)
    try:
        r = cosimulate(n, g, args.bound, _max_states(args.max_states))
    except NotTypable as exc:
        print(f"error: session is not typed by the environment: {exc}", file=sys.stderr)
        return FAIL
    lines = [f"environment safe: {r.env_safe}", f"pairs explored: {r.pairs}",
             f"subject reduction: {'ok' if r.sr_ok else 'DIVERGES'}",
             f"fidelity: {'ok' if r.fidelity_ok else 'DIVERGES'}"]
    if not r.complete:
        lines.append(f"incomplete: {r.reason}")
    for d in r.divergences[:1]:
        lines.append(f"first divergence ({d['kind']}): {d['reason']}")
        lines.append("  session: " + " ; ".join(d["session_trace"]))
        lines.append("  env:     " + " ; ".join(d["env_trace"]))
    _emit(args, r.to_json(), "\n".join(lines))
    if not r.ok:
        return FAIL
    return OK if r.complete else INCONCLUSIVE


def cmd_transfer(args) -> int:
    n, g = _typed_pair(args)
    try:
        r = transfer_check(n, g, args.bound, _max_states(args.max_states))
    except NotTypable as exc:
        print(f"error: session is not typed by the environment: {exc}", file=sys.stderr)
        return FAIL
    lines = [f"{p}: env {r.env[p].result}, session {r.session[p].result} -> {imp}"
             for p, imp in r.implications.items()]
    _emit(args, r.to_json(), "\n".join(lines))
    results = set(r.implications.values())
    if "violated" in results:
        return FAIL
    return INCONCLUSIVE if "untested" in results else OK


def cmd_simulate(args) -> int:
    n = _parse(args.file, "session")
    trace = simulate(n, args.steps, args.seed, args.policy)
    _emit(args, trace.to_json(), "\n".join(trace.lines() + [f"# {trace.terminal}"]))
    return OK


def cmd_gen_fl(args) -> int:
    maker = centralized_text if args.kind == "centralized" else decentralized_text
    try:
        ses, env = maker(args.n)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    for path, text in ((args.out_session, ses), (args.out_env, env)):
        if path:
            try:
                Path(path).write_text(text, encoding="utf-8")
            except OSError as exc:
                raise CliError(f"cannot write {path}: {exc.strerror or exc}") from None
    payload = {"kind": args.kind, "n": args.n, "session": ses, "env": env}
    text = "" if args.out_session and args.out_env else ses + "\n" + env
    if args.json or text:
        _emit(args, payload, text.rstrip("\n"))
    return OK


# -- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpstfl", description="Asynchronous multiparty session type toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=func)
        return p

    p = add("parse", cmd_parse, "parse a file and print it back canonically")
    p.add_argument("file")
    p.add_argument("--kind", choices=["session", "env", "type", "process"])

    p = add("typecheck", cmd_typecheck, "check a session against a typing environment")
    p.add_argument("--session", required=True)
    p.add_argument("--env", required=True)

    p = add("subtype", cmd_subtype, "decide whether the first type is a subtype of the second")
    p.add_argument("file_a")
    p.add_argument("file_b")

    props = ["safe", "deadlock-free", "live"]
    p = add("check-env", cmd_check_env, "model-check a typing environment")
    p.add_argument("file")
    p.add_argument("--property", choices=props, required=True)
    p.add_argument("--bound", type=_positive, default=DEFAULT_BOUND)
    p.add_argument("--max-states", type=_positive)

    p = add("check-session", cmd_check_session, "model-check a session")
    p.add_argument("file")
    p.add_argument("--property", choices=props, required=True)
    p.add_argument("--bound", type=_positive, default=DEFAULT_BOUND)
    p.add_argument("--max-states", type=_positive)

    for name, func, help_ in (("cosim", cmd_cosim, "co-simulate a session with its typing environment"),
                              ("transfer", cmd_transfer, "compare environment and session verdicts")):
        p = add(name, func, help_)
        p.add_argument("--session", required=True)
        p.add_argument("--env", required=True)
        p.add_argument("--bound", type=_positive, default=DEFAULT_BOUND)
        p.add_argument("--max-states", type=_positive)

    p = add("simulate", cmd_simulate, "run a seeded random execution")
    p.add_argument("file")
    p.add_argument("--steps", type=_non_negative, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=["fair", "uniform"], default="fair")

    p = add("gen-fl", cmd_gen_fl, "generate a federated-learning session and environment")
    p.add_argument("--kind", choices=["centralized", "decentralized"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out-session")
    p.add_argument("--out-env")
    return ap


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code not in (0, None) else OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except ValueError as exc:  # open terms and other ill-formed input
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
