"""Command line front end: ``evl <command> ...``.

Exit codes: 0 success, 1 parse/type/usage failure (and a ``check`` or
``relate`` that answers false), 2 evaluation stuck, 3 fuel exhausted.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from .evaluator import DEFAULT_FUEL, Done, FuelExhausted, Stuck, evaluate, trace
from .events import RELATIONS, is_event_scheme, relate
from .harness import AdmissionError, StreamAbort, admit, run_ndjson
from .infer import TypeInferenceError, check, closure, infer
from .parser import ParseError, parse, parse_env, parse_scheme, parse_type, pretty
from .prelude import prelude_env, primitives, with_library
from .runtime import to_term
from .syntax import U, PolyType, Term, prettify, show_kind, show_scheme, show_type

EXIT_OK, EXIT_FAIL, EXIT_STUCK, EXIT_FUEL = 0, 1, 2, 3


class Failure(Exception):
    """A user-facing error; printed to stderr and mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


def _default_fuel() -> int:
    raw = os.environ.get("EVL_FUEL")
    if raw is None:
        return DEFAULT_FUEL
    try:
        return int(raw)
    except ValueError:
        return DEFAULT_FUEL


def _positive(raw: str) -> int:
    n = int(raw)
    if n <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return n


# ---------------------------------------------------------------------------
# shared helpers

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise Failure(f"{path}: {e.strerror}") from None


def _extended(args) -> bool:
    return args.mode == "extended"


def _term(args, path: str) -> Term:
    m = parse(_read(path), path)
    return with_library(m) if _extended(args) else m


def _env(args) -> dict:
    env = dict(prelude_env(_extended(args))) if args.prelude else {}
    for path in args.env or ():
        env.update(parse_env(_read(path), path))
    return env


def _prims(args):
    return primitives(_extended(args)) if args.prelude else {}


def _emit(args, text: str, data: dict):
    print(json.dumps(data, sort_keys=True) if args.json else text)


def _infer_closed(args, m: Term):
    env = _env(args)
    try:
        K, S, t = infer({}, env, m, extended=_extended(args))
    except TypeInferenceError as e:
        raise Failure(f"type error: {e}") from None
    return env, K, S, t


# ---------------------------------------------------------------------------
# commands

def cmd_parse(args) -> int:
    m = _term(args, args.file)
    _emit(args, pretty(m), {"term": pretty(m)})
    return EXIT_OK


def cmd_infer(args) -> int:
    m = _term(args, args.file)
    env, K, S, t = _infer_closed(args, m)
    K1, sigma = closure(K, env, t)
    K1, sigma = prettify(K1, sigma)
    lines = [show_scheme(sigma)]
    if K1:
        lines.insert(0, "kinds: " + ", ".join(f"{v}::{show_kind(k)}" for v, k in K1.items()))
    data = {
        "type": show_scheme(sigma),
        "kinds": {v: show_kind(k) for v, k in K1.items()},
        # the substitution restricted to variables the caller could see
        "subst": {v: show_type(x) for v, x in S.items() if not v.startswith("'")},
    }
    _emit(args, "\n".join(lines), data)
    return EXIT_OK


def cmd_check(args) -> int:
    m = _term(args, args.file)
    t = parse_type(args.type, "<type>")
    ok = check({v: U for v in sorted(t.ftv)}, _env(args), m, t, extended=_extended(args))
    _emit(args, "true" if ok else "false", {"holds": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _typecheck_for_eval(args, m: Term):
    if args.unsafe:
        return
    _infer_closed(args, m)


def _outcome(args, out, steps: int, value_term: Optional[Term]) -> int:
    if isinstance(out, Done):
        _emit(args, pretty(value_term), {"outcome": "done", "value": pretty(value_term), "steps": steps})
        return EXIT_OK
    if isinstance(out, Stuck):
        _emit(args, f"stuck ({out.reason}): {pretty(out.term)}",
              {"outcome": "stuck", "reason": out.reason, "term": pretty(out.term), "steps": steps})
        return EXIT_STUCK
    _emit(args, f"fuel exhausted after {out.steps} steps",
          {"outcome": "fuel-exhausted", "steps": out.steps})
    return EXIT_FUEL


def cmd_eval(args) -> int:
    m = _term(args, args.file)
    _typecheck_for_eval(args, m)
    r = evaluate(m, fuel=args.fuel, prims=_prims(args), strategy=args.strategy)
    value_term = to_term(r.value) if r.ok else None
    return _outcome(args, r.outcome, r.steps, value_term)


def cmd_trace(args) -> int:
    m = _term(args, args.file)
    _typecheck_for_eval(args, m)
    rows = [{"step": 0, "term": pretty(m)}]
    last = None
    for out in trace(m, fuel=args.fuel, prims=_prims(args)):
        if isinstance(out, (Done, Stuck, FuelExhausted)):
            last = out
            break
        rows.append({"step": len(rows), "term": pretty(out.term)})
    if args.json:
        kind = {Done: "done", Stuck: "stuck", FuelExhausted: "fuel-exhausted"}[type(last)]
        data = {"steps": rows, "outcome": kind}
        if isinstance(last, Stuck):
            data["reason"] = last.reason
        print(json.dumps(data, sort_keys=True))
    else:
        for row in rows:
            print(f"{row['step']}: {row['term']}")
        if isinstance(last, Stuck):
            print(f"stuck ({last.reason})")
        elif isinstance(last, FuelExhausted):
            print(f"fuel exhausted after {last.steps} steps")
    if isinstance(last, Stuck):
        return EXIT_STUCK
    if isinstance(last, FuelExhausted):
        return EXIT_FUEL
    return EXIT_OK


def _load_scheme(args, path: str) -> PolyType:
    src = _read(path)
    try:
        p = parse_scheme(src, path)
    except ParseError as first:
        try:
            m = parse(src, path)
        except ParseError:
            raise first from None
        if _extended(args):
            m = with_library(m)
        env, K, S, t = _infer_closed(args, m)
        _, p = closure(K, env, t)
    if not isinstance(p, PolyType):
        p = PolyType((), p)
    if not is_event_scheme(p):
        raise Failure(f"{path}: {show_scheme(prettify({}, p)[1])} is not an event scheme")
    return p


def cmd_relate(args) -> int:
    a = _load_scheme(args, args.first)
    b = _load_scheme(args, args.second)
    v = relate(args.relation, {}, a, b)
    data = {"holds": v.holds}
    if v.witness is not None:
        data["witness"] = show_type(v.witness)
    _emit(args, str(v), data)
    return EXIT_OK if v.holds else EXIT_FAIL


def _policy(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        label, sep, base = item.partition("=")
        if not sep or base not in ("Int", "Float", "Bool", "String"):
            raise Failure(f"bad --type {item!r}; expected LABEL=Int|Float|Bool|String")
        out[label] = base
    return out


def cmd_run(args) -> int:
    policy = _policy(args.type)
    agent = parse(_read(args.agent), args.agent)
    init = parse(args.init, "<init>") if args.init is not None else None
    try:
        h = admit(agent, extended=_extended(args), init=init, fuel=args.fuel)
    except AdmissionError as e:
        raise Failure(f"agent rejected: {e}") from None
    src = open(args.input, encoding="utf-8") if args.input else sys.stdin
    code = EXIT_OK
    try:
        rep = run_ndjson(h, src, sys.stdout, policy=policy, fuel=args.fuel, skip_bad=args.skip_bad)
    except StreamAbort as e:
        rep = e.report
        print(f"evl run: {e}", file=sys.stderr)
        code = EXIT_STUCK if e.stuck else EXIT_FAIL
    finally:
        if src is not sys.stdin:
            src.close()
    sys.stdout.flush()
    print(json.dumps(rep.as_dict()), file=sys.stderr)
    return code


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=("core", "extended"), default="core",
                        help="extended adds lists, letrec and the stream library")
    common.add_argument("--fuel", type=_positive, default=_default_fuel(),
                        help="step budget (default: $EVL_FUEL or %d)" % DEFAULT_FUEL)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--no-prelude", dest="prelude", action="store_false",
                        help="no primitive operators; they become free variables")
    common.add_argument("--env", action="append", metavar="FILE",
                        help="typing assumptions, one 'name : type' per line")

    top = _Parser(prog="evl", description="EVL: typed event processing language")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", parents=[common], help="parse and pretty-print a term")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("infer", parents=[common], help="print the principal type")
    p.add_argument("file")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("check", parents=[common], help="does the term have the given type?")
    p.add_argument("file")
    p.add_argument("type")
    p.set_defaults(func=cmd_check)

    for name, fn, what in (("eval", cmd_eval, "evaluate to a value"), ("trace", cmd_trace, "show every reduction step")):
        p = sub.add_parser(name, parents=[common], help=what)
        p.add_argument("file")
        p.add_argument("--unsafe", action="store_true", help="skip the type check")
        if name == "eval":
            p.add_argument("--strategy", choices=("env", "subst"), default="env")
        p.set_defaults(func=fn)

    p = sub.add_parser("relate", parents=[common], help="membership, generalization or specialization")
    p.add_argument("relation", choices=RELATIONS)
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_relate)

    p = sub.add_parser("run", parents=[common], help="run an agent over NDJSON events")
    p.add_argument("--agent", required=True, metavar="FILE")
    p.add_argument("--init", metavar="EXPR", help="initial accumulator for a fold agent")
    p.add_argument("--input", metavar="FILE", help="read events from FILE instead of stdin")
    p.add_argument("--type", action="append", metavar="LABEL=BASE", help="override a field's number type")
    p.add_argument("--skip-bad", action="store_true", help="skip bad or stuck events instead of stopping")
    p.set_defaults(func=cmd_run)
    return top


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, Failure) as e:
        print(f"evl: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
