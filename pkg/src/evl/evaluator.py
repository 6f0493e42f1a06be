"""Call-by-value evaluation.

Two interpreters share the same axioms and step accounting:

* a small-step one that decomposes a term into an evaluation context and
  a redex, contracts the redex, and plugs the result back (this is the one
  used for traces), and
* an environment-based one where closures capture bindings instead of
  substituting; it is the default for ``evaluate`` and doubles as a
  cross-check for the first.

Primitive operators are free variables resolved through a table; when the
table is empty they are simply unbound.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Union

from .prelude import Primitive, PrimitiveError
from .runtime import (
    Closure,
    ConstV,
    Env,
    ListV,
    PrimV,
    RecordV,
    Value,
    is_value_term,
    lookup,
    spine,
    subst_term,
    term_to_value,
    to_term,
)
from .syntax import (
    Abs,
    App,
    Cond,
    Const,
    Let,
    LetEv,
    LetRec,
    ListLit,
    Modify,
    Record,
    Select,
    Term,
    Var,
)

DEFAULT_FUEL = 100_000

STUCK_REASONS = (
    "apply-non-function",
    "select-missing-label",
    "modify-missing-label",
    "cond-non-bool",
    "free-variable",
    "primitive-type-error",
    "division-by-zero",
    "empty-list",
    "letrec-non-function",
)

Prims = Mapping[str, Primitive]


# ---------------------------------------------------------------------------
# evaluation contexts

@dataclass(frozen=True)
class AppL:
    arg: Term


@dataclass(frozen=True)
class AppR:
    fun: Term


@dataclass(frozen=True)
class CondG:
    then: Term
    orelse: Term


@dataclass(frozen=True)
class LetB:
    name: str
    body: Term
    event: bool


@dataclass(frozen=True)
class RecF:
    label: str
    done: tuple
    rest: tuple


@dataclass(frozen=True)
class SelF:
    label: str


@dataclass(frozen=True)
class ModL:
    label: str
    value: Term


@dataclass(frozen=True)
class ModR:
    subject: Term
    label: str


@dataclass(frozen=True)
class ListF:
    done: tuple
    rest: tuple


Frame = Union[AppL, AppR, CondG, LetB, RecF, SelF, ModL, ModR, ListF]
EvalContext = tuple  # frames, outermost first; () is the hole


def plug(ctx: EvalContext, m: Term) -> Term:
    for f in reversed(ctx):
        if isinstance(f, AppL):
            m = App(m, f.arg)
        elif isinstance(f, AppR):
            m = App(f.fun, m)
        elif isinstance(f, CondG):
            m = Cond(m, f.then, f.orelse)
        elif isinstance(f, LetB):
            m = (LetEv if f.event else Let)(f.name, m, f.body)
        elif isinstance(f, RecF):
            m = Record(f.done + ((f.label, m),) + f.rest)
        elif isinstance(f, SelF):
            m = Select(m, f.label)
        elif isinstance(f, ModL):
            m = Modify(m, f.label, f.value)
        elif isinstance(f, ModR):
            m = Modify(f.subject, f.label, m)
        elif isinstance(f, ListF):
            m = ListLit(f.done + (m,) + f.rest)
        else:  # pragma: no cover
            raise TypeError(f)
    return m


# ---------------------------------------------------------------------------
# outcomes

@dataclass(frozen=True)
class Stepped:
    term: Term


@dataclass(frozen=True)
class Done:
    value: Term


@dataclass(frozen=True)
class Stuck:
    term: Term
    reason: str

    def __str__(self):
        return f"stuck ({self.reason})"


@dataclass(frozen=True)
class FuelExhausted:
    term: Term
    steps: int


StepOutcome = Union[Stepped, Done, Stuck]


@dataclass(frozen=True)
class Decomposition:
    context: EvalContext
    redex: Term


def decompose(m: Term, prims: Optional[Prims] = None) -> Union[Decomposition, Done, Stuck]:
    """Split a closed term into context and redex (leftmost-innermost)."""
    if is_value_term(m, prims):
        return Done(m)
    frames: list = []
    while True:
        val = lambda t: is_value_term(t, prims)  # noqa: E731
        if isinstance(m, App):
            if not val(m.fun):
                frames.append(AppL(m.arg))
                m = m.fun
                continue
            if not val(m.arg):
                frames.append(AppR(m.fun))
                m = m.arg
                continue
        elif isinstance(m, Cond):
            if not val(m.guard):
                frames.append(CondG(m.then, m.orelse))
                m = m.guard
                continue
        elif isinstance(m, (Let, LetEv)):
            if not val(m.bound):
                frames.append(LetB(m.name, m.body, isinstance(m, LetEv)))
                m = m.bound
                continue
        elif isinstance(m, Record):
            for i, (lab, t) in enumerate(m.fields):
                if not val(t):
                    frames.append(RecF(lab, m.fields[:i], m.fields[i + 1 :]))
                    m = t
                    break
            else:  # pragma: no cover - records of values are values
                return Done(m)
            continue
        elif isinstance(m, ListLit):
            for i, t in enumerate(m.items):
                if not val(t):
                    frames.append(ListF(m.items[:i], m.items[i + 1 :]))
                    m = t
                    break
            else:  # pragma: no cover
                return Done(m)
            continue
        elif isinstance(m, Select):
            if not val(m.subject):
                frames.append(SelF(m.label))
                m = m.subject
                continue
        elif isinstance(m, Modify):
            if not val(m.subject):
                frames.append(ModL(m.label, m.value))
                m = m.subject
                continue
            if not val(m.value):
                frames.append(ModR(m.subject, m.label))
                m = m.value
                continue
        elif isinstance(m, Var):
            return Stuck(plug(tuple(frames), m), "free-variable")
        return Decomposition(tuple(frames), m)


def _record_get(fields, label):
    for lab, t in fields:
        if lab == label:
            return t
    return None


def contract(redex: Term, prims: Optional[Prims] = None) -> Union[Term, Stuck]:
    """Fire the single axiom whose left-hand side is the redex."""
    if isinstance(redex, App):
        f, v = redex.fun, redex.arg
        if isinstance(f, Abs):
            return subst_term(v, f.param, f.body)
        head, args = spine(f)
        if prims and isinstance(head, Var) and head.name in prims:
            p = prims[head.name]
            try:
                vals = [term_to_value(a, prims) for a in args + [v]]
                return to_term(p.impl(*vals))
            except PrimitiveError as e:
                return Stuck(redex, e.reason)
        return Stuck(redex, "apply-non-function")
    if isinstance(redex, Cond):
        g = redex.guard
        if isinstance(g, Const) and g.base == "Bool":
            return redex.then if g.value else redex.orelse
        return Stuck(redex, "cond-non-bool")
    if isinstance(redex, (Let, LetEv)):
        return subst_term(redex.bound, redex.name, redex.body)
    if isinstance(redex, LetRec):
        b = redex.bound
        if not isinstance(b, Abs):
            return Stuck(redex, "letrec-non-function")
        unrolled = subst_term(LetRec(redex.name, b, Var(redex.name)), redex.name, b)
        return subst_term(unrolled, redex.name, redex.body)
    if isinstance(redex, Select):
        s = redex.subject
        if isinstance(s, Record):
            got = _record_get(s.fields, redex.label)
            if got is not None:
                return got
        return Stuck(redex, "select-missing-label")
    if isinstance(redex, Modify):
        s = redex.subject
        if isinstance(s, Record) and _record_get(s.fields, redex.label) is not None:
            return Record(tuple((lab, redex.value if lab == redex.label else t) for lab, t in s.fields))
        return Stuck(redex, "modify-missing-label")
    raise TypeError(f"not a redex: {redex!r}")  # pragma: no cover


def step(m: Term, prims: Optional[Prims] = None) -> StepOutcome:
    d = decompose(m, prims)
    if not isinstance(d, Decomposition):
        return d
    r = contract(d.redex, prims)
    if isinstance(r, Stuck):
        return Stuck(plug(d.context, r.term), r.reason)
    return Stepped(plug(d.context, r))


def trace(m: Term, fuel: int = DEFAULT_FUEL, prims: Optional[Prims] = None) -> Iterator[StepOutcome]:
    """Yield every Stepped term, then a final Done / Stuck / FuelExhausted."""
    n = 0
    while True:
        out = step(m, prims)
        if not isinstance(out, Stepped):
            yield out
            return
        if n >= fuel:
            yield FuelExhausted(m, n)
            return
        n += 1
        m = out.term
        yield out


def eval_small(m: Term, fuel: int = DEFAULT_FUEL, prims: Optional[Prims] = None) -> tuple[Union[Done, Stuck, FuelExhausted], int]:
    """Iterate ``step``; returns the outcome and the number of steps taken."""
    n = 0
    while True:
        out = step(m, prims)
        if isinstance(out, Done):
            return out, n
        if isinstance(out, Stuck):
            return out, n
        if n >= fuel:
            return FuelExhausted(m, n), n
        n += 1
        m = out.term


# ---------------------------------------------------------------------------
# environment machine

class _Halt(Exception):
    def __init__(self, outcome):
        self.outcome = outcome


class _Machine:
    def __init__(self, fuel: int, prims: Optional[Prims]):
        self.fuel = fuel
        self.steps = 0
        self.prims = prims or {}

    def tick(self, at: Term):
        if self.steps >= self.fuel:
            raise _Halt(FuelExhausted(at, self.steps))
        self.steps += 1

    def stuck(self, redex: Term, reason: str):
        raise _Halt(Stuck(redex, reason))

    def eval(self, m: Term, env: Optional[Env]) -> Value:
        if isinstance(m, Const):
            return ConstV(m.value, m.base)
        if isinstance(m, Var):
            node = lookup(env, m.name)
            if node is not None:
                return node.value
            if m.name in self.prims:
                return PrimV(m.name)
            self.stuck(m, "free-variable")
        if isinstance(m, Abs):
            return Closure(m.param, m.body, env)
        if isinstance(m, App):
            f = self.eval(m.fun, env)
            a = self.eval(m.arg, env)
            return self.apply(f, a)
        if isinstance(m, Cond):
            g = self.eval(m.guard, env)
            if not (isinstance(g, ConstV) and g.base == "Bool"):
                self.stuck(Cond(to_term(g), m.then, m.orelse), "cond-non-bool")
            self.tick(m)
            return self.eval(m.then if g.value else m.orelse, env)
        if isinstance(m, (Let, LetEv)):
            v = self.eval(m.bound, env)
            self.tick(m)
            return self.eval(m.body, Env(m.name, v, env))
        if isinstance(m, LetRec):
            if not isinstance(m.bound, Abs):
                self.stuck(m, "letrec-non-function")
            self.tick(m)
            node = Env(m.name, None, env, rec=True)
            node.value = Closure(m.bound.param, m.bound.body, node)
            return self.eval(m.body, node)
        if isinstance(m, Record):
            return RecordV(tuple((lab, self.eval(t, env)) for lab, t in m.fields))
        if isinstance(m, ListLit):
            return ListV(tuple(self.eval(t, env) for t in m.items))
        if isinstance(m, Select):
            s = self.eval(m.subject, env)
            got = s.get(m.label) if isinstance(s, RecordV) else None
            if got is None:
                self.stuck(Select(to_term(s), m.label), "select-missing-label")
            self.tick(m)
            return got
        if isinstance(m, Modify):
            s = self.eval(m.subject, env)
            v = self.eval(m.value, env)
            if not (isinstance(s, RecordV) and s.get(m.label) is not None):
                self.stuck(Modify(to_term(s), m.label, to_term(v)), "modify-missing-label")
            self.tick(m)
            return RecordV(tuple((lab, v if lab == m.label else x) for lab, x in s.fields))
        raise TypeError(m)  # pragma: no cover

    def apply(self, f: Value, a: Value) -> Value:
        if isinstance(f, Closure):
            self.tick(f.body)
            return self.eval(f.body, Env(f.param, a, f.env))
        if isinstance(f, PrimV):
            p = self.prims[f.name]
            args = f.args + (a,)
            if len(args) < p.arity:
                return PrimV(f.name, args)
            self.tick(Var(f.name))
            try:
                return p.impl(*args)
            except PrimitiveError as e:
                redex = to_term(PrimV(f.name, args[:-1]))
                self.stuck(App(redex, to_term(a)), e.reason)
        self.stuck(App(to_term(f), to_term(a)), "apply-non-function")


@dataclass(frozen=True)
class Result:
    """Outcome of a full evaluation.  ``value`` is set only on success."""
    outcome: Union[Done, Stuck, FuelExhausted]
    steps: int
    value: Optional[Value] = None

    @property
    def ok(self) -> bool:
        return isinstance(self.outcome, Done)


def evaluate(
    m: Term,
    fuel: int = DEFAULT_FUEL,
    prims: Optional[Prims] = None,
    strategy: str = "env",
) -> Result:
    """Evaluate a closed term.

    ``strategy`` is "env" (closures with captured bindings) or "subst"
    (literal small-step substitution).
    """
    if strategy == "subst":
        out, n = eval_small(m, fuel, prims)
        value = term_to_value(out.value, prims) if isinstance(out, Done) else None
        return Result(out, n, value)
    if strategy != "env":
        raise ValueError(f"unknown strategy {strategy!r}")
    mach = _Machine(fuel, prims)
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20_000))
    try:
        v = mach.eval(m, None)
    except _Halt as h:
        return Result(h.outcome, mach.steps)
    except RecursionError:
        return Result(FuelExhausted(m, mach.steps), mach.steps)
    finally:
        sys.setrecursionlimit(old)
    return Result(Done(to_term(v)), mach.steps, v)


def apply_primitive(name: str, args: list[Value], prims: Prims) -> Union[Value, Stuck]:
    """Run a primitive directly; Stuck on a type mismatch or partiality."""
    p = prims[name]
    try:
        return p.impl(*args)
    except PrimitiveError as e:
        return Stuck(to_term(PrimV(name, tuple(args))), e.reason)
