"""Runtime values, environments, and capture-avoiding term substitution."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Mapping, Optional

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


# ---------------------------------------------------------------------------
# substitution on terms

_fresh = itertools.count()


def _rename(name: str, avoid: frozenset[str] | set[str]) -> str:
    while True:
        cand = f"{name}_{next(_fresh)}"
        if cand not in avoid:
            return cand


def subst_term(v: Term, x: str, m: Term) -> Term:
    """[v/x]m, renaming binders that would capture free variables of v."""
    return subst_many({x: v}, m)


def subst_many(s: Mapping[str, Term], m: Term) -> Term:
    """Simultaneous capture-avoiding substitution."""
    s = {k: v for k, v in s.items() if k in m.fv}
    if not s:
        return m
    if isinstance(m, Var):
        return s.get(m.name, m)
    if isinstance(m, Const):
        return m
    if isinstance(m, App):
        return App(subst_many(s, m.fun), subst_many(s, m.arg))
    if isinstance(m, Abs):
        p, body = _binder(s, m.param, m.body)
        return Abs(p, body)
    if isinstance(m, Cond):
        return Cond(subst_many(s, m.guard), subst_many(s, m.then), subst_many(s, m.orelse))
    if isinstance(m, (Let, LetEv)):
        bound = subst_many(s, m.bound)
        name, body = _binder(s, m.name, m.body)
        return type(m)(name, bound, body)
    if isinstance(m, LetRec):
        inner = {k: v for k, v in s.items() if k != m.name}
        danger = _danger(inner)
        name = m.name
        bound, body = m.bound, m.body
        if name in danger:
            new = _rename(name, danger | bound.fv | body.fv)
            bound = subst_many({name: Var(new)}, bound)
            body = subst_many({name: Var(new)}, body)
            name = new
        return LetRec(name, subst_many(inner, bound), subst_many(inner, body))
    if isinstance(m, Record):
        return Record(tuple((lab, subst_many(s, t)) for lab, t in m.fields))
    if isinstance(m, Select):
        return Select(subst_many(s, m.subject), m.label)
    if isinstance(m, Modify):
        return Modify(subst_many(s, m.subject), m.label, subst_many(s, m.value))
    if isinstance(m, ListLit):
        return ListLit(tuple(subst_many(s, t) for t in m.items))
    raise TypeError(m)


def _danger(s: Mapping[str, Term]) -> set[str]:
    out: set[str] = set()
    for v in s.values():
        out |= v.fv
    return out


def _binder(s: Mapping[str, Term], name: str, body: Term) -> tuple[str, Term]:
    inner = {k: v for k, v in s.items() if k != name}
    if not inner:
        return name, body
    danger = _danger(inner)
    if name in danger and inner.keys() & body.fv:
        new = _rename(name, danger | body.fv | set(inner))
        body = subst_many({name: Var(new)}, body)
        name = new
    return name, subst_many(inner, body)


# ---------------------------------------------------------------------------
# values

class Value:
    pass


@dataclass(frozen=True)
class ConstV(Value):
    value: Any
    base: str


@dataclass(frozen=True, eq=False)
class Closure(Value):
    param: str
    body: Term
    env: Optional["Env"]


@dataclass(frozen=True)
class RecordV(Value):
    fields: tuple  # ordered (label, Value)

    def get(self, label: str):
        for lab, v in self.fields:
            if lab == label:
                return v
        return None


@dataclass(frozen=True)
class ListV(Value):
    items: tuple


@dataclass(frozen=True)
class PrimV(Value):
    """A primitive applied to fewer arguments than its arity."""
    name: str
    args: tuple = ()


class Env:
    """Linked environment frame.  ``rec`` marks a letrec binding whose
    closure captures this very frame."""

    __slots__ = ("name", "value", "parent", "rec")

    def __init__(self, name: str, value, parent: Optional["Env"], rec: bool = False):
        self.name, self.value, self.parent, self.rec = name, value, parent, rec

    def find(self, name: str) -> Optional["Env"]:
        node: Optional[Env] = self
        while node is not None:
            if node.name == name:
                return node
            node = node.parent
        return None


def lookup(env: Optional[Env], name: str) -> Optional[Env]:
    return env.find(name) if env is not None else None


# ---------------------------------------------------------------------------
# conversions

def to_term(v: Value) -> Term:
    """Read a runtime value back as a closed value term."""
    if isinstance(v, ConstV):
        return Const(v.value, v.base)
    if isinstance(v, RecordV):
        return Record(tuple((lab, to_term(x)) for lab, x in v.fields))
    if isinstance(v, ListV):
        return ListLit(tuple(to_term(x) for x in v.items))
    if isinstance(v, PrimV):
        out: Term = Var(v.name)
        for a in v.args:
            out = App(out, to_term(a))
        return out
    if isinstance(v, Closure):
        return _closure_term(v, frozenset())
    raise TypeError(v)


def _closure_term(c: Closure, keep: frozenset[str]) -> Abs:
    binds: dict[str, Term] = {}
    for x in c.body.fv - {c.param} - keep:
        node = lookup(c.env, x)
        if node is None:
            continue
        if node.rec and isinstance(node.value, Closure):
            lam = _closure_term(node.value, keep | {x})
            binds[x] = LetRec(x, lam, Var(x))
        else:
            binds[x] = to_term(node.value)
    return Abs(c.param, subst_many(binds, c.body))


def is_value_term(m: Term, prims: Mapping[str, Any] | None = None) -> bool:
    """Value grammar: constants, abstractions, records and lists of values,
    and primitives applied to fewer arguments than their arity."""
    if isinstance(m, (Const, Abs)):
        return True
    if isinstance(m, Record):
        return all(is_value_term(t, prims) for _, t in m.fields)
    if isinstance(m, ListLit):
        return all(is_value_term(t, prims) for t in m.items)
    if prims:
        head, args = spine(m)
        if isinstance(head, Var) and head.name in prims:
            return len(args) < prims[head.name].arity and all(is_value_term(a, prims) for a in args)
    return False


def spine(m: Term) -> tuple[Term, list[Term]]:
    args = []
    while isinstance(m, App):
        args.append(m.arg)
        m = m.fun
    args.reverse()
    return m, args


def term_to_value(m: Term, prims: Mapping[str, Any] | None = None) -> Value:
    """Inverse of to_term on closed value terms."""
    if isinstance(m, Const):
        return ConstV(m.value, m.base)
    if isinstance(m, Abs):
        return Closure(m.param, m.body, None)
    if isinstance(m, Record):
        return RecordV(tuple((lab, term_to_value(t, prims)) for lab, t in m.fields))
    if isinstance(m, ListLit):
        return ListV(tuple(term_to_value(t, prims) for t in m.items))
    head, args = spine(m)
    if isinstance(head, Var) and prims and head.name in prims:
        return PrimV(head.name, tuple(term_to_value(a, prims) for a in args))
    raise ValueError(f"not a value: {m!r}")
