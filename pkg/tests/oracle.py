"""Brute-force typing oracle for small closed terms.

Independent of the package's unifier: types are plain tuples
(``("B", "Int")``, ``("A", dom, cod)``, ``("R", field)``) over the single
label ``l``, every lambda binder is tried at every ground type of a
bounded universe, and everything else is synthesised.  ``let`` and
``letEv`` are monomorphic here, which loses nothing below size 6: a
polymorphic reuse needs a bound term and two uses of it.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

from evl.syntax import (
    Abs,
    App,
    Arrow,
    Base,
    Cond,
    Const,
    Let,
    LetEv,
    Modify,
    RecordType,
    Record,
    Select,
    Term,
    Var,
)

LABEL = "l"
BASES = ("Bool", "Int")
BOOL = ("B", "Bool")


@lru_cache(maxsize=None)
def universe(depth: int) -> tuple:
    """Ground types of depth <= depth (a base has depth 1)."""
    if depth <= 1:
        return tuple(("B", b) for b in BASES)
    smaller = universe(depth - 1)
    out = list(universe(1))
    out += [("A", a, b) for a in smaller for b in smaller]
    out += [("R", a) for a in smaller]
    return tuple(out)


def is_field(t) -> bool:
    while t[0] == "A":
        t = t[2]
    return t[0] == "B"


def is_event(t) -> bool:
    while t[0] == "A":
        t = t[2]
    return t[0] == "R" and is_field(t[1])


def binders(m: Term) -> int:
    if isinstance(m, Abs):
        return 1 + binders(m.body)
    if isinstance(m, (Const, Var)):
        return 0
    return sum(binders(c) for c in _children(m))


def _children(m: Term):
    if isinstance(m, App):
        return (m.fun, m.arg)
    if isinstance(m, Abs):
        return (m.body,)
    if isinstance(m, Cond):
        return (m.guard, m.then, m.orelse)
    if isinstance(m, (Let, LetEv)):
        return (m.bound, m.body)
    if isinstance(m, Record):
        return tuple(t for _, t in m.fields)
    if isinstance(m, Select):
        return (m.subject,)
    if isinstance(m, Modify):
        return (m.subject, m.value)
    return ()


def depth_for(m: Term, budget: int = 100_000, cap: int = 3) -> int:
    """Largest universe depth <= cap keeping |U|^binders within budget."""
    k = binders(m)
    for d in range(cap, 0, -1):
        if len(universe(d)) ** k <= budget:
            return d
    return 1


def typings(m: Term, depth: int) -> frozenset:
    """All ground types m has with binder types drawn from universe(depth)."""
    return frozenset(_types(m, (), universe(depth)))


def _types(m: Term, env: tuple, univ: tuple) -> set:
    if isinstance(m, Const):
        return {("B", m.base)}
    if isinstance(m, Var):
        for name, t in reversed(env):
            if name == m.name:
                return {t}
        return set()
    if isinstance(m, Abs):
        out = set()
        for a in univ:
            for b in _types(m.body, env + ((m.param, a),), univ):
                out.add(("A", a, b))
        return out
    if isinstance(m, App):
        fs = _types(m.fun, env, univ)
        if not fs:
            return set()
        args = _types(m.arg, env, univ)
        return {f[2] for f in fs if f[0] == "A" and f[1] in args}
    if isinstance(m, Cond):
        if BOOL not in _types(m.guard, env, univ):
            return set()
        return _types(m.then, env, univ) & _types(m.orelse, env, univ)
    if isinstance(m, (Let, LetEv)):
        out = set()
        for b in _types(m.bound, env, univ):
            if isinstance(m, LetEv) and not is_event(b):
                continue
            out |= _types(m.body, env + ((m.name, b),), univ)
        return out
    if isinstance(m, Record):
        ((lab, sub),) = m.fields
        return {("R", t) for t in _types(sub, env, univ)}
    if isinstance(m, Select):
        return {t[1] for t in _types(m.subject, env, univ) if t[0] == "R"}
    if isinstance(m, Modify):
        vals = _types(m.value, env, univ)
        return {t for t in _types(m.subject, env, univ) if t[0] == "R" and t[1] in vals}
    raise TypeError(m)


# ---------------------------------------------------------------------------
# exhaustive term enumeration

CONSTS = (Const(True, "Bool"), Const(False, "Bool"), Const(0, "Int"))


def terms(size: int, scope: int = 0):
    """All terms of exactly this size whose free variables are among the
    ``scope`` enclosing binders, named x0, x1, ... by depth."""
    yield from _terms(size, scope)


@lru_cache(maxsize=None)
def _terms(size: int, scope: int) -> tuple:
    out: list[Term] = []
    if size == 1:
        out += CONSTS
        out += [Var(f"x{i}") for i in range(scope)]
        return tuple(out)
    x = f"x{scope}"
    out += [Abs(x, b) for b in _terms(size - 1, scope + 1)]
    out += [Record(((LABEL, t),)) for t in _terms(size - 1, scope)]
    out += [Select(t, LABEL) for t in _terms(size - 1, scope)]
    for a in range(1, size - 1):
        b = size - 1 - a
        for f, g in itertools.product(_terms(a, scope), _terms(b, scope)):
            out.append(App(f, g))
            out.append(Modify(f, LABEL, g))
        for f, g in itertools.product(_terms(a, scope), _terms(b, scope + 1)):
            out.append(Let(x, f, g))
            out.append(LetEv(x, f, g))
    for a in range(1, size - 2):
        for b in range(1, size - 1 - a):
            c = size - 1 - a - b
            for g, t, e in itertools.product(_terms(a, scope), _terms(b, scope), _terms(c, scope)):
                out.append(Cond(g, t, e))
    return tuple(out)


def closed_terms(max_size: int):
    for n in range(1, max_size + 1):
        yield from _terms(n, 0)


# ---------------------------------------------------------------------------
# ground instance matching (independent of the package's unifier)

def to_tuple(t) -> tuple:
    if isinstance(t, Base):
        return ("B", t.name)
    if isinstance(t, Arrow):
        return ("A", to_tuple(t.dom), to_tuple(t.cod))
    if isinstance(t, RecordType):
        ((lab, ft),) = t.fields
        return ("R", to_tuple(ft))
    raise ValueError(t)


def matches(scheme, ground: tuple) -> bool:
    """Is the ground type an instance of the (closed) scheme?"""
    kinds = dict(scheme.prefix)
    binding: dict = {}
    if not _match(scheme.body, ground, binding):
        return False
    # kind constraints on the variables that were bound
    for v, k in kinds.items():
        if v not in binding or not hasattr(k, "fields"):
            continue
        got = binding[v]
        for lab, ft in k.fields:
            if lab != LABEL or got[0] != "R" or not _match(ft, got[1], binding):
                return False
    return True


def _match(pat, g: tuple, binding: dict) -> bool:
    from evl.syntax import TyVar

    if isinstance(pat, TyVar):
        if pat.name in binding:
            return binding[pat.name] == g
        binding[pat.name] = g
        return True
    if isinstance(pat, Base):
        return g == ("B", pat.name)
    if isinstance(pat, Arrow):
        return g[0] == "A" and _match(pat.dom, g[1], binding) and _match(pat.cod, g[2], binding)
    if isinstance(pat, RecordType):
        if g[0] != "R" or len(pat.fields) != 1 or pat.fields[0][0] != LABEL:
            return False
        return _match(pat.fields[0][1], g[1], binding)
    return False
