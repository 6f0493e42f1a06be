"""Typed primitive operators and the higher-order stream library.

Each primitive has a type scheme (used by inference) and an
implementation over runtime values (used by both evaluators).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from .runtime import ConstV, ListV, Value
from .syntax import (
    BOOL,
    FLOAT,
    INT,
    STRING,
    U,
    LetRec,
    ListType,
    PolyType,
    Term,
    TyVar,
    arrows,
)


class PrimitiveError(Exception):
    """Raised by a primitive that cannot produce a value; carries the
    stuck reason."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class Primitive:
    name: str
    scheme: PolyType
    arity: int
    impl: Callable[..., Value]
    extended: bool = False


def _want(v: Value, base: str):
    if not (isinstance(v, ConstV) and v.base == base):
        raise PrimitiveError("primitive-type-error", f"expected {base}, got {v!r}")
    return v.value


def _float_div(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def _int_div(a: int, b: int) -> int:
    if b == 0:
        raise PrimitiveError("division-by-zero", f"{a} / 0")
    return a // b


def _binary(base_in: str, base_out: str, fn):
    def impl(x, y):
        return ConstV(fn(_want(x, base_in), _want(y, base_in)), base_out)

    return impl


def _want_list(v: Value) -> tuple:
    if not isinstance(v, ListV):
        raise PrimitiveError("primitive-type-error", f"expected a list, got {v!r}")
    return v.items


def _head(xs):
    items = _want_list(xs)
    if not items:
        raise PrimitiveError("empty-list", "head of []")
    return items[0]


def _tail(xs):
    items = _want_list(xs)
    if not items:
        raise PrimitiveError("empty-list", "tail of []")
    return ListV(items[1:])


_A = TyVar("a")
_mono = lambda *ts: PolyType((), arrows(*ts))  # noqa: E731
_poly = lambda *ts: PolyType((("a", U),), arrows(*ts))  # noqa: E731

_FF_F = _mono(FLOAT, FLOAT, FLOAT)
_II_I = _mono(INT, INT, INT)


def _build() -> dict[str, Primitive]:
    prims = [
        Primitive("+", _FF_F, 2, _binary("Float", "Float", lambda a, b: a + b)),
        Primitive("-", _FF_F, 2, _binary("Float", "Float", lambda a, b: a - b)),
        Primitive("*", _FF_F, 2, _binary("Float", "Float", lambda a, b: a * b)),
        Primitive("/", _FF_F, 2, _binary("Float", "Float", _float_div)),
        Primitive("addInt", _II_I, 2, _binary("Int", "Int", lambda a, b: a + b)),
        Primitive("subInt", _II_I, 2, _binary("Int", "Int", lambda a, b: a - b)),
        Primitive("mulInt", _II_I, 2, _binary("Int", "Int", lambda a, b: a * b)),
        Primitive(">", _mono(FLOAT, FLOAT, BOOL), 2, _binary("Float", "Bool", lambda a, b: a > b)),
        Primitive("<", _mono(FLOAT, FLOAT, BOOL), 2, _binary("Float", "Bool", lambda a, b: a < b)),
        Primitive("==", _mono(STRING, STRING, BOOL), 2, _binary("String", "Bool", lambda a, b: a == b)),
        Primitive("eqInt", _mono(INT, INT, BOOL), 2, _binary("Int", "Bool", lambda a, b: a == b)),
        Primitive("eqFloat", _mono(FLOAT, FLOAT, BOOL), 2, _binary("Float", "Bool", lambda a, b: a == b)),
        Primitive("eqBool", _mono(BOOL, BOOL, BOOL), 2, _binary("Bool", "Bool", lambda a, b: a == b)),
        Primitive("and", _mono(BOOL, BOOL, BOOL), 2, _binary("Bool", "Bool", lambda a, b: a and b)),
        Primitive("or", _mono(BOOL, BOOL, BOOL), 2, _binary("Bool", "Bool", lambda a, b: a or b)),
        Primitive("not", _mono(BOOL, BOOL), 1, lambda x: ConstV(not _want(x, "Bool"), "Bool")),
        Primitive("toFloat", _mono(INT, FLOAT), 1, lambda x: ConstV(float(_want(x, "Int")), "Float")),
        # partial or list primitives: extended mode only
        Primitive("divInt", _II_I, 2, _binary("Int", "Int", _int_div), extended=True),
        Primitive(
            "cons",
            _poly(_A, ListType(_A), ListType(_A)),
            2,
            lambda x, xs: ListV((x,) + _want_list(xs)),
            extended=True,
        ),
        Primitive("head", _poly(ListType(_A), _A), 1, _head, extended=True),
        Primitive("tail", _poly(ListType(_A), ListType(_A)), 1, _tail, extended=True),
        Primitive(
            "empty",
            _poly(ListType(_A), BOOL),
            1,
            lambda xs: ConstV(not _want_list(xs), "Bool"),
            extended=True,
        ),
    ]
    return {p.name: p for p in prims}


_ALL = _build()


def primitives(extended: bool = False) -> dict[str, Primitive]:
    """The primitive table for a mode (Delta_0)."""
    return {n: p for n, p in _ALL.items() if extended or not p.extended}


def prelude_env(extended: bool = False) -> dict[str, PolyType]:
    """The typing environment of the primitives (Gamma_0)."""
    return {n: p.scheme for n, p in primitives(extended).items()}


# ---------------------------------------------------------------------------
# stream library (extended mode)

LIBRARY_SOURCE = {
    "filter": (
        "letrec filter p list = if empty list then list "
        "else if p (head list) then cons (head list) (filter p (tail list)) "
        "else filter p (tail list) in filter"
    ),
    "transform": (
        "letrec transform f list = if empty list then [] "
        "else cons (f (head list)) (transform f (tail list)) in transform"
    ),
    "aggregater": (
        "letrec aggregater f z list = if empty list then z "
        "else f (head list) (aggregater f z (tail list)) in aggregater"
    ),
    "aggregatel": (
        "letrec aggregatel f z list = if empty list then z "
        "else aggregatel f (f z (head list)) (tail list) in aggregatel"
    ),
}


@lru_cache(maxsize=None)
def library_definition(name: str) -> LetRec:
    from .parser import parse

    t = parse(LIBRARY_SOURCE[name], f"<library {name}>")
    assert isinstance(t, LetRec)
    return t


def with_library(m: Term) -> Term:
    """Wrap m in letrec definitions for the library functions it uses."""
    for name in sorted(LIBRARY_SOURCE, reverse=True):
        if name in m.fv:
            d = library_definition(name)
            m = LetRec(name, d.bound, m)
    return m
