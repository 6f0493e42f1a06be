"""Terms, types, kinds, substitutions and the kinding judgment.

Every other module speaks this vocabulary.  All node classes are frozen
dataclasses; record field maps are stored as label-sorted tuples so that
structural equality ignores source order (terms keep their source order,
types do not).
"""
from __future__ import annotations

import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Union

BASE_TYPES: tuple[str, ...] = ("Bool", "Int", "Float", "String")


def _fields(items, what: str, *, allow_empty: bool = False) -> tuple:
    pairs = list(items.items()) if isinstance(items, Mapping) else list(items)
    labels = [lab for lab, _ in pairs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate label in {what}: {labels}")
    if not pairs and not allow_empty:
        raise ValueError(f"{what} needs at least one field")
    return tuple(sorted(pairs, key=lambda p: p[0]))


# ---------------------------------------------------------------------------
# monotypes

class MonoType:
    """Base class of monotypes."""

    @cached_property
    def ftv(self) -> frozenset[str]:
        return frozenset(self._ftv())

    def _ftv(self):  # pragma: no cover - overridden
        raise NotImplementedError

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True, eq=True)
class TyVar(MonoType):
    name: str

    def _ftv(self):
        return (self.name,)


@dataclass(frozen=True, eq=True)
class Base(MonoType):
    name: str

    def _ftv(self):
        return ()


@dataclass(frozen=True, eq=True)
class Arrow(MonoType):
    dom: MonoType
    cod: MonoType

    def _ftv(self):
        return self.dom.ftv | self.cod.ftv


@dataclass(frozen=True, eq=True)
class RecordType(MonoType):
    fields: tuple

    def __post_init__(self):
        object.__setattr__(self, "fields", _fields(self.fields, "record type"))

    @property
    def map(self) -> dict[str, MonoType]:
        return dict(self.fields)

    def _ftv(self):
        out: set[str] = set()
        for _, t in self.fields:
            out |= t.ftv
        return out


@dataclass(frozen=True, eq=True)
class ListType(MonoType):
    """Builtin homogeneous list; only produced in extended mode."""
    elem: MonoType

    def _ftv(self):
        return self.elem.ftv


BOOL = Base("Bool")
INT = Base("Int")
FLOAT = Base("Float")
STRING = Base("String")


def arrows(*ts: MonoType) -> MonoType:
    """arrows(a, b, c) is a -> b -> c."""
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Arrow(t, out)
    return out


def record(**fields: MonoType) -> RecordType:
    return RecordType(fields)


# ---------------------------------------------------------------------------
# kinds

class Kind:
    def __str__(self) -> str:
        return show_kind(self)


@dataclass(frozen=True, eq=True)
class Universal(Kind):
    @property
    def ftv(self) -> frozenset[str]:
        return frozenset()


U = Universal()


@dataclass(frozen=True, eq=True)
class RecordKind(Kind):
    fields: tuple

    def __post_init__(self):
        object.__setattr__(self, "fields", _fields(self.fields, "record kind", allow_empty=True))

    @property
    def map(self) -> dict[str, MonoType]:
        return dict(self.fields)

    @cached_property
    def ftv(self) -> frozenset[str]:
        out: set[str] = set()
        for _, t in self.fields:
            out |= t.ftv
        return frozenset(out)


# ---------------------------------------------------------------------------
# type schemes

@dataclass(frozen=True, eq=False)
class PolyType:
    """forall a1::k1 ... an::kn. body.

    Equality is alpha-equivalence; an empty prefix equals the bare body.
    """
    prefix: tuple
    body: MonoType

    def __post_init__(self):
        prefix = tuple((v, k) for v, k in self.prefix)
        names = [v for v, _ in prefix]
        if len(set(names)) != len(names):
            raise ValueError(f"repeated quantified variable in {names}")
        object.__setattr__(self, "prefix", prefix)

    @property
    def bound(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.prefix)

    @cached_property
    def ftv(self) -> frozenset[str]:
        out = set(self.body.ftv)
        for _, k in self.prefix:
            out |= k.ftv
        return frozenset(out - set(self.bound))

    @cached_property
    def _canonical(self):
        ren = {v: TyVar(f"#{i}") for i, (v, _) in enumerate(self.prefix)}
        return (
            tuple(apply_kind(ren, k) for _, k in self.prefix),
            apply_mono(ren, self.body),
        )

    def __eq__(self, other):
        if isinstance(other, PolyType):
            return self._canonical == other._canonical
        if isinstance(other, MonoType):
            return not self.prefix and self.body == other
        return NotImplemented

    def __hash__(self):
        if not self.prefix:
            return hash(self.body)
        return hash(self._canonical)

    def __str__(self) -> str:
        return show_scheme(self)


Type = Union[MonoType, PolyType]


def as_poly(t: Type) -> PolyType:
    return t if isinstance(t, PolyType) else PolyType((), t)


def scheme_equiv(a: Type, b: Type) -> bool:
    """Alpha-equivalence that also ignores the order of the prefix."""
    return _occurrence_canonical(as_poly(a)) == _occurrence_canonical(as_poly(b))


def _occurrence_canonical(p: PolyType):
    kinds = dict(p.prefix)
    order: list[str] = []

    def visit(t):
        if isinstance(t, TyVar):
            if t.name in kinds and t.name not in order:
                order.append(t.name)
                k = kinds[t.name]
                if isinstance(k, RecordKind):
                    for _, ft in k.fields:
                        visit(ft)
        elif isinstance(t, Arrow):
            visit(t.dom)
            visit(t.cod)
        elif isinstance(t, RecordType):
            for _, ft in t.fields:
                visit(ft)
        elif isinstance(t, ListType):
            visit(t.elem)

    visit(p.body)
    order += [v for v in p.bound if v not in order]
    ren = {v: TyVar(f"#{i}") for i, v in enumerate(order)}
    return (
        tuple((ren[v].name, apply_kind(ren, kinds[v])) for v in order),
        apply_mono(ren, p.body),
    )


# ---------------------------------------------------------------------------
# terms

class Term:
    @cached_property
    def fv(self) -> frozenset[str]:
        return frozenset(self._fv())

    def _fv(self):  # pragma: no cover - overridden
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Term):
    value: Any
    base: str

    def __post_init__(self):
        expected = {"Bool": bool, "Int": int, "Float": float, "String": str}.get(self.base)
        if expected is not None:
            ok = isinstance(self.value, expected)
            if expected is int and isinstance(self.value, bool):
                ok = False
            if not ok:
                raise ValueError(f"constant {self.value!r} does not fit base type {self.base}")

    def _fv(self):
        return ()


@dataclass(frozen=True)
class Var(Term):
    name: str

    def _fv(self):
        return (self.name,)


@dataclass(frozen=True)
class App(Term):
    fun: Term
    arg: Term

    def _fv(self):
        return self.fun.fv | self.arg.fv


@dataclass(frozen=True)
class Abs(Term):
    param: str
    body: Term

    def _fv(self):
        return self.body.fv - {self.param}


@dataclass(frozen=True)
class Cond(Term):
    guard: Term
    then: Term
    orelse: Term

    def _fv(self):
        return self.guard.fv | self.then.fv | self.orelse.fv


@dataclass(frozen=True)
class Let(Term):
    name: str
    bound: Term
    body: Term

    def _fv(self):
        return self.bound.fv | (self.body.fv - {self.name})


@dataclass(frozen=True)
class LetEv(Term):
    name: str
    bound: Term
    body: Term

    def _fv(self):
        return self.bound.fv | (self.body.fv - {self.name})


@dataclass(frozen=True)
class LetRec(Term):
    """letrec f = M in N, extended mode only.  f scopes over both M and N."""
    name: str
    bound: Term
    body: Term

    def _fv(self):
        return (self.bound.fv | self.body.fv) - {self.name}


@dataclass(frozen=True)
class Record(Term):
    fields: tuple  # ordered (label, Term) pairs, source order kept

    def __post_init__(self):
        pairs = tuple((lab, t) for lab, t in self.fields)
        labels = [lab for lab, _ in pairs]
        if not pairs:
            raise ValueError("a record needs at least one field")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate record label in {labels}")
        object.__setattr__(self, "fields", pairs)

    def _fv(self):
        out: set[str] = set()
        for _, t in self.fields:
            out |= t.fv
        return out


@dataclass(frozen=True)
class Select(Term):
    subject: Term
    label: str

    def _fv(self):
        return self.subject.fv


@dataclass(frozen=True)
class Modify(Term):
    subject: Term
    label: str
    value: Term

    def _fv(self):
        return self.subject.fv | self.value.fv


@dataclass(frozen=True)
class ListLit(Term):
    """[M1, ..., Mn], extended mode only."""
    items: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def _fv(self):
        out: set[str] = set()
        for t in self.items:
            out |= t.fv
        return out


def term_size(t: Term) -> int:
    if isinstance(t, (Const, Var)):
        return 1
    if isinstance(t, App):
        return 1 + term_size(t.fun) + term_size(t.arg)
    if isinstance(t, Abs):
        return 1 + term_size(t.body)
    if isinstance(t, Cond):
        return 1 + term_size(t.guard) + term_size(t.then) + term_size(t.orelse)
    if isinstance(t, (Let, LetEv, LetRec)):
        return 1 + term_size(t.bound) + term_size(t.body)
    if isinstance(t, Record):
        return 1 + sum(term_size(m) for _, m in t.fields)
    if isinstance(t, Select):
        return 1 + term_size(t.subject)
    if isinstance(t, Modify):
        return 1 + term_size(t.subject) + term_size(t.value)
    if isinstance(t, ListLit):
        return 1 + sum(term_size(m) for m in t.items)
    raise TypeError(t)


def uses_extensions(t: Term) -> bool:
    """True when the term contains letrec or list literals."""
    if isinstance(t, (LetRec, ListLit)):
        return True
    if isinstance(t, (Const, Var)):
        return False
    if isinstance(t, App):
        return uses_extensions(t.fun) or uses_extensions(t.arg)
    if isinstance(t, Abs):
        return uses_extensions(t.body)
    if isinstance(t, Cond):
        return any(uses_extensions(x) for x in (t.guard, t.then, t.orelse))
    if isinstance(t, (Let, LetEv)):
        return uses_extensions(t.bound) or uses_extensions(t.body)
    if isinstance(t, Record):
        return any(uses_extensions(m) for _, m in t.fields)
    if isinstance(t, Select):
        return uses_extensions(t.subject)
    if isinstance(t, Modify):
        return uses_extensions(t.subject) or uses_extensions(t.value)
    raise TypeError(t)


# ---------------------------------------------------------------------------
# substitutions

class Subst(Mapping):
    """Immutable map from type-variable names to monotypes.

    Identity bindings are dropped on construction.
    """

    __slots__ = ("_m",)

    def __init__(self, mapping: Mapping[str, MonoType] | Iterable = ()):
        m = dict(mapping)
        self._m = {k: v for k, v in m.items() if not (isinstance(v, TyVar) and v.name == k)}

    def __getitem__(self, k):
        return self._m[k]

    def __iter__(self):
        return iter(self._m)

    def __len__(self):
        return len(self._m)

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return self._m == dict(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._m.items()))

    def __repr__(self):
        return "Subst({" + ", ".join(f"{k!r}: {v}" for k, v in self._m.items()) + "})"

    def __str__(self):
        return "[" + ", ".join(f"{v}/{k}" for k, v in self._m.items()) + "]"


IDENTITY = Subst()


def apply_mono(s: Mapping[str, MonoType], t: MonoType) -> MonoType:
    if not s or not (t.ftv & s.keys()):
        return t
    if isinstance(t, TyVar):
        return s.get(t.name, t)
    if isinstance(t, Arrow):
        return Arrow(apply_mono(s, t.dom), apply_mono(s, t.cod))
    if isinstance(t, RecordType):
        return RecordType(tuple((lab, apply_mono(s, ft)) for lab, ft in t.fields))
    if isinstance(t, ListType):
        return ListType(apply_mono(s, t.elem))
    return t


def apply_kind(s: Mapping[str, MonoType], k: Kind) -> Kind:
    if isinstance(k, RecordKind) and s and (k.ftv & s.keys()):
        return RecordKind(tuple((lab, apply_mono(s, ft)) for lab, ft in k.fields))
    return k


def _prime(name: str, avoid: set[str]) -> str:
    cand = name + "'"
    while cand in avoid:
        cand += "'"
    return cand


def apply_poly(s: Mapping[str, MonoType], p: PolyType) -> PolyType:
    """Capture-avoiding application: bound variables are renamed away from
    everything the substitution could introduce."""
    bound = set(p.bound)
    inner = {k: v for k, v in s.items() if k not in bound and k in p.ftv}
    if not inner:
        return p
    introduced: set[str] = set()
    for v in inner.values():
        introduced |= v.ftv
    avoid = introduced | bound | set(p.ftv) | set(inner)
    ren: dict[str, MonoType] = {}
    new_names = []
    for v in p.bound:
        if v in introduced:
            nv = _prime(v, avoid)
            avoid.add(nv)
            ren[v] = TyVar(nv)
            new_names.append(nv)
        else:
            new_names.append(v)
    full = dict(inner)
    full.update(ren)
    prefix = tuple((nv, apply_kind(full, k)) for nv, (_, k) in zip(new_names, p.prefix))
    return PolyType(prefix, apply_mono(full, p.body))


def apply_subst(s: Mapping[str, MonoType], t):
    """Apply a substitution to a monotype, scheme, kind, environment or
    substitution (the last meaning pointwise application to its range)."""
    if isinstance(t, MonoType):
        return apply_mono(s, t)
    if isinstance(t, PolyType):
        return apply_poly(s, t)
    if isinstance(t, Kind):
        return apply_kind(s, t)
    if isinstance(t, Subst):
        return Subst({k: apply_mono(s, v) for k, v in t.items()})
    if isinstance(t, Mapping):
        return {k: apply_subst(s, v) for k, v in t.items()}
    raise TypeError(f"cannot substitute into {t!r}")


def compose(s2: Mapping[str, MonoType], s1: Mapping[str, MonoType]) -> Subst:
    """compose(s2, s1) applies s1 first, then s2."""
    out = {k: apply_mono(s2, v) for k, v in s1.items()}
    for k, v in s2.items():
        if k not in out:
            out[k] = v
    return Subst(out)


# ---------------------------------------------------------------------------
# free variables, kinding

KindingEnv = dict  # str -> Kind
TypingEnv = dict  # str -> MonoType | PolyType


def ftv(t) -> frozenset[str]:
    if isinstance(t, (MonoType, PolyType, Kind)):
        return t.ftv
    if isinstance(t, Mapping):
        out: set[str] = set()
        for v in t.values():
            out |= ftv(v)
        return frozenset(out)
    raise TypeError(f"no free variables for {t!r}")


def eftv(K: Mapping[str, Kind], t) -> frozenset[str]:
    """Smallest superset of ftv(t) closed under the kinds in K."""
    todo = list(ftv(t))
    seen: set[str] = set()
    while todo:
        v = todo.pop()
        if v in seen:
            continue
        seen.add(v)
        k = K.get(v)
        if k is not None:
            todo.extend(k.ftv - seen)
    return frozenset(seen)


def well_formed(K: Mapping[str, Kind], t) -> bool:
    return ftv(t) <= K.keys()


def well_formed_kenv(K: Mapping[str, Kind]) -> bool:
    return all(k.ftv <= K.keys() for k in K.values())


def well_formed_subst(K1: Mapping[str, Kind], s: Mapping[str, MonoType]) -> bool:
    return all(v.ftv <= K1.keys() for v in s.values())


def has_kind(K: Mapping[str, Kind], t: MonoType, k: Kind) -> bool:
    """The kinding judgment K |- t :: k."""
    if not (well_formed(K, t) and well_formed(K, k)):
        return False
    if isinstance(k, Universal):
        return True
    want = k.map
    if isinstance(t, TyVar):
        have = K.get(t.name)
        if not isinstance(have, RecordKind):
            return False
        got = have.map
    elif isinstance(t, RecordType):
        got = t.map
    else:
        return False
    return all(lab in got and got[lab] == ft for lab, ft in want.items())


def subst_respects(K1: Mapping[str, Kind], s: Mapping[str, MonoType], K: Mapping[str, Kind]) -> bool:
    """(K1, s) respects K."""
    return all(
        has_kind(K1, apply_mono(s, TyVar(v)), apply_kind(s, k)) for v, k in K.items()
    )


# ---------------------------------------------------------------------------
# printing

def show_type(t: MonoType) -> str:
    if isinstance(t, TyVar):
        return t.name
    if isinstance(t, Base):
        return t.name
    if isinstance(t, Arrow):
        left = show_type(t.dom)
        if isinstance(t.dom, Arrow):
            left = f"({left})"
        return f"{left} -> {show_type(t.cod)}"
    if isinstance(t, RecordType):
        return "{" + ", ".join(f"{lab}: {show_type(ft)}" for lab, ft in t.fields) + "}"
    if isinstance(t, ListType):
        return f"[{show_type(t.elem)}]"
    raise TypeError(t)


def show_kind(k: Kind) -> str:
    if isinstance(k, Universal):
        return "U"
    return "{{" + ", ".join(f"{lab}: {show_type(ft)}" for lab, ft in k.fields) + "}}"


def show_scheme(p: Type) -> str:
    p = as_poly(p)
    head = "".join(f"forall {v}::{show_kind(k)}. " for v, k in p.prefix)
    return head + show_type(p.body)


def show_kenv(K: Mapping[str, Kind]) -> str:
    return "{" + ", ".join(f"{v}::{show_kind(k)}" for v, k in K.items()) + "}"


_NUM = re.compile(r"(\d+)")


def name_key(name: str):
    """Sort key that orders a2 before a10."""
    return tuple(int(p) if p.isdigit() else p for p in _NUM.split(name))


def friendly_names(names: Iterable[str]) -> dict[str, MonoType]:
    """Rename variables to a, b, ..., z, a1, b1, ... in the given order."""
    out = {}
    for i, n in enumerate(names):
        letter = chr(ord("a") + i % 26)
        out[n] = TyVar(letter if i < 26 else f"{letter}{i // 26}")
    return out


def prettify(K: Mapping[str, Kind], p: Type) -> tuple[dict, PolyType]:
    """Rename the residual kinding env and scheme to readable letters."""
    p = as_poly(p)
    order: list[str] = list(p.bound)
    for v in sorted(set(K) | set(p.ftv), key=name_key):
        if v not in order:
            order.append(v)
    ren = friendly_names(order)
    newK = {ren[v].name: apply_kind(ren, k) for v, k in K.items()}
    prefix = tuple((ren[v].name, apply_kind(ren, k)) for v, k in p.prefix)
    return newK, PolyType(prefix, apply_mono(ren, p.body))
