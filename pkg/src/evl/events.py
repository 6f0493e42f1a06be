"""Generic and specific events and the relations between them.

A generic event is known by its type scheme.  The three relations are all
decided with the generic-instance check:

* ``generalization(K, a, b)``: K |- a >= b
* ``specialization(K, a, b)``: K |- b >= a
* ``membership(K, a, b)``: every instance of a is an instance of b.

For membership it suffices to test a itself (opened with rigid variables)
against b: a's skolemised body is an instance of a that every other
instance of a is in turn an instance of, so if b covers it, b covers them
all; and if b does not cover it, that body is a counterexample.  The test
suite also checks this against the quantified definition by sampling.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from .infer import (
    TypeInferenceError,
    closure,
    dependency_order,
    generic_instance,
    infer,
    is_event_record,
    is_event_type,
    is_field_type,
)
from .prelude import prelude_env
from .runtime import ConstV, ListV, RecordV, Value
from .syntax import (
    BOOL,
    FLOAT,
    INT,
    STRING,
    Arrow,
    Base,
    Kind,
    ListType,
    MonoType,
    PolyType,
    RecordKind,
    RecordType,
    Term,
    TyVar,
    Type,
    apply_kind,
    apply_mono,
    as_poly,
    show_scheme,
    show_type,
)

# Order in which bases are tried when looking for a counterexample.
# Numeric types first so that a witness against an Int constraint is Float.
WITNESS_BASES: tuple[Base, ...] = (FLOAT, INT, STRING, BOOL)
EXTRA_LABEL = "extra"


def generalization(K: Mapping[str, Kind], ge1: Type, ge2: Type) -> bool:
    return generic_instance(K, ge1, ge2)


def specialization(K: Mapping[str, Kind], ge1: Type, ge2: Type) -> bool:
    return generic_instance(K, ge2, ge1)


def membership(K: Mapping[str, Kind], ge1: Type, ge2: Type) -> bool:
    """ge1 is a member of ge2: the instances of ge1 are among those of ge2."""
    return generic_instance(K, ge2, ge1)


def ground_instances(p: Type, bases=WITNESS_BASES, limit: int = 4096) -> Iterator[MonoType]:
    """Enumerate instances of p whose quantified variables are replaced by
    base types, or by the smallest records their kinds allow (optionally
    with one extra field).  Free variables of p are left alone."""
    p = as_poly(p)
    kinds = dict(p.prefix)
    order = dependency_order(kinds, p.bound)
    univ = [v for v in order if not isinstance(kinds[v], RecordKind)]
    recs = [v for v in order if isinstance(kinds[v], RecordKind)]
    count = 0
    for choice in itertools.product(bases, repeat=len(univ)):
        for widen in itertools.product((False, True), repeat=len(recs)):
            s: dict[str, MonoType] = dict(zip(univ, choice))
            for v, wide in zip(recs, widen):
                k = apply_kind(s, kinds[v])
                fields = dict(k.fields)
                if wide or not fields:
                    if EXTRA_LABEL in fields:
                        continue
                    fields[EXTRA_LABEL] = bases[0]
                s[v] = RecordType(fields)
            yield apply_mono(s, p.body)
            count += 1
            if count >= limit:
                return


def membership_witness(K: Mapping[str, Kind], ge1: Type, ge2: Type) -> Optional[MonoType]:
    """An instance of ge1 that is not an instance of ge2, if the bounded
    search finds one."""
    for t in ground_instances(ge1):
        if generic_instance(K, ge1, t) and not generic_instance(K, ge2, t):
            return t
    return None


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: Optional[MonoType] = None

    def __bool__(self):
        return self.holds

    def __str__(self):
        if self.holds or self.witness is None:
            return "true" if self.holds else "false"
        return f"false (witness {show_type(self.witness)})"


RELATIONS = ("member", "generalization", "specialization")


def relate(relation: str, K: Mapping[str, Kind], ge1: Type, ge2: Type) -> Verdict:
    if relation in ("member", "membership"):
        if membership(K, ge1, ge2):
            return Verdict(True)
        return Verdict(False, membership_witness(K, ge1, ge2))
    if relation == "generalization":
        return Verdict(generalization(K, ge1, ge2))
    if relation == "specialization":
        return Verdict(specialization(K, ge1, ge2))
    raise ValueError(f"unknown relation {relation!r}")


# ---------------------------------------------------------------------------
# events as data

def is_event_scheme(p: Type) -> bool:
    """Event type, or a quantified record variable whose required fields
    are all field types (the scheme of an open-ended event)."""
    p = as_poly(p)
    if is_event_type(p.body):
        return True
    end = codomain(p.body)
    k = dict(p.prefix).get(end.name) if isinstance(end, TyVar) else None
    return isinstance(k, RecordKind) and all(is_field_type(t) for _, t in k.fields)


def codomain(t: MonoType) -> MonoType:
    while isinstance(t, Arrow):
        t = t.cod
    return t


def codomain_scheme(p: Type) -> PolyType:
    """The record a constructor scheme produces, closed over the quantified
    variables it still mentions."""
    p = as_poly(p)
    body = codomain(p.body)
    keep = set()
    frontier = set(body.ftv)
    kinds = dict(p.prefix)
    while frontier:
        v = frontier.pop()
        if v in kinds and v not in keep:
            keep.add(v)
            frontier |= kinds[v].ftv
    return PolyType(tuple((v, k) for v, k in p.prefix if v in keep), body)


@dataclass(frozen=True)
class GenericEvent:
    name: str
    scheme: PolyType
    definition: Optional[Term] = None

    def __post_init__(self):
        if not self.name[:1].isupper():
            raise ValueError(f"event names start with a capital letter: {self.name!r}")
        if not is_event_scheme(self.scheme):
            raise ValueError(f"{self.name} does not have an event type: {show_scheme(self.scheme)}")

    @classmethod
    def from_definition(cls, name: str, m: Term, env: Optional[Mapping[str, Type]] = None, extended: bool = False):
        base = dict(prelude_env(extended))
        base.update(env or {})
        K, S, t = infer({}, base, m, extended=extended)
        K1, p = closure(K, base, t)
        return cls(name, p, m)


def value_type(v: Value) -> MonoType:
    """Ground type of a first-order value."""
    if isinstance(v, ConstV):
        return Base(v.base)
    if isinstance(v, RecordV):
        return RecordType(tuple((lab, value_type(x)) for lab, x in v.fields))
    if isinstance(v, ListV):
        if not v.items:
            raise ValueError("the empty list has no ground type")
        return ListType(value_type(v.items[0]))
    raise ValueError(f"not a first-order value: {v!r}")


@dataclass(frozen=True)
class SpecificEvent:
    value: RecordV
    type: RecordType

    def __post_init__(self):
        if self.type.ftv:
            raise ValueError("specific events are ground")

    @classmethod
    def of(cls, v: RecordV) -> "SpecificEvent":
        t = value_type(v)
        assert isinstance(t, RecordType)
        return cls(v, t)


def instantiates(K: Mapping[str, Kind], e: SpecificEvent | MonoType, ge: GenericEvent | Type) -> bool:
    """e :: ge, by kinded instantiation of the record ge constructs."""
    t = e.type if isinstance(e, SpecificEvent) else e
    scheme = ge.scheme if isinstance(ge, GenericEvent) else ge
    return generic_instance(K, codomain_scheme(scheme), t)


# ---------------------------------------------------------------------------
# event processing agents

@dataclass(frozen=True)
class EpaVerdict:
    ok: bool
    kinds: dict
    scheme: Optional[PolyType]
    reason: str = ""

    def __bool__(self):
        return self.ok


def is_epa(
    K: Mapping[str, Kind],
    env: Mapping[str, Type],
    m: Term,
    *,
    extended: bool = False,
    prelude: bool = True,
) -> EpaVerdict:
    """Does m's principal type have the shape of an event type?  A
    codomain that is a record-kinded variable (a translate agent such as
    ``λx. modify(x, l, ...)``) counts when its kind only asks for fields."""
    base = dict(prelude_env(extended)) if prelude else {}
    base.update(env)
    try:
        K1, S, t = infer(K, base, m, extended=extended)
    except TypeInferenceError as e:
        return EpaVerdict(False, {}, None, f"type error: {e}")
    K2, p = closure(K1, base, t)
    if is_event_scheme(p):
        return EpaVerdict(True, K2, p)
    return EpaVerdict(False, K2, p, f"{show_type(codomain(p.body))} is not an event record")


__all__ = [
    "EXTRA_LABEL",
    "EpaVerdict",
    "GenericEvent",
    "RELATIONS",
    "SpecificEvent",
    "Verdict",
    "codomain",
    "codomain_scheme",
    "generalization",
    "ground_instances",
    "instantiates",
    "is_epa",
    "is_event_scheme",
    "is_event_record",
    "membership",
    "membership_witness",
    "relate",
    "specialization",
    "value_type",
]
