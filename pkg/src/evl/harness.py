"""Run an event processing agent over a stream of NDJSON events.

Three agent shapes are supported:

* unary: ``tau -> record``, applied to each event in turn;
* fold: ``acc -> tau -> acc`` together with an initial accumulator, folded
  left over the stream, emitting the final accumulator;
* stream: ``[tau] -> record`` or ``[tau] -> [record]``, applied once to the
  list of all admitted events (extended mode only).

Every event is checked against the agent's domain before it is used.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, TextIO

from .evaluator import DEFAULT_FUEL, FuelExhausted, Stuck, _Halt, _Machine
from .events import codomain, is_event_record, is_event_scheme
from .infer import TypeInferenceError, _open, closure, infer
from .prelude import prelude_env, primitives, with_library
from .runtime import Closure, ConstV, ListV, PrimV, RecordV, Value
from .syntax import (
    Arrow,
    Base,
    ListType,
    MonoType,
    PolyType,
    RecordKind,
    RecordType,
    Term,
    TyVar,
    U,
    apply_mono,
    prettify,
    show_scheme,
    show_type,
)
from .unify import UnificationError, unify


class HarnessError(Exception):
    pass


class AdmissionError(HarnessError):
    def __init__(self, message: str, missing: frozenset[str] = frozenset()):
        self.missing = missing
        super().__init__(message)


class BadEvent(HarnessError):
    pass


# ---------------------------------------------------------------------------
# JSON <-> values


def json_to_value(payload: Mapping, policy: Optional[Mapping[str, str]] = None) -> tuple[RecordV, RecordType]:
    """Turn one decoded JSON object into a record value and its type.

    Numbers are Int when written without a fraction or exponent and Float
    otherwise; ``policy`` maps labels to a base type to override that.
    """
    if not isinstance(payload, Mapping):
        raise BadEvent(f"an event must be a JSON object, got {type(payload).__name__}")
    if not payload:
        raise BadEvent("empty event")
    policy = policy or {}
    fields = []
    types = []
    for label, raw in payload.items():
        want = policy.get(label)
        if isinstance(raw, bool):
            base, v = "Bool", raw
        elif isinstance(raw, int):
            base, v = "Int", raw
        elif isinstance(raw, float):
            base, v = "Float", raw
        elif isinstance(raw, str):
            base, v = "String", raw
        elif raw is None:
            raise BadEvent(f"field {label!r} is null")
        else:
            raise BadEvent(f"field {label!r} is nested; events are flat")
        if want is not None and want != base:
            if want == "Float" and base == "Int":
                base, v = "Float", float(v)
            elif want == "Int" and base == "Float" and float(v).is_integer():
                base, v = "Int", int(v)
            else:
                raise BadEvent(f"field {label!r}: cannot read {raw!r} as {want}")
        fields.append((label, ConstV(v, base)))
        types.append((label, Base(base)))
    return RecordV(tuple(fields)), RecordType(tuple(types))


def value_to_json(v: Value):
    if isinstance(v, ConstV):
        if v.base == "Float" and not math.isfinite(v.value):
            return str(v.value)
        return v.value
    if isinstance(v, RecordV):
        return {lab: value_to_json(x) for lab, x in v.fields}
    if isinstance(v, ListV):
        return [value_to_json(x) for x in v.items]
    if isinstance(v, (Closure, PrimV)):
        raise HarnessError("a function cannot be serialized as an event")
    raise TypeError(v)  # pragma: no cover


def read_ndjson(lines: Iterable[str]) -> Iterator[tuple[int, object]]:
    """Yield (line number, decoded object or the exception) per non-blank line."""
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            yield n, json.loads(line)
        except json.JSONDecodeError as e:
            yield n, BadEvent(f"line {n}: {e}")


# ---------------------------------------------------------------------------
# admission

@dataclass
class AgentHandle:
    term: Term
    kinds: dict
    scheme: PolyType
    shape: str  # "unary", "fold" or "stream"
    extended: bool
    agent: Value
    init: Optional[Value] = None
    init_type: Optional[MonoType] = None

    def domain(self) -> MonoType:
        """Element type the agent consumes (before any per-event check)."""
        body = self.scheme.body
        if self.shape == "fold":
            return body.cod.dom
        d = body.dom
        return d.elem if self.shape == "stream" else d

    def accepts(self, t: RecordType) -> Optional[str]:
        """None if an event of type t may be fed to the agent, else why not.
        The result the agent would produce must also be a flat event."""
        kb, body, flex = _open(self.scheme, "?")
        allK = dict(self.kinds)
        allK.update(kb)
        res = TyVar("?result")
        allK[res.name] = U
        if self.shape == "fold":
            pairs = [(body, Arrow(self.init_type, Arrow(t, self.init_type)))]
        elif self.shape == "stream":
            pairs = [(body, Arrow(ListType(t), res))]
        else:
            pairs = [(body, Arrow(t, res))]
        try:
            _, S = unify(allK, pairs, flexible=set(flex) | {res.name})
        except UnificationError as e:
            return _explain(self, t, e)
        if self.shape != "fold":
            out = apply_mono(S, res)
            if isinstance(out, ListType) and self.shape == "stream":
                out = out.elem
            if not is_event_record(out):
                return f"the agent would produce {show_type(out)}, which is not an event"
        return None

    def accepts_init(self) -> Optional[str]:
        kb, body, flex = _open(self.scheme, "?")
        allK = dict(self.kinds)
        allK.update(kb)
        a = TyVar("?event")
        allK[a.name] = RecordKind(())
        try:
            unify(allK, [(body, Arrow(self.init_type, Arrow(a, self.init_type)))], flexible=set(flex) | {a.name})
        except UnificationError as e:
            return f"initial accumulator {show_type(self.init_type)} does not fit {show_scheme(prettify(self.kinds, self.scheme)[1])}: {e.reason}"
        return None


def _required_labels(h: AgentHandle) -> dict:
    d = h.domain()
    if isinstance(d, TyVar):
        k = dict(h.scheme.prefix).get(d.name) or h.kinds.get(d.name)
        if isinstance(k, RecordKind):
            return k.map
    if isinstance(d, RecordType):
        return d.map
    return {}


def _explain(h: AgentHandle, t: RecordType, e: UnificationError) -> str:
    need = _required_labels(h)
    missing = sorted(set(need) - set(t.map))
    if missing:
        return "missing labels " + ", ".join(missing)
    return f"event type {show_type(t)} does not fit {show_type(h.domain())}: {e.reason}"


def _produces_event(cod: MonoType, prefix) -> bool:
    # a translate agent returns (a modified copy of) its input record
    return is_event_scheme(PolyType(prefix, cod))


def _shape(scheme: PolyType, has_init: bool, extended: bool) -> Optional[str]:
    body = scheme.body
    kinds = scheme.prefix
    if not isinstance(body, Arrow):
        return None
    if has_init:
        if isinstance(body.cod, Arrow):
            return "fold"
        return None
    if isinstance(body.dom, ListType):
        if not extended:
            return None
        cod = body.cod
        if isinstance(cod, ListType):
            cod = cod.elem
        return "stream" if _produces_event(cod, kinds) else None
    return "unary" if _produces_event(codomain(body), kinds) else None


def admit(
    agent: Term,
    sample: Optional[RecordType] = None,
    *,
    extended: bool = False,
    init: Optional[Term] = None,
    fuel: int = DEFAULT_FUEL,
) -> AgentHandle:
    """Type the agent, decide its shape, evaluate it to a closure, and (if
    a sample event type is given) check that such events are accepted."""
    prims = primitives(extended)
    env = prelude_env(extended)
    agent = with_library(agent) if extended else agent
    try:
        K, S, t = infer({}, env, agent, extended=extended)
    except TypeInferenceError as e:
        raise AdmissionError(f"agent does not type-check: {e}") from None
    K1, scheme = closure(K, env, t)
    init_v = init_t = None
    if init is not None:
        try:
            Ki, _, ti = infer({}, env, init, extended=extended)
        except TypeInferenceError as e:
            raise AdmissionError(f"initial accumulator does not type-check: {e}") from None
        if ti.ftv:
            raise AdmissionError(f"initial accumulator must have a ground type, got {show_type(ti)}")
        init_t = ti
        init_v = _run(init, prims, fuel)
    shape = _shape(scheme, init is not None, extended)
    if shape is None:
        what = "a fold agent acc -> event -> acc" if init is not None else "an event processing agent"
        raise AdmissionError(f"{show_scheme(prettify(K1, scheme)[1])} is not {what} (codomain {show_type(codomain(scheme.body))})")
    h = AgentHandle(agent, K1, scheme, shape, extended, _run(agent, prims, fuel), init_v, init_t)
    if shape == "fold":
        probe = h.accepts_init()
        if probe:
            raise AdmissionError(probe)
    if sample is not None:
        why = h.accepts(sample)
        if why is not None:
            need = _required_labels(h)
            raise AdmissionError(f"agent rejects {show_type(sample)}: {why}", frozenset(set(need) - set(sample.map)))
    return h


def _run(m: Term, prims, fuel: int) -> Value:
    mach = _Machine(fuel, prims)
    try:
        return mach.eval(m, None)
    except _Halt as h:
        raise AdmissionError(f"agent does not evaluate: {_describe(h.outcome)}") from None


def _describe(outcome) -> str:
    if isinstance(outcome, Stuck):
        return f"stuck ({outcome.reason})"
    if isinstance(outcome, FuelExhausted):
        return f"fuel exhausted after {outcome.steps} steps"
    return "done"


# ---------------------------------------------------------------------------
# running

@dataclass
class Report:
    inputs: int = 0
    outputs: int = 0
    skipped: int = 0
    stuck: int = 0
    errors: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"in": self.inputs, "out": self.outputs, "skipped": self.skipped, "stuck": self.stuck}


class StreamAbort(HarnessError):
    def __init__(self, message: str, report: Report, stuck: bool):
        self.report = report
        self.stuck = stuck
        super().__init__(message)


def _apply(h: AgentHandle, args: list[Value], fuel: int):
    mach = _Machine(fuel, primitives(h.extended))
    f = h.agent
    try:
        for a in args:
            f = mach.apply(f, a)
    except _Halt as halt:
        return halt.outcome
    return f


def run_stream(
    h: AgentHandle,
    events: Iterable[object],
    *,
    policy: Optional[Mapping[str, str]] = None,
    fuel: int = DEFAULT_FUEL,
    skip_bad: bool = False,
    report: Optional[Report] = None,
) -> Iterator[object]:
    """Yield derived events as JSON-ready objects; counts go in ``report``.

    ``events`` holds decoded JSON objects (or exceptions for lines that did
    not decode).  Without ``skip_bad`` the first bad event or stuck
    evaluation raises StreamAbort.
    """
    rep = report if report is not None else Report()
    acc = h.init
    batch: list[Value] = []

    def reject(msg: str, stuck: bool = False):
        rep.errors.append(msg)
        if stuck:
            rep.stuck += 1
        else:
            rep.skipped += 1
        if not skip_bad:
            raise StreamAbort(msg, rep, stuck)

    for n, payload in enumerate(events, 1):
        rep.inputs += 1
        if isinstance(payload, Exception):
            reject(str(payload))
            continue
        try:
            v, t = json_to_value(payload, policy)
        except BadEvent as e:
            reject(f"event {n}: {e}")
            continue
        why = h.accepts(t)
        if why is not None:
            reject(f"event {n}: {why}")
            continue
        if h.shape == "stream":
            batch.append(v)
            continue
        if h.shape == "fold":
            out = _apply(h, [acc, v], fuel)
            if isinstance(out, (Stuck, FuelExhausted)):
                reject(f"event {n}: {_describe(out)}", stuck=True)
                continue
            acc = out
            continue
        out = _apply(h, [v], fuel)
        if isinstance(out, (Stuck, FuelExhausted)):
            reject(f"event {n}: {_describe(out)}", stuck=True)
            continue
        rep.outputs += 1
        yield value_to_json(out)

    if h.shape == "fold":
        rep.outputs += 1
        yield value_to_json(acc)
    elif h.shape == "stream":
        out = _apply(h, [ListV(tuple(batch))], fuel)
        if isinstance(out, (Stuck, FuelExhausted)):
            rep.errors.append(_describe(out))
            rep.stuck += 1
            if not skip_bad:
                raise StreamAbort(_describe(out), rep, True)
            return
        items = out.items if isinstance(out, ListV) else (out,)
        for x in items:
            rep.outputs += 1
            yield value_to_json(x)


def run_ndjson(
    h: AgentHandle,
    src: TextIO,
    dst: TextIO,
    **kw,
) -> Report:
    """Read NDJSON from src, write derived events to dst."""
    rep = Report()
    objs = (obj for _, obj in read_ndjson(src))
    for out in run_stream(h, objs, report=rep, **kw):
        dst.write(json.dumps(out) + "\n")
    return rep


__all__ = [
    "AdmissionError",
    "AgentHandle",
    "BadEvent",
    "HarnessError",
    "Report",
    "StreamAbort",
    "admit",
    "json_to_value",
    "read_ndjson",
    "run_ndjson",
    "run_stream",
    "value_to_json",
]
