"""Type inference for EVL: closure, generic instance, the event-shape
predicate, the WK algorithm and a typing checker built on top of it."""
from __future__ import annotations

import itertools
from collections.abc import Mapping
from typing import NamedTuple

from .syntax import (
    BOOL,
    IDENTITY,
    U,
    Abs,
    App,
    Arrow,
    Base,
    Cond,
    Const,
    Kind,
    Let,
    LetEv,
    LetRec,
    ListLit,
    ListType,
    Modify,
    MonoType,
    PolyType,
    Record,
    RecordKind,
    RecordType,
    Select,
    Subst,
    Term,
    TyVar,
    Type,
    Var,
    apply_kind,
    apply_mono,
    apply_subst,
    as_poly,
    compose,
    eftv,
    name_key,
    show_type,
)
from .unify import UnificationError, unify


class TypeInferenceError(Exception):
    pass


class UnboundVariable(TypeInferenceError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable {name}")


class UnificationFailure(TypeInferenceError):
    def __init__(self, err: UnificationError, where: Term | None = None):
        self.error = err
        self.where = where
        super().__init__(str(err))


class EventShapeError(TypeInferenceError):
    def __init__(self, name: str, t: MonoType):
        self.name, self.type = name, t
        super().__init__(f"letEv {name}: {show_type(t)} is not an event type")


class ModeError(TypeInferenceError):
    pass


class Typing(NamedTuple):
    kinds: dict
    subst: Subst
    type: MonoType


# ---------------------------------------------------------------------------
# event shape

def is_field_type(t: MonoType) -> bool:
    """Field types: a variable, a base type, or an arrow chain ending in one."""
    while isinstance(t, Arrow):
        t = t.cod
    return isinstance(t, (TyVar, Base))


def is_event_record(t: MonoType) -> bool:
    return isinstance(t, RecordType) and all(is_field_type(ft) for _, ft in t.fields)


def is_event_type(t: Type) -> bool:
    """A record of field types, possibly behind a curried arrow chain."""
    if isinstance(t, PolyType):
        t = t.body
    while isinstance(t, Arrow):
        t = t.cod
    return is_event_record(t)


# ---------------------------------------------------------------------------
# closure and generic instance

def _eftv_env(K, env: Mapping[str, Type]) -> frozenset[str]:
    out: set[str] = set()
    for t in env.values():
        if t.ftv:
            out |= eftv(K, t)
    return frozenset(out)


def dependency_order(K: Mapping[str, Kind], names) -> list[str]:
    """Order so that a variable mentioned in another's kind comes first;
    ties broken by name."""
    names = set(names)
    deps = {v: (K[v].ftv & names) - {v} if v in K else set() for v in names}
    out: list[str] = []
    done: set[str] = set()
    while len(out) < len(names):
        ready = sorted((v for v in names if v not in done and deps[v] <= done), key=name_key)
        if not ready:  # cyclic kinds cannot arise from unify; fall back to names
            ready = sorted((v for v in names if v not in done), key=name_key)
        v = ready[0]
        out.append(v)
        done.add(v)
    return out


def closure(K: Mapping[str, Kind], env: Mapping[str, Type], t: MonoType) -> tuple[dict, PolyType]:
    """Cls(K, env, t): quantify what is essentially free in t but not in env."""
    gen = eftv(K, t) - _eftv_env(K, env)
    order = dependency_order(K, gen)
    prefix = tuple((v, K.get(v, U)) for v in order)
    rest = {v: k for v, k in K.items() if v not in gen}
    return rest, PolyType(prefix, t)


_skolems = itertools.count()


def _open(p: PolyType, tag: str) -> tuple[dict, MonoType, list[str]]:
    ren = {v: TyVar(f"{tag}{next(_skolems)}") for v in p.bound}
    kinds = {ren[v].name: apply_kind(ren, k) for v, k in p.prefix}
    return kinds, apply_mono(ren, p.body), [ren[v].name for v in p.bound]


def generic_instance(K: Mapping[str, Kind], s1: Type, s2: Type) -> bool:
    """K |- s1 >= s2.

    s2's quantified variables become rigid skolems, s1's become the only
    flexible variables, and the bodies are matched with the unifier.
    """
    p1, p2 = as_poly(s1), as_poly(s2)
    k1, b1, flex = _open(p1, "?")
    k2, b2, _ = _open(p2, "!")
    allK = dict(K)
    allK.update(k2)
    allK.update(k1)
    try:
        unify(allK, [(b1, b2)], flexible=set(flex))
    except UnificationError:
        return False
    return True


# ---------------------------------------------------------------------------
# WK

class Inferencer:
    """One inference session; owns its fresh-variable supply.

    ``extended`` allows letrec and list literals.
    """

    def __init__(self, extended: bool = False, prefix: str = "'"):
        self.extended = extended
        self._counter = itertools.count(1)
        self._prefix = prefix

    def fresh(self) -> TyVar:
        return TyVar(f"{self._prefix}{next(self._counter)}")

    def _unify(self, K, E, where):
        try:
            return unify(K, E)
        except UnificationError as e:
            raise UnificationFailure(e, where) from None

    @staticmethod
    def _env(s: Subst, env: dict) -> dict:
        if not s:
            return env
        keys = s.keys()
        return {x: (apply_subst(s, t) if t.ftv & keys else t) for x, t in env.items()}

    def infer(self, K: Mapping[str, Kind], env: Mapping[str, Type], m: Term) -> Typing:
        return self._wk(dict(K), dict(env), m)

    def _wk(self, K: dict, env: dict, m: Term) -> Typing:
        if isinstance(m, Const):
            return Typing(K, IDENTITY, Base(m.base))

        if isinstance(m, Var):
            if m.name not in env:
                raise UnboundVariable(m.name)
            p = as_poly(env[m.name])
            if not p.prefix:
                return Typing(K, IDENTITY, p.body)
            s = {v: self.fresh() for v in p.bound}
            K = dict(K)
            for v, k in p.prefix:
                K[s[v].name] = apply_kind(s, k)
            return Typing(K, IDENTITY, apply_mono(s, p.body))

        if isinstance(m, App):
            K1, S1, t1 = self._wk(K, env, m.fun)
            K2, S2, t2 = self._wk(K1, self._env(S1, env), m.arg)
            beta = self.fresh()
            K2 = dict(K2)
            K2[beta.name] = U
            K3, S3 = self._unify(K2, [(apply_mono(S2, t1), Arrow(t2, beta))], m)
            return Typing(K3, compose(S3, compose(S2, S1)), apply_mono(S3, beta))

        if isinstance(m, Abs):
            a = self.fresh()
            K1 = dict(K)
            K1[a.name] = U
            env1 = dict(env)
            env1[m.param] = a
            K1, S1, t = self._wk(K1, env1, m.body)
            return Typing(K1, S1, Arrow(apply_mono(S1, a), t))

        if isinstance(m, (Let, LetEv)):
            K1, S1, t1 = self._wk(K, env, m.bound)
            if isinstance(m, LetEv) and not is_event_type(t1):
                raise EventShapeError(m.name, t1)
            env1 = self._env(S1, env)
            K1c, sigma = closure(K1, env1, t1)
            env2 = dict(env1)
            env2[m.name] = sigma
            K2, S2, t2 = self._wk(K1c, env2, m.body)
            return Typing(K2, compose(S2, S1), t2)

        if isinstance(m, LetRec):
            if not self.extended:
                raise ModeError("letrec is only available in extended mode")
            if not isinstance(m.bound, Abs):
                raise ModeError(f"letrec {m.name} must bind a function")
            a = self.fresh()
            K0 = dict(K)
            K0[a.name] = U
            env0 = dict(env)
            env0[m.name] = a
            K1, S1, t1 = self._wk(K0, env0, m.bound)
            K2, S2 = self._unify(K1, [(apply_mono(S1, a), t1)], m)
            S21 = compose(S2, S1)
            env1 = self._env(S21, env)
            K2c, sigma = closure(K2, env1, apply_mono(S2, t1))
            env2 = dict(env1)
            env2[m.name] = sigma
            K3, S3, t3 = self._wk(K2c, env2, m.body)
            return Typing(K3, compose(S3, S21), t3)

        if isinstance(m, Record):
            Ki, S, types = K, IDENTITY, []
            for lab, sub in m.fields:
                Ki, Si, ti = self._wk(Ki, self._env(S, env), sub)
                types = [(l0, apply_mono(Si, t0)) for l0, t0 in types]
                types.append((lab, ti))
                S = compose(Si, S)
            return Typing(Ki, S, RecordType(types))

        if isinstance(m, Select):
            K1, S1, t1 = self._wk(K, env, m.subject)
            a1, a2 = self.fresh(), self.fresh()
            K1 = dict(K1)
            K1[a1.name] = U
            K1[a2.name] = RecordKind({m.label: a1})
            K2, S2 = self._unify(K1, [(a2, t1)], m)
            return Typing(K2, compose(S2, S1), apply_mono(S2, a1))

        if isinstance(m, Modify):
            K1, S1, t1 = self._wk(K, env, m.subject)
            K2, S2, t2 = self._wk(K1, self._env(S1, env), m.value)
            a1, a2 = self.fresh(), self.fresh()
            K2 = dict(K2)
            K2[a1.name] = U
            K2[a2.name] = RecordKind({m.label: a1})
            K3, S3 = self._unify(K2, [(a1, t2), (a2, apply_mono(S2, t1))], m)
            return Typing(K3, compose(S3, compose(S2, S1)), apply_mono(S3, a2))

        if isinstance(m, Cond):
            K1, S1, t1 = self._wk(K, env, m.guard)
            K2, S2 = self._unify(K1, [(t1, BOOL)], m)
            S21 = compose(S2, S1)
            K3, S3, t2 = self._wk(K2, self._env(S21, env), m.then)
            S321 = compose(S3, S21)
            K4, S4, t3 = self._wk(K3, self._env(S321, env), m.orelse)
            K5, S5 = self._unify(K4, [(apply_mono(S4, t2), t3)], m)
            return Typing(K5, compose(S5, compose(S4, S321)), apply_mono(S5, apply_mono(S4, t2)))

        if isinstance(m, ListLit):
            if not self.extended:
                raise ModeError("list literals are only available in extended mode")
            a = self.fresh()
            Ki = dict(K)
            Ki[a.name] = U
            S: Subst = IDENTITY
            elem: MonoType = a
            for item in m.items:
                Ki, Si, ti = self._wk(Ki, self._env(S, env), item)
                Ki, Su = self._unify(Ki, [(apply_mono(Si, elem), ti)], m)
                S = compose(Su, compose(Si, S))
                elem = apply_mono(Su, apply_mono(Si, elem))
            return Typing(Ki, S, ListType(elem))

        raise TypeError(f"not a term: {m!r}")


def infer(K: Mapping[str, Kind], env: Mapping[str, Type], m: Term, *, extended: bool = False) -> Typing:
    """WK(K, env, m) = (K', S, t), or raises TypeInferenceError."""
    return Inferencer(extended).infer(K, env, m)


def principal(m: Term, env: Mapping[str, Type] | None = None, *, extended: bool = False) -> tuple[dict, PolyType]:
    """Infer m under env (closed schemes expected) and close the result."""
    env = dict(env or {})
    K, S, t = infer({}, env, m, extended=extended)
    return closure(K, Inferencer._env(S, env), t)


def check(
    K: Mapping[str, Kind],
    env: Mapping[str, Type],
    m: Term,
    t: MonoType,
    *,
    extended: bool = False,
) -> bool:
    """K, env |- m : t.

    Runs WK, then asks whether t is reachable from the principal result by
    a substitution that leaves the variables of K (and of env) alone.
    """
    # fresh variables must not capture the caller's names (which may
    # themselves come from an earlier inference run)
    taken = set(K) | set(t.ftv)
    for k in K.values():
        taken |= k.ftv
    for x in env.values():
        taken |= x.ftv
    prefix = "'c"
    while any(v.startswith(prefix) for v in taken):
        prefix += "'"
    try:
        K1, S, t0 = Inferencer(extended, prefix).infer(K, env, m)
    except TypeInferenceError:
        return False
    env1 = Inferencer._env(S, dict(env))
    K1c, sigma = closure(K1, env1, t0)
    kb, body, flex = _open(sigma, "?")
    allK = dict(K)
    allK.update(K1c)
    allK.update(kb)
    flexible = set(flex) | (set(K1c) - set(K))
    pairs = [(body, t)]
    for x, orig in env.items():
        if isinstance(orig, MonoType) and orig.ftv:
            pairs.append((env1[x], orig))
    try:
        unify(allK, pairs, flexible=flexible)
    except UnificationError:
        return False
    return True
