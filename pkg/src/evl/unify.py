"""Kinded unification.

The engine works on a state (E, K, S): pending equations, kind
constraints, accumulated substitution.  The rules are tried in a fixed
order on the first pending pair:

  1. drop an identical pair
  2. alpha::U on the left: bind it
  3. alpha::U on the right: bind it
  4. two record-kinded variables: merge kinds, equate shared fields
  5. record-kinded variable against a record type
  6. the mirror image of 5
  7. two record types with the same labels
  8. two arrows
  (plus: two list types, for extended mode)

Anything else fails.  Variables outside ``flexible`` are rigid: they are
never bound, which turns the engine into a matcher for generic-instance
checks.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping

from .syntax import (
    U,
    Arrow,
    Kind,
    ListType,
    MonoType,
    RecordKind,
    RecordType,
    Subst,
    TyVar,
    apply_kind,
    apply_mono,
    eftv,
    show_type,
)


class UnificationError(Exception):
    def __init__(self, left: MonoType, right: MonoType, reason: str):
        self.left, self.right, self.reason = left, right, reason
        super().__init__(f"cannot unify {show_type(left)} with {show_type(right)}: {reason}")


def field_merge(f1: Mapping[str, MonoType], f2: Mapping[str, MonoType]) -> dict[str, MonoType]:
    """F1 +- F2: union of the two maps, F1 winning on shared labels."""
    out = dict(f2)
    out.update(f1)
    return out


class _State:
    def __init__(self, K, E, flexible):
        self.K: dict[str, Kind] = dict(K)
        self.pending: list[tuple[MonoType, MonoType]] = list(E)[::-1]  # top of stack = first pair
        self.S: dict[str, MonoType] = {}
        self.flexible = flexible

    def flex(self, v: str) -> bool:
        return self.flexible is None or v in self.flexible

    def kind(self, v: str) -> Kind:
        return self.K.get(v, U)

    def push(self, pairs):
        # new pairs go in front, keeping their listed order
        self.pending.extend(reversed(list(pairs)))

    def bind(self, name: str, t: MonoType, new_kinds=None):
        s = {name: t}
        self.pending = [(apply_mono(s, a), apply_mono(s, b)) for a, b in self.pending]
        K = {v: apply_kind(s, k) for v, k in self.K.items() if v != name}
        if new_kinds:
            for v, k in new_kinds.items():
                K[v] = apply_kind(s, k)
        self.K = K
        for v in self.S:
            self.S[v] = apply_mono(s, self.S[v])
        self.S[name] = t


def unify(
    K: Mapping[str, Kind],
    E: Iterable[tuple[MonoType, MonoType]],
    flexible: set[str] | frozenset[str] | None = None,
) -> tuple[dict[str, Kind], Subst]:
    """Most general kinded unifier of (K, E).

    Returns the residual kinding environment and the substitution, or
    raises UnificationError.  Variables missing from K count as kind U.
    """
    st = _State(K, E, flexible)
    while st.pending:
        t1, t2 = st.pending.pop()
        _step(st, t1, t2)
    return st.K, Subst(st.S)


def _occurs(st: _State, name: str, t: MonoType) -> bool:
    # closed under kinds: binding a to b where b's kind mentions a would
    # create a cyclic constraint
    return name in eftv(st.K, t)


def _step(st: _State, t1: MonoType, t2: MonoType) -> None:
    # rule 1
    if t1 == t2:
        return
    v1 = t1.name if isinstance(t1, TyVar) else None
    v2 = t2.name if isinstance(t2, TyVar) else None
    k1 = st.kind(v1) if v1 is not None else None
    k2 = st.kind(v2) if v2 is not None else None

    # rule 2
    if v1 is not None and k1 == U and st.flex(v1):
        if _occurs(st, v1, t2):
            raise UnificationError(t1, t2, "occurs check")
        st.bind(v1, t2)
        return
    # rule 3
    if v2 is not None and k2 == U and st.flex(v2):
        if _occurs(st, v2, t1):
            raise UnificationError(t1, t2, "occurs check")
        st.bind(v2, t1)
        return
    # rule 4
    if isinstance(k1, RecordKind) and isinstance(k2, RecordKind):
        f1, f2 = k1.map, k2.map
        if st.flex(v1):
            src, dst, fs, fd = v1, v2, f1, f2
        elif st.flex(v2):
            src, dst, fs, fd = v2, v1, f2, f1
        else:
            raise UnificationError(t1, t2, "distinct rigid variables")
        if st.flex(dst):
            merged = field_merge(fs, fd)
        else:
            missing = set(fs) - set(fd)
            if missing:
                raise UnificationError(t1, t2, f"rigid record kind lacks {sorted(missing)}")
            merged = fd
        shared = [(fs[lab], fd[lab]) for lab in sorted(fs) if lab in fd]
        st.bind(src, TyVar(dst), {dst: RecordKind(merged)})
        if dst in eftv(st.K, st.K[dst]):
            raise UnificationError(t1, t2, "cyclic record kind")
        st.push(shared)
        return
    # rules 5 and 6
    for var, kind, other, flip in ((v1, k1, t2, False), (v2, k2, t1, True)):
        if isinstance(kind, RecordKind) and isinstance(other, RecordType):
            a, b = (t2, t1) if flip else (t1, t2)
            if not st.flex(var):
                raise UnificationError(a, b, "rigid variable")
            f1, f2 = kind.map, other.map
            missing = set(f1) - set(f2)
            if missing:
                raise UnificationError(a, b, f"record lacks labels {sorted(missing)}")
            if _occurs(st, var, other):
                raise UnificationError(a, b, "occurs check")
            st.bind(var, other)
            st.push((f1[lab], f2[lab]) for lab in sorted(f1))
            return
    # rule 7
    if isinstance(t1, RecordType) and isinstance(t2, RecordType):
        f1, f2 = t1.map, t2.map
        if set(f1) != set(f2):
            raise UnificationError(t1, t2, "different record labels")
        st.push((f1[lab], f2[lab]) for lab in sorted(f1))
        return
    # rule 8
    if isinstance(t1, Arrow) and isinstance(t2, Arrow):
        st.push([(t1.dom, t2.dom), (t1.cod, t2.cod)])
        return
    if isinstance(t1, ListType) and isinstance(t2, ListType):
        st.push([(t1.elem, t2.elem)])
        return
    raise UnificationError(t1, t2, "type mismatch")
