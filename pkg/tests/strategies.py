"""Hypothesis strategies for types, kinds and kinding environments."""
from hypothesis import strategies as st

from evl.syntax import (
    BOOL,
    FLOAT,
    INT,
    STRING,
    U,
    Arrow,
    RecordKind,
    RecordType,
    TyVar,
)

VARS = ("a", "b", "c", "d")
LABELS = ("l1", "l2", "l3")

bases = st.sampled_from((BOOL, INT, FLOAT, STRING))


def monotypes(vars=VARS, max_leaves: int = 8):
    leaves = bases | st.sampled_from(vars).map(TyVar) if vars else bases
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda p: Arrow(*p)),
            st.dictionaries(st.sampled_from(LABELS), inner, min_size=1, max_size=3).map(RecordType),
        ),
        max_leaves=max_leaves,
    )


ground_types = monotypes(vars=())


@st.composite
def kenvs(draw, vars=VARS):
    """Well-formed, acyclic kinding environment over ``vars``: a record
    kind may only mention variables earlier in the list."""
    K = {}
    for i, v in enumerate(vars):
        if draw(st.booleans()):
            K[v] = U
        else:
            earlier = vars[:i]
            fields = draw(st.dictionaries(st.sampled_from(LABELS), monotypes(earlier, 4), max_size=2))
            K[v] = RecordKind(fields)
    return K
