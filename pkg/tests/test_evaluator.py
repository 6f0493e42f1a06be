import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from evl.evaluator import (
    STUCK_REASONS,
    Decomposition,
    Done,
    FuelExhausted,
    Stepped,
    Stuck,
    decompose,
    eval_small,
    evaluate,
    plug,
    step,
    trace,
)
from evl.infer import TypeInferenceError, infer
from evl.parser import parse, pretty
from evl.prelude import prelude_env, primitives, with_library
from evl.runtime import RecordV, to_term
from evl.syntax import Const
from conftest import read
from termgen import EXT_OPS, TermGen

CORE = primitives()
EXT = primitives(True)


def run(src, extended=False, strategy="env", fuel=10_000):
    m = parse(src)
    if extended:
        m = with_library(m)
    return evaluate(m, fuel, EXT if extended else CORE, strategy)


def value(src, **kw):
    r = run(src, **kw)
    assert r.ok, r.outcome
    return pretty(r.outcome.value)


@pytest.mark.parametrize("strategy", ["env", "subst"])
def test_basic_values(strategy):
    assert value("(λx. x + 1.0) 2.0", strategy=strategy) == "3.0"
    assert value("let f x = {a = x} in (f 1).a", strategy=strategy) == "1"
    assert value("modify({a = 1, b = true}, a, 2)", strategy=strategy) == "{a = 2, b = true}"
    assert value('if "a" == "a" then 1 else 2', strategy=strategy) == "1"
    assert value("divInt 7 2", extended=True, strategy=strategy) == "3"
    assert value("1.0 / 0.0", strategy=strategy) == "inf"


@pytest.mark.parametrize("strategy", ["env", "subst"])
@pytest.mark.parametrize(
    "src,reason,extended",
    [
        ("1 2", "apply-non-function", False),
        ("{a = 1}.b", "select-missing-label", False),
        ("modify({a = 1}, b, 2)", "modify-missing-label", False),
        ("if 1 then 2 else 3", "cond-non-bool", False),
        ("y", "free-variable", False),
        ("true + 1.0", "primitive-type-error", False),
        ("divInt 1 0", "division-by-zero", True),
        ("head []", "empty-list", True),
        ("letrec f = 1 in f", "letrec-non-function", True),
    ],
)
def test_stuck_reasons(src, reason, extended, strategy):
    r = run(src, extended=extended, strategy=strategy)
    assert isinstance(r.outcome, Stuck)
    assert r.outcome.reason == reason
    assert reason in STUCK_REASONS


@pytest.mark.parametrize("strategy", ["env", "subst"])
def test_fuel(strategy):
    r = run("(λx. x x) (λx. x x)", strategy=strategy, fuel=50)
    assert isinstance(r.outcome, FuelExhausted)
    assert r.steps == 50


def test_fartocel_trace():
    m = parse(read("fartocel_applied.evl"))
    outs = list(trace(m, prims=CORE))
    terms = [pretty(o.term) for o in outs if isinstance(o, Stepped)]
    assert terms[0] == "modify({temperature = 50.0}, temperature, ({temperature = 50.0}.temperature - 32.0) / 1.8)"
    assert terms[-1] == "{temperature = 10.0}"
    assert isinstance(outs[-1], Done)


def test_letev_trace():
    m = parse(read("letev_fire.evl"))
    outs = list(trace(m, prims=CORE))
    assert len(outs) == 4
    assert pretty(outs[-1].value) == '{location = "Porto", fire_danger = "low"}'


def test_check_applied():
    assert value(read("check_applied.evl")) == '{location = "Porto", fire_danger = "low"}'


def test_library():
    v = value(read("library.evl"), extended=True)
    assert v == "{kept = [{n = 2.0}, {n = 3.0}], doubled = [2.0, 4.0], sumr = 6.0, suml = (-6.0)}"


def test_step_on_value_is_done():
    assert isinstance(step(Const(1, "Int")), Done)


def test_letrec_factorial():
    src = "letrec fact n = if eqInt n 0 then 1 else mulInt n (fact (subInt n 1)) in fact 10"
    assert value(src, extended=True) == "3628800"
    assert value(src, extended=True, strategy="subst") == "3628800"


def _closed_typed(seed, extended=False):
    rng = random.Random(seed)
    gen = TermGen(rng, ops=EXT_OPS if extended else TermGen(rng).ops, extended=extended)
    m = gen.term(rng.randint(1, 14))
    try:
        infer({}, prelude_env(extended), m, extended=extended)
    except TypeInferenceError:
        return None
    return m


def _first_order(v):
    return isinstance(v, RecordV) or type(v).__name__ in ("ConstV", "ListV")


@given(st.integers(0, 2**32), st.booleans())
def test_env_machine_agrees_with_small_step(seed, extended):
    rng = random.Random(seed)
    gen = TermGen(rng, ops=EXT_OPS if extended else TermGen(rng).ops, extended=extended)
    m = gen.term(rng.randint(1, 14))
    prims = EXT if extended else CORE
    a = evaluate(m, 2000, prims, "env")
    b = evaluate(m, 2000, prims, "subst")
    if isinstance(a.outcome, FuelExhausted) or isinstance(b.outcome, FuelExhausted):
        return
    assert type(a.outcome) is type(b.outcome)
    if isinstance(a.outcome, Stuck):
        assert a.outcome.reason == b.outcome.reason
    else:
        if not _has_letrec(m):
            assert a.steps == b.steps
        if _first_order(a.value) and "λ" not in pretty(b.outcome.value):
            assert pretty(a.outcome.value) == pretty(b.outcome.value)


def _has_letrec(m):
    return "letrec" in pretty(m)


@given(st.integers(0, 2**32))
def test_unique_decomposition(seed):
    """Every non-value closed term splits into exactly one context and
    redex, and plugging the redex back gives the term."""
    rng = random.Random(seed)
    m = TermGen(rng, ops=EXT_OPS, extended=True).term(rng.randint(2, 14))
    for _ in range(30):
        d = decompose(m, EXT)
        if not isinstance(d, Decomposition):
            break
        assert plug(d.context, d.redex) == m
        # the redex itself decomposes to the empty context
        d2 = decompose(d.redex, EXT)
        assert isinstance(d2, Decomposition) and d2.context == () and d2.redex == d.redex
        out = step(m, EXT)
        if not isinstance(out, Stepped):
            break
        m = out.term


@given(st.integers(0, 2**32))
def test_deterministic(seed):
    m = _closed_typed(seed)
    if m is None:
        return
    assert eval_small(m, 500, CORE) == eval_small(m, 500, CORE)
    assert evaluate(m, 500, CORE).outcome == evaluate(m, 500, CORE).outcome


@given(st.integers(0, 2**32))
def test_progress(seed):
    """Well-typed closed terms never get stuck, except on the partial
    primitives (division by zero, empty lists)."""
    m = _closed_typed(seed, extended=seed % 2 == 0)
    if m is None:
        return
    out, _ = eval_small(m, 2000, EXT)
    if isinstance(out, Stuck):
        assert out.reason in ("division-by-zero", "empty-list")
