import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from evl.parser import ParseError, lex, parse, parse_env, parse_scheme, parse_type, pretty
from evl.syntax import (
    FLOAT,
    INT,
    STRING,
    Abs,
    App,
    Arrow,
    Const,
    Let,
    LetEv,
    Modify,
    PolyType,
    Record,
    RecordKind,
    Select,
    TyVar,
    Var,
    record,
    show_scheme,
    show_type,
)
from conftest import CORPUS
from strategies import monotypes
from termgen import EXT_OPS, TermGen

x = Var("x")


def test_lambda_and_application():
    assert parse(r"\x. f x y") == Abs("x", App(App(Var("f"), x), Var("y")))
    assert parse("λx y. x") == Abs("x", Abs("y", x))


def test_infix_is_application_of_operator():
    m = parse("1 + 2 * 3")
    assert m == App(App(Var("+"), Const(1, "Int")), App(App(Var("*"), Const(2, "Int")), Const(3, "Int")))


def test_selection_binds_tighter_than_application():
    assert parse("f x.a") == App(Var("f"), Select(x, "a"))


def test_literals():
    assert parse("2.5") == Const(2.5, "Float")
    assert parse("3^Float") == Const(3.0, "Float")
    assert parse("1e3") == Const(1000.0, "Float")
    assert parse('"a\\"b"') == Const('a"b', "String")
    assert parse("(-4)") == Const(-4, "Int")


def test_let_sugar():
    assert parse("let f x = x in f") == Let("f", Abs("x", x), Var("f"))
    assert parse("letEv E l = {a = l} in E") == LetEv("E", Abs("l", Record((("a", Var("l")),))), Var("E"))


def test_pair_sugar():
    assert parse("(1, 2)") == Record((("fst", Const(1, "Int")), ("snd", Const(2, "Int"))))


def test_modify():
    assert parse("modify(x, a, 1)") == Modify(x, "a", Const(1, "Int"))


def test_comments_and_unicode_arrows():
    assert parse("-- hi\nλx. x") == Abs("x", x)
    assert parse_type("Int → Int") == Arrow(INT, INT)


@pytest.mark.parametrize(
    "src,line,col",
    [
        ("λx. ", 1, 5),
        ("let x = 1 x", 1, 12),
        ("{a = 1, a = 2}", 1, 9),
        ("1 +\n  )", 2, 3),
        ('"open', 1, 1),
        ("x $ y", 1, 3),
    ],
)
def test_errors_carry_positions(src, line, col):
    with pytest.raises(ParseError) as info:
        parse(src, "t.evl")
    assert (info.value.line, info.value.col) == (line, col)
    assert str(info.value).startswith(f"t.evl:{line}:{col}:")


def test_keywords_are_not_identifiers():
    with pytest.raises(ParseError):
        parse("λin. in")


def test_schemes():
    p = parse_scheme("forall a::U. forall e::{{l1: a}}. e -> a")
    assert isinstance(p, PolyType)
    assert dict(p.prefix)["e"] == RecordKind({"l1": TyVar("a")})
    assert parse_type("{b: Int, a: String} -> Float") == Arrow(record(a=STRING, b=INT), FLOAT)
    with pytest.raises(ParseError):
        parse_type("forall a::U. a")


def test_env_files():
    env = parse_env((CORPUS / "assumptions.env").read_text())
    assert set(env) == {"FireDanger", "WeatherInfo"}
    with pytest.raises(ParseError) as info:
        parse_env("ok : Int\nbad Int\n")
    assert info.value.line == 2


def test_lexer_positions():
    toks = lex("a\n  bc")
    assert [(t.text, t.line, t.col) for t in toks[:2]] == [("a", 1, 1), ("bc", 2, 3)]


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.evl")), ids=lambda p: p.name)
def test_corpus_round_trip(path):
    src = path.read_text()
    try:
        m = parse(src, path.name)
    except ParseError:
        m = None
    if m is None:
        p = parse_scheme(src, path.name)
        assert parse_scheme(show_scheme(p)) == p
        return
    assert parse(pretty(m)) == m
    assert pretty(parse(pretty(m))) == pretty(m)


@given(st.integers(0, 2**32))
def test_round_trip_generated(seed):
    rng = random.Random(seed)
    gen = TermGen(rng, ops=EXT_OPS, extended=True)
    m = gen.term(rng.randint(1, 20))
    assert parse(pretty(m)) == m


@given(monotypes())
def test_type_round_trip(t):
    assert parse_type(show_type(t)) == t
