"""Lexer, parser and pretty-printer for EVL source text.

Grammar summary (docs/grammar.md has the full EBNF):

    expr   := '\\' binders '.' expr | let | letEv | letrec | if | or
    or     := and ('or' and)*
    and    := cmp ('and' cmp)*
    cmp    := add (('>' | '<' | '==') add)?
    add    := mul (('+' | '-') mul)*
    mul    := app (('*' | '/') app)*
    app    := post post*
    post   := atom ('.' label)*

Infix operators become applications of free variables named after the
operator, so ``a + b`` is ``App(App(Var('+'), a), b)``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Optional

from .syntax import (
    BASE_TYPES,
    U,
    Abs,
    App,
    Arrow,
    Base,
    Cond,
    Const,
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
    Term,
    TyVar,
    Var,
)

KEYWORDS = {"let", "letEv", "letrec", "in", "if", "then", "else", "modify", "true", "false", "and", "or", "forall"}

INFIX = {
    "or": 1,
    "and": 2,
    ">": 3,
    "<": 3,
    "==": 3,
    "+": 4,
    "-": 4,
    "*": 5,
    "/": 5,
}
OPERATOR_NAMES = set(INFIX)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, origin: str = "<input>"):
        self.message, self.line, self.col, self.origin = message, line, col, origin
        super().__init__(f"{origin}:{line}:{col}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    value: object
    line: int
    col: int


_PUNCT = [
    ("::", "DCOLON"),
    ("->", "ARROW"),
    ("==", "EQEQ"),
    ("λ", "LAMBDA"),
    ("\\", "LAMBDA"),
    ("∀", "FORALL"),
    ("→", "ARROW"),
    (".", "DOT"),
    ("=", "EQ"),
    ("{", "LBRACE"),
    ("}", "RBRACE"),
    ("(", "LPAREN"),
    (")", "RPAREN"),
    ("[", "LBRACK"),
    ("]", "RBRACK"),
    (",", "COMMA"),
    ("^", "CARET"),
    (":", "COLON"),
    ("+", "PLUS"),
    ("-", "MINUS"),
    ("*", "STAR"),
    ("/", "SLASH"),
    (">", "GT"),
    ("<", "LT"),
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")


def lex(src: str, origin: str = "<input>") -> list[Token]:
    """Split source text into tokens.

    Identifiers right after a field-selection dot come out as LABEL.  Dots
    that close a lambda binder list are plain DOT tokens.
    """
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    in_binder = False
    n = len(src)

    def emit(kind, text, value=None):
        toks.append(Token(kind, text, value, line, col))

    while i < n:
        c = src[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c.isspace():
            i, col = i + 1, col + 1
            continue
        if src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            while j < n and src[j] != '"':
                if src[j] == "\\":
                    j += 1
                if j < n and src[j] == "\n":
                    break
                j += 1
            if j >= n or src[j] != '"':
                raise ParseError("unterminated string", line, col, origin)
            raw = src[i : j + 1]
            try:
                val = json.loads(raw)
            except json.JSONDecodeError:
                raise ParseError(f"bad string literal {raw}", line, col, origin) from None
            emit("STRING", raw, val)
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit():
            m = _NUMBER.match(src, i)
            text = m.group(0)
            if m.group(1) or m.group(2):
                emit("FLOAT", text, float(text))
            else:
                emit("INT", text, int(text))
            col += len(text)
            i += len(text)
            continue
        m = _IDENT.match(src, i)
        if m:
            text = m.group(0)
            after_dot = toks and toks[-1].kind == "DOT" and toks[-1].value == "select"
            if after_dot:
                emit("LABEL", text, text)
            elif text in KEYWORDS:
                if text == "forall":
                    in_binder = True
                emit(text.upper() if text != "letEv" else "LETEV", text, text)
            else:
                emit("IDENT", text, text)
            col += len(text)
            i += len(text)
            continue
        for p, kind in _PUNCT:
            if src.startswith(p, i):
                if kind in ("LAMBDA", "FORALL"):
                    in_binder = True
                if kind == "DOT":
                    emit(kind, p, "binder" if in_binder else "select")
                    in_binder = False
                else:
                    emit(kind, p, p)
                col += len(p)
                i += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col, origin)
    toks.append(Token("EOF", "", None, line, col))
    return toks


_OP_TOKENS = {
    "OR": "or",
    "AND": "and",
    "GT": ">",
    "LT": "<",
    "EQEQ": "==",
    "PLUS": "+",
    "MINUS": "-",
    "STAR": "*",
    "SLASH": "/",
}
_ATOM_START = {"INT", "FLOAT", "STRING", "TRUE", "FALSE", "IDENT", "LPAREN", "LBRACE", "LBRACK", "MODIFY"}


class _Parser:
    def __init__(self, toks: list[Token], origin: str):
        self.toks = toks
        self.pos = 0
        self.origin = origin

    # helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col, self.origin)

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {kind.lower()}, found {shown!r}")
        return self.advance()

    def ident(self) -> str:
        return self.expect("IDENT").text

    def label(self) -> str:
        if self.tok.kind in ("IDENT", "LABEL"):
            return self.advance().text
        raise self.error(f"expected a label, found {self.tok.text!r}")

    # terms
    def expr(self) -> Term:
        k = self.tok.kind
        if k == "LAMBDA":
            self.advance()
            params = []
            while self.tok.kind in ("IDENT", "LAMBDA"):
                if self.tok.kind == "IDENT":
                    params.append(self.advance().text)
                else:
                    self.advance()
            if not params:
                raise self.error("lambda needs a parameter")
            self.expect("DOT")
            body = self.expr()
            for p in reversed(params):
                body = Abs(p, body)
            return body
        if k in ("LET", "LETEV", "LETREC"):
            start = self.advance()
            name = self.ident()
            params = []
            while self.tok.kind == "IDENT":
                params.append(self.advance().text)
            self.expect("EQ")
            bound = self.expr()
            self.expect("IN")
            body = self.expr()
            for p in reversed(params):
                bound = Abs(p, bound)
            cls = {"LET": Let, "LETEV": LetEv, "LETREC": LetRec}[start.kind]
            return cls(name, bound, body)
        if k == "IF":
            self.advance()
            g = self.expr()
            self.expect("THEN")
            a = self.expr()
            self.expect("ELSE")
            b = self.expr()
            return Cond(g, a, b)
        return self.binary(1)

    def binary(self, level: int) -> Term:
        if level > 5:
            return self.application()
        left = self.binary(level + 1)
        while True:
            op = _OP_TOKENS.get(self.tok.kind)
            if op is None or INFIX[op] != level:
                return left
            self.advance()
            right = self.binary(level + 1)
            left = App(App(Var(op), left), right)
            if level == 3:  # comparisons do not chain
                op2 = _OP_TOKENS.get(self.tok.kind)
                if op2 is not None and INFIX[op2] == 3:
                    raise self.error("comparison operators do not associate; add parentheses")
                return left

    def application(self) -> Term:
        fun = self.postfix()
        while self.tok.kind in _ATOM_START:
            fun = App(fun, self.postfix())
        return fun

    def postfix(self) -> Term:
        t = self.atom()
        while self.tok.kind == "DOT" and self.tok.value == "select":
            self.advance()
            t = Select(t, self.expect("LABEL").text)
        return t

    def literal(self) -> Const:
        t = self.advance()
        if t.kind == "INT":
            c = Const(t.value, "Int")
        elif t.kind == "FLOAT":
            c = Const(t.value, "Float")
        elif t.kind == "STRING":
            c = Const(t.value, "String")
        else:
            c = Const(t.kind == "TRUE", "Bool")
        if self.tok.kind == "CARET":
            self.advance()
            ann = self.expect("IDENT")
            c = _annotate(c, ann.text, lambda m: self.error(m, ann))
        return c

    def atom(self) -> Term:
        t = self.tok
        k = t.kind
        if k in ("INT", "FLOAT", "STRING", "TRUE", "FALSE"):
            return self.literal()
        if k == "IDENT":
            self.advance()
            return Var(t.text)
        if k == "MODIFY":
            self.advance()
            self.expect("LPAREN")
            subj = self.expr()
            self.expect("COMMA")
            lab = self.label()
            self.expect("COMMA")
            val = self.expr()
            self.expect("RPAREN")
            return Modify(subj, lab, val)
        if k == "LBRACE":
            self.advance()
            fields = []
            seen = set()
            if self.tok.kind == "RBRACE":
                raise self.error("a record needs at least one field")
            while True:
                lt = self.tok
                lab = self.label()
                if lab in seen:
                    raise self.error(f"duplicate record label {lab!r}", lt)
                seen.add(lab)
                self.expect("EQ")
                fields.append((lab, self.expr()))
                if self.tok.kind == "COMMA":
                    self.advance()
                    continue
                self.expect("RBRACE")
                return Record(tuple(fields))
        if k == "LBRACK":
            self.advance()
            items = []
            if self.tok.kind != "RBRACK":
                items.append(self.expr())
                while self.tok.kind == "COMMA":
                    self.advance()
                    items.append(self.expr())
            self.expect("RBRACK")
            return ListLit(tuple(items))
        if k == "LPAREN":
            self.advance()
            nxt = self.tok.kind
            # operator section: (+)
            if nxt in _OP_TOKENS and self.peek().kind == "RPAREN":
                op = _OP_TOKENS[self.advance().kind]
                self.advance()
                return Var(op)
            # negative literal: (-3)
            if nxt == "MINUS" and self.peek().kind in ("INT", "FLOAT"):
                self.advance()
                lit = self.literal()
                self.expect("RPAREN")
                return Const(-lit.value, lit.base)
            inner = self.expr()
            if self.tok.kind == "COMMA":
                self.advance()
                second = self.expr()
                self.expect("RPAREN")
                return Record((("fst", inner), ("snd", second)))
            self.expect("RPAREN")
            return inner
        shown = t.text or "end of input"
        raise self.error(f"unexpected {shown!r}")

    # types
    def scheme(self):
        prefix = []
        while self.tok.kind == "FORALL":
            self.advance()
            v = self.ident()
            self.expect("DCOLON")
            k = self.kind()
            self.expect("DOT")
            prefix.append((v, k))
        body = self.type_()
        return PolyType(tuple(prefix), body) if prefix else body

    def kind(self):
        if self.tok.kind == "IDENT" and self.tok.text == "U":
            self.advance()
            return U
        self.expect("LBRACE")
        self.expect("LBRACE")
        fields = self.type_fields("RBRACE")
        self.expect("RBRACE")
        self.expect("RBRACE")
        return RecordKind(fields)

    def type_fields(self, closer: str):
        fields = []
        seen = set()
        while self.tok.kind != closer:
            lt = self.tok
            lab = self.label()
            if lab in seen:
                raise self.error(f"duplicate label {lab!r}", lt)
            seen.add(lab)
            self.expect("COLON")
            fields.append((lab, self.type_()))
            if self.tok.kind != "COMMA":
                break
            self.advance()
        return fields

    def type_(self) -> MonoType:
        left = self.type_atom()
        if self.tok.kind == "ARROW":
            self.advance()
            return Arrow(left, self.type_())
        return left

    def type_atom(self) -> MonoType:
        t = self.tok
        if t.kind == "IDENT":
            self.advance()
            return Base(t.text) if t.text in BASE_TYPES else TyVar(t.text)
        if t.kind == "LBRACE":
            self.advance()
            fields = self.type_fields("RBRACE")
            if not fields:
                raise self.error("a record type needs at least one field")
            self.expect("RBRACE")
            return RecordType(fields)
        if t.kind == "LBRACK":
            self.advance()
            elem = self.type_()
            self.expect("RBRACK")
            return ListType(elem)
        if t.kind == "LPAREN":
            self.advance()
            inner = self.type_()
            self.expect("RPAREN")
            return inner
        raise self.error(f"unexpected {t.text or 'end of input'!r} in type")


def _annotate(c: Const, base: str, err) -> Const:
    if base not in BASE_TYPES:
        raise err(f"unknown base type {base}")
    if base == c.base:
        return c
    if base == "Float" and c.base == "Int":
        return Const(float(c.value), "Float")
    raise err(f"literal {c.value!r} cannot have type {base}")


def parse(src: str, origin: str = "<input>") -> Term:
    p = _Parser(lex(src, origin), origin)
    t = p.expr()
    if p.tok.kind != "EOF":
        raise p.error(f"unexpected {p.tok.text!r} after end of term")
    return t


def parse_scheme(src: str, origin: str = "<input>"):
    """Parse type syntax: ``forall a::U. forall e::{{l: a}}. e``."""
    p = _Parser(lex(src, origin), origin)
    t = p.scheme()
    if p.tok.kind != "EOF":
        raise p.error(f"unexpected {p.tok.text!r} after end of type")
    return t


def parse_type(src: str, origin: str = "<input>") -> MonoType:
    t = parse_scheme(src, origin)
    if isinstance(t, PolyType):
        raise ParseError("expected a monotype", 1, 1, origin)
    return t


def parse_env(src: str, origin: str = "<input>") -> dict:
    """Typing assumptions, one ``name : scheme`` per line (``--`` comments)."""
    env = {}
    for n, line in enumerate(src.splitlines(), 1):
        text = line.split("--", 1)[0].strip()
        if not text:
            continue
        name, sep, rest = text.partition(":")
        name = name.strip()
        if not sep or not name.isidentifier():
            raise ParseError("expected 'name : type'", n, 1, origin)
        try:
            env[name] = parse_scheme(rest, origin)
        except ParseError as e:
            raise ParseError(e.message, n, line.index(":") + 1 + e.col, origin) from None
    return env


# ---------------------------------------------------------------------------
# pretty printing

_LVL_EXPR, _LVL_APP, _LVL_POST, _LVL_ATOM = 0, 6, 7, 8


def _const(c: Const) -> str:
    v = c.value
    if c.base == "Bool":
        return "true" if v else "false"
    if c.base == "String":
        return json.dumps(v, ensure_ascii=False)
    if c.base == "Int":
        return f"({v})" if v < 0 else str(v)
    if c.base == "Float":
        if math.isnan(v) or math.isinf(v):
            text = repr(v)
        else:
            text = repr(abs(v)) if v != 0 else repr(v).lstrip("-")
            if not any(ch in text for ch in ".e"):
                text += ".0"
            if math.copysign(1.0, v) < 0:
                return f"(-{text})"
        return text
    return f"{v!r}^{c.base}"


def _paren(s: str, inner: int, outer: int) -> str:
    return f"({s})" if inner < outer else s


def pretty(t: Term) -> str:
    """Re-parseable concrete syntax."""
    return _pp(t, _LVL_EXPR)


def _pp(t: Term, need: int) -> str:
    if isinstance(t, Const):
        return _const(t)
    if isinstance(t, Var):
        return f"({t.name})" if t.name in OPERATOR_NAMES else t.name
    if isinstance(t, Abs):
        params = [t.param]
        body = t.body
        while isinstance(body, Abs):
            params.append(body.param)
            body = body.body
        s = "λ" + " ".join(params) + ". " + _pp(body, _LVL_EXPR)
        return _paren(s, _LVL_EXPR, need)
    if isinstance(t, (Let, LetEv, LetRec)):
        kw = {Let: "let", LetEv: "letEv", LetRec: "letrec"}[type(t)]
        params = []
        bound = t.bound
        while isinstance(bound, Abs):
            params.append(bound.param)
            bound = bound.body
        head = " ".join([t.name] + params)
        s = f"{kw} {head} = {_pp(bound, _LVL_EXPR)} in {_pp(t.body, _LVL_EXPR)}"
        return _paren(s, _LVL_EXPR, need)
    if isinstance(t, Cond):
        s = f"if {_pp(t.guard, _LVL_EXPR)} then {_pp(t.then, _LVL_EXPR)} else {_pp(t.orelse, _LVL_EXPR)}"
        return _paren(s, _LVL_EXPR, need)
    if isinstance(t, App):
        f = t.fun
        if isinstance(f, App) and isinstance(f.fun, Var) and f.fun.name in INFIX:
            op = f.fun.name
            lvl = INFIX[op]
            if lvl == 3:
                s = f"{_pp(f.arg, lvl + 1)} {op} {_pp(t.arg, lvl + 1)}"
            else:
                s = f"{_pp(f.arg, lvl)} {op} {_pp(t.arg, lvl + 1)}"
            return _paren(s, lvl, need)
        s = f"{_pp(t.fun, _LVL_APP)} {_pp(t.arg, _LVL_POST)}"
        return _paren(s, _LVL_APP, need)
    if isinstance(t, Select):
        return _paren(f"{_pp(t.subject, _LVL_POST)}.{t.label}", _LVL_POST, need)
    if isinstance(t, Modify):
        return f"modify({_pp(t.subject, _LVL_EXPR)}, {t.label}, {_pp(t.value, _LVL_EXPR)})"
    if isinstance(t, Record):
        labels = [lab for lab, _ in t.fields]
        if labels == ["fst", "snd"]:
            return f"({_pp(t.fields[0][1], _LVL_EXPR)}, {_pp(t.fields[1][1], _LVL_EXPR)})"
        return "{" + ", ".join(f"{lab} = {_pp(m, _LVL_EXPR)}" for lab, m in t.fields) + "}"
    if isinstance(t, ListLit):
        return "[" + ", ".join(_pp(m, _LVL_EXPR) for m in t.items) + "]"
    raise TypeError(t)
