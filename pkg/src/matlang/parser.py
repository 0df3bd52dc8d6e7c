"""Concrete text syntax: parser and pretty-printer for programs and schemas.

Program grammar::

    expr   := 'let' IDENT '=' expr 'in' expr
            | 'let' '(' IDENT ',' IDENT ')' '=' 'eigen' '(' expr ')' 'in' expr
            | term
    term   := factor { '.' factor }
    factor := base { '^*' }
    base   := IDENT | 'ones' '(' expr ')' | 'diag' '(' expr ')'
            | 'inv' '(' expr ')' | 'eigen' '(' expr ')'
            | 'apply' '[' FNNAME ']' '(' expr { ',' expr } ')' | '(' expr ')'

Schema files hold lines ``IDENT : sizeterm x sizeterm``; ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    Apply, Diag, Eigen, EigenPair, Expr, Inv, Let, MatMul, MatrixType, Ones,
    Schema, Transpose, Var, size_term,
)

KEYWORDS = frozenset({"let", "in", "ones", "diag", "inv", "eigen", "apply"})
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
FNNAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|const:[^\s\]]+")


class ParseError(Exception):
    """A syntax error at a 1-based line/column."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.line, self.col, self.expected = line, col, expected
        detail = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{col}: {message}{detail}")


class DuplicateVariable(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str   # IDENT, KW, FN, PUNCT, EOF
    text: str
    line: int
    col: int


_PUNCT = ("^*", "=", "(", ")", ",", ".")


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    i, line, col = 0, 1, 1

    def adv(n: int):
        nonlocal i, line, col
        for ch in src[i:i + n]:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        i += n

    while i < len(src):
        ch = src[i]
        if ch.isspace():
            adv(1)
            continue
        if ch == "#":
            j = src.find("\n", i)
            adv((len(src) if j < 0 else j) - i)
            continue
        if ch == "[":
            j = src.find("]", i)
            if j < 0:
                raise ParseError("unterminated function name", line, col, ("']'",))
            name = src[i + 1:j].strip()
            if not FNNAME_RE.fullmatch(name):
                raise ParseError(f"bad function name {name!r}", line, col + 1, ("FNNAME",))
            out.append(Token("FN", name, line, col))
            adv(j + 1 - i)
            continue
        m = IDENT_RE.match(src, i)
        if m:
            word = m.group()
            out.append(Token("KW" if word in KEYWORDS else "IDENT", word, line, col))
            adv(len(word))
            continue
        for p in _PUNCT:
            if src.startswith(p, i):
                out.append(Token("PUNCT", p, line, col))
                adv(len(p))
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    out.append(Token("EOF", "", line, col))
    return out


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def fail(self, *expected: str):
        t = self.tok
        what = "end of input" if t.kind == "EOF" else repr(t.text)
        raise ParseError(f"unexpected {what}", t.line, t.col, expected)

    def is_(self, text: str) -> bool:
        return self.tok.kind in ("PUNCT", "KW") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.is_(text):
            self.fail(repr(text))
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> str:
        if self.tok.kind != "IDENT":
            self.fail("identifier")
        t = self.tok
        self.pos += 1
        return t.text

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "EOF":
            self.fail("end of input", "'.'", "'^*'")
        return e

    def expr(self) -> Expr:
        if self.is_("let"):
            self.pos += 1
            if self.is_("("):
                self.pos += 1
                b = self.ident()
                self.expect(",")
                d = self.ident()
                self.expect(")")
                self.expect("=")
                self.expect("eigen")
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                self.expect("in")
                return EigenPair(b, d, arg, self.expr())
            name = self.ident()
            self.expect("=")
            value = self.expr()
            self.expect("in")
            return Let(name, value, self.expr())
        return self.term()

    def term(self) -> Expr:
        e = self.factor()
        while self.is_("."):
            self.pos += 1
            e = MatMul(e, self.factor())
        return e

    def factor(self) -> Expr:
        e = self.base()
        while self.is_("^*"):
            self.pos += 1
            e = Transpose(e)
        return e

    def base(self) -> Expr:
        t = self.tok
        if t.kind == "IDENT":
            self.pos += 1
            return Var(t.text)
        if t.kind == "KW" and t.text in _UNARY:
            self.pos += 1
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return _UNARY[t.text](arg)
        if self.is_("apply"):
            self.pos += 1
            if self.tok.kind != "FN":
                self.fail("'[' FNNAME ']'")
            fn = self.tok.text
            self.pos += 1
            self.expect("(")
            args = [self.expr()]
            while self.is_(","):
                self.pos += 1
                args.append(self.expr())
            self.expect(")")
            return Apply(fn, tuple(args))
        if self.is_("("):
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        self.fail("identifier", "'ones'", "'diag'", "'inv'", "'eigen'", "'apply'", "'('", "'let'")


_UNARY = {"ones": Ones, "diag": Diag, "inv": Inv, "eigen": Eigen}


def parse(text: str) -> Expr:
    return _Parser(text).parse()


# -------------------------
# Pretty printing
# -------------------------

_EXPR, _TERM, _FACTOR = 0, 1, 2


def pretty_print(e: Expr) -> str:
    return _pp(e, _EXPR)


def _pp(e: Expr, ctx: int) -> str:
    match e:
        case Var(name):
            return name
        case Let(name, value, body):
            s = f"let {name} = {_pp(value, _TERM)} in {_pp(body, _EXPR)}"
            return s if ctx == _EXPR else f"({s})"
        case EigenPair(b, d, arg, body):
            s = f"let ({b}, {d}) = eigen({_pp(arg, _EXPR)}) in {_pp(body, _EXPR)}"
            return s if ctx == _EXPR else f"({s})"
        case MatMul(l, r):
            s = f"{_pp(l, _TERM)} . {_pp(r, _FACTOR)}"
            return f"({s})" if ctx == _FACTOR else s
        case Transpose(a):
            return f"{_pp(a, _FACTOR)}^*"
        case Ones(a):
            return f"ones({_pp(a, _EXPR)})"
        case Diag(a):
            return f"diag({_pp(a, _EXPR)})"
        case Inv(a):
            return f"inv({_pp(a, _EXPR)})"
        case Eigen(a):
            return f"eigen({_pp(a, _EXPR)})"
        case Apply(fn, args):
            return f"apply[{fn}](" + ", ".join(_pp(a, _EXPR) for a in args) + ")"
    raise TypeError(f"not an expression: {e!r}")


# -------------------------
# Schema files
# -------------------------

_SCHEMA_LINE = re.compile(
    r"^\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*:\s*(?P<r>[A-Za-z_][A-Za-z0-9_]*|1)\s+x\s+"
    r"(?P<c>[A-Za-z_][A-Za-z0-9_]*|1)\s*$"
)


def parse_schema(text: str) -> Schema:
    types: dict[str, MatrixType] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = _SCHEMA_LINE.match(line)
        if not m:
            col = len(line) - len(line.lstrip()) + 1
            raise ParseError(f"bad schema line {raw.strip()!r}", lineno, col,
                             ("IDENT ':' sizeterm 'x' sizeterm",))
        name = m.group("name")
        if name in types:
            raise DuplicateVariable(f"line {lineno}: variable {name!r} declared twice")
        types[name] = MatrixType(size_term(m.group("r")), size_term(m.group("c")))
    if not types:
        raise ParseError("empty schema", 1, 1, ("IDENT",))
    return Schema(types)


def format_schema(schema: Schema) -> str:
    return "".join(f"{name} : {t}\n" for name, t in schema.items())
