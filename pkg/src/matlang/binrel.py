"""The algebra of binary relations and its compilation into matrix expressions.

Relations over ``{1..n}`` are represented by their 0/1 adjacency matrices.
Text syntax: ``all``, ``id``, relation names, ``e + e`` (union), ``e - e``
(difference), postfix ``e^`` (converse) and ``e ; e`` (composition).
Converse binds tightest, then composition, then union and difference (left
associative).
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Union

from .config import EvalConfig, FLOAT
from .functions import is_zero
from .matrix import Matrix, ShapeError
from .parser import ParseError
from .syntax import Apply, Diag, Expr, MatMul, MatrixType, Ones, Schema, Sym, Transpose, Var


@dataclass(frozen=True)
class BRVar:
    name: str


@dataclass(frozen=True)
class All:
    pass


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class BRUnion:
    left: BinRelExpr
    right: BinRelExpr


@dataclass(frozen=True)
class BRDifference:
    left: BinRelExpr
    right: BinRelExpr


@dataclass(frozen=True)
class Converse:
    arg: BinRelExpr


@dataclass(frozen=True)
class Compose:
    left: BinRelExpr
    right: BinRelExpr


BinRelExpr = Union[BRVar, All, Identity, BRUnion, BRDifference, Converse, Compose]


class EmptySchema(ValueError):
    pass


def relation_names(e: BinRelExpr) -> frozenset[str]:
    match e:
        case BRVar(name):
            return frozenset([name])
        case All() | Identity():
            return frozenset()
        case Converse(a):
            return relation_names(a)
        case BRUnion(l, r) | BRDifference(l, r) | Compose(l, r):
            return relation_names(l) | relation_names(r)
    raise TypeError(f"not a binary-relation expression: {e!r}")


# -------------------------
# Compilation
# -------------------------

def graph_schema(names: Iterable[str], size: str = "a") -> Schema:
    """Every relation becomes an ``a x a`` matrix variable."""
    t = MatrixType(Sym(size), Sym(size))
    names = sorted(set(names))
    if not names:
        raise EmptySchema("a graph schema needs at least one relation")
    return Schema({n: t for n in names})


def compile_binrel(e: BinRelExpr, relations: Iterable[str]) -> Expr:
    """Matrix expression whose value on adjacency matrices is the adjacency
    matrix of ``e``.

    ``all`` and ``id`` are expressed through the lexicographically first
    relation name in ``relations``.
    """
    rels = sorted(set(relations) | relation_names(e))
    if not rels:
        raise EmptySchema("all and id need some relation variable to take the size from")
    anchor = Var(rels[0])

    def go(e: BinRelExpr) -> Expr:
        match e:
            case BRVar(name):
                return Var(name)
            case All():
                return MatMul(Ones(anchor), Transpose(Ones(anchor)))
            case Identity():
                return Diag(Ones(anchor))
            case BRUnion(l, r):
                return Apply("or", (go(l), go(r)))
            case BRDifference(l, r):
                return Apply("andnot", (go(l), go(r)))
            case Converse(a):
                return Transpose(go(a))
            case Compose(l, r):
                return Apply("gt0", (MatMul(go(l), go(r)),))
        raise TypeError(f"not a binary-relation expression: {e!r}")

    return go(e)


# -------------------------
# Set-theoretic semantics
# -------------------------

@dataclass(frozen=True)
class GraphInstance:
    """Binary relations over the domain ``{1..n}``."""
    n: int
    relations: Mapping[str, frozenset]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a graph instance needs n >= 1")
        rels = {k: frozenset((int(i), int(j)) for i, j in v) for k, v in self.relations.items()}
        for k, v in rels.items():
            if any(not (1 <= i <= self.n and 1 <= j <= self.n) for i, j in v):
                raise ValueError(f"relation {k} leaves the domain 1..{self.n}")
        object.__setattr__(self, "relations", dict(sorted(rels.items())))


def eval_binrel_oracle(gi: GraphInstance, e: BinRelExpr) -> frozenset:
    dom = range(1, gi.n + 1)
    match e:
        case BRVar(name):
            return gi.relations[name]
        case All():
            return frozenset((i, j) for i in dom for j in dom)
        case Identity():
            return frozenset((i, i) for i in dom)
        case BRUnion(l, r):
            return eval_binrel_oracle(gi, l) | eval_binrel_oracle(gi, r)
        case BRDifference(l, r):
            return eval_binrel_oracle(gi, l) - eval_binrel_oracle(gi, r)
        case Converse(a):
            return frozenset((j, i) for i, j in eval_binrel_oracle(gi, a))
        case Compose(l, r):
            left, right = eval_binrel_oracle(gi, l), eval_binrel_oracle(gi, r)
            succ: dict[int, set[int]] = {}
            for j, k in right:
                succ.setdefault(j, set()).add(k)
            return frozenset((i, k) for i, j in left for k in succ.get(j, ()))
    raise TypeError(f"not a binary-relation expression: {e!r}")


def adj_matrix(rel: Iterable[tuple[int, int]], n: int) -> Matrix:
    rel = set(rel)
    return Matrix.build(n, n, lambda i, j: 1 if (i + 1, j + 1) in rel else 0)


def adj_encode(gi: GraphInstance) -> dict[str, Matrix]:
    return {name: adj_matrix(r, gi.n) for name, r in gi.relations.items()}


def adj_decode(m: Matrix, cfg: EvalConfig = FLOAT) -> frozenset:
    """Pairs whose entry is nonzero (beyond ``eps`` in the float tower)."""
    if m.rows != m.cols:
        raise ShapeError(f"adjacency matrix must be square, got {m.rows}x{m.cols}")
    return frozenset((i + 1, j + 1) for i in range(m.rows) for j in range(m.cols)
                     if not is_zero(m[i, j], cfg))


# -------------------------
# Text syntax
# -------------------------

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+;^()]))")


def parse_binrel(text: str) -> BinRelExpr:
    toks: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", 1, pos + 1)
        kind = "name" if m.group("name") else "op"
        toks.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    toks.append(("eof", "", len(text) + 1))
    i = 0

    def peek() -> tuple[str, str, int]:
        return toks[i]

    def take(op: str | None = None):
        nonlocal i
        t = toks[i]
        if op is not None and t[1] != op:
            raise ParseError(f"unexpected {t[1] or 'end of input'!r}", 1, t[2], (repr(op),))
        i += 1
        return t

    def union_level() -> BinRelExpr:
        e = compose_level()
        while peek()[1] in ("+", "-"):
            op = take()[1]
            r = compose_level()
            e = BRUnion(e, r) if op == "+" else BRDifference(e, r)
        return e

    def compose_level() -> BinRelExpr:
        e = postfix()
        while peek()[1] == ";":
            take()
            e = Compose(e, postfix())
        return e

    def postfix() -> BinRelExpr:
        e = atom()
        while peek()[1] == "^":
            take()
            e = Converse(e)
        return e

    def atom() -> BinRelExpr:
        kind, text_, col = peek()
        if kind == "name":
            take()
            return {"all": All(), "id": Identity()}.get(text_, BRVar(text_))
        if text_ == "(":
            take()
            e = union_level()
            take(")")
            return e
        raise ParseError(f"unexpected {text_ or 'end of input'!r}", 1, col,
                         ("relation name", "'all'", "'id'", "'('"))

    e = union_level()
    if peek()[0] != "eof":
        raise ParseError(f"unexpected {peek()[1]!r}", 1, peek()[2], ("end of input",))
    return e


def format_binrel(e: BinRelExpr) -> str:
    """Fully parenthesised text that :func:`parse_binrel` reads back."""
    match e:
        case BRVar(name):
            return name
        case All():
            return "all"
        case Identity():
            return "id"
        case BRUnion(l, r):
            return f"({format_binrel(l)} + {format_binrel(r)})"
        case BRDifference(l, r):
            return f"({format_binrel(l)} - {format_binrel(r)})"
        case Converse(a):
            return f"{format_binrel(a)}^"
        case Compose(l, r):
            return f"({format_binrel(l)} ; {format_binrel(r)})"
    raise TypeError(f"not a binary-relation expression: {e!r}")
