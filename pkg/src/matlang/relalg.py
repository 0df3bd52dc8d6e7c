"""Relational algebra with summation, and the translation from expressions.

Columns are base (``b``, holding domain elements; here positive integers used
as row and column indices) or numerical (``n``, holding scalars).  Column
positions are 1-based throughout, as in the usual algebra notation.

A general m x n matrix is encoded as the ternary relation ``{(i, j, A_ij)}``,
a column or row vector as ``{(i, A_i)}`` and a 1 x 1 matrix as ``{(A_11)}``.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Union

from . import functions
from .config import EXACT, EvalConfig
from .matrix import Matrix
from .scalars import Tower, coerce, format_scalar
from .syntax import (
    ONE, Apply, Diag, Eigen, EigenPair, Expr, Inv, Let, MatMul, MatrixType, Ones, Transpose,
    Var,
)
from .typecheck import SizeAssignment, typecheck

B, N = "b", "n"
RelType = tuple[str, ...]


class RelTypeError(TypeError):
    pass


class UnsupportedConstruct(ValueError):
    """``inv`` and ``eigen`` have no relational counterpart."""


class NotGridTotal(ValueError):
    pass


@dataclass(frozen=True)
class Relation:
    type: RelType
    tuples: frozenset

    def __post_init__(self):
        if not self.type or any(k not in (B, N) for k in self.type):
            raise RelTypeError(f"bad relation type {self.type!r}")
        object.__setattr__(self, "tuples", frozenset(tuple(t) for t in self.tuples))
        for t in self.tuples:
            if len(t) != len(self.type):
                raise RelTypeError(f"tuple {t!r} does not match type {self.type!r}")

    def __len__(self) -> int:
        return len(self.tuples)

    def sorted(self) -> list[tuple]:
        return sorted(self.tuples, key=lambda t: tuple(
            (x, 0) if k == B else (complex(x).real, complex(x).imag) for x, k in zip(t, self.type)))


# -------------------------
# Expressions
# -------------------------

@dataclass(frozen=True)
class RelVar:
    name: str


@dataclass(frozen=True)
class RelUnion:
    left: RelExpr
    right: RelExpr


@dataclass(frozen=True)
class Difference:
    left: RelExpr
    right: RelExpr


@dataclass(frozen=True)
class Product:
    left: RelExpr
    right: RelExpr


@dataclass(frozen=True)
class Select:
    """Keep tuples whose base columns ``i`` and ``j`` are equal (or unequal)."""
    i: int
    j: int
    equal: bool
    arg: RelExpr


@dataclass(frozen=True)
class Project:
    cols: tuple[int, ...]
    arg: RelExpr


@dataclass(frozen=True)
class ApplyFn:
    """Append the column ``fn(t[c] for c in cols)``; ``const:`` functions
    may take zero columns."""
    fn: str
    cols: tuple[int, ...]
    arg: RelExpr


@dataclass(frozen=True)
class Sum:
    """Group by base columns ``group`` and sum numerical column ``col``."""
    col: int
    group: tuple[int, ...]
    arg: RelExpr


RelExpr = Union[RelVar, RelUnion, Difference, Product, Select, Project, ApplyFn, Sum]


def rel_children(e: RelExpr) -> tuple[RelExpr, ...]:
    match e:
        case RelVar():
            return ()
        case RelUnion(l, r) | Difference(l, r) | Product(l, r):
            return (l, r)
        case Select(_, _, _, a) | Project(_, a) | ApplyFn(_, _, a) | Sum(_, _, a):
            return (a,)
    raise TypeError(f"not a relational expression: {e!r}")


def rel_walk(e: RelExpr):
    yield e
    for c in rel_children(e):
        yield from rel_walk(c)


# -------------------------
# Typing
# -------------------------

def _col(t: RelType, c: int, what: str) -> str:
    if not 1 <= c <= len(t):
        raise RelTypeError(f"{what}: column {c} out of range for type {t}")
    return t[c - 1]


def _fn_arity_ok(fn: str, n: int) -> bool:
    if fn.startswith(functions.CONST_PREFIX):
        return n <= 1 and functions.is_known(fn)
    return functions.is_known(fn) and functions.lookup(fn).arity == n


def rel_type(schema: Mapping[str, RelType], e: RelExpr) -> RelType:
    match e:
        case RelVar(name):
            if name not in schema:
                raise RelTypeError(f"unknown relation {name}")
            return tuple(schema[name])
        case RelUnion(l, r) | Difference(l, r):
            t1, t2 = rel_type(schema, l), rel_type(schema, r)
            if t1 != t2:
                raise RelTypeError(f"set operation on types {t1} and {t2}")
            return t1
        case Product(l, r):
            return rel_type(schema, l) + rel_type(schema, r)
        case Select(i, j, _, a):
            t = rel_type(schema, a)
            if _col(t, i, "select") != B or _col(t, j, "select") != B:
                raise RelTypeError(f"selection on non-base column in {t}")
            return t
        case Project(cols, a):
            t = rel_type(schema, a)
            if not cols:
                raise RelTypeError("projection onto no columns")
            return tuple(_col(t, c, "project") for c in cols)
        case ApplyFn(fn, cols, a):
            t = rel_type(schema, a)
            if any(_col(t, c, "apply") != N for c in cols):
                raise RelTypeError(f"apply[{fn}] on non-numerical column of {t}")
            if not _fn_arity_ok(fn, len(cols)):
                raise RelTypeError(f"apply[{fn}] with {len(cols)} columns")
            return t + (N,)
        case Sum(col, group, a):
            t = rel_type(schema, a)
            if _col(t, col, "sum") != N:
                raise RelTypeError(f"sum over non-numerical column {col} of {t}")
            if any(_col(t, g, "sum") != B for g in group):
                raise RelTypeError(f"grouping on non-base column of {t}")
            return tuple(B for _ in group) + (N,)
    raise TypeError(f"not a relational expression: {e!r}")


# -------------------------
# Evaluation
# -------------------------

def eval_rel(ri: Mapping[str, Relation], e: RelExpr, cfg: EvalConfig = EXACT) -> Relation:
    rel_type({k: r.type for k, r in ri.items()}, e)
    return _ev(ri, e, cfg)


def _ev(ri, e: RelExpr, cfg: EvalConfig) -> Relation:
    match e:
        case RelVar(name):
            return ri[name]
        case RelUnion(l, r):
            a, b = _ev(ri, l, cfg), _ev(ri, r, cfg)
            return Relation(a.type, a.tuples | b.tuples)
        case Difference(l, r):
            a, b = _ev(ri, l, cfg), _ev(ri, r, cfg)
            return Relation(a.type, a.tuples - b.tuples)
        case Product(l, r):
            a, b = _ev(ri, l, cfg), _ev(ri, r, cfg)
            return Relation(a.type + b.type, frozenset(s + t for s in a.tuples for t in b.tuples))
        case Select(i, j, equal, arg):
            a = _ev(ri, arg, cfg)
            return Relation(a.type, frozenset(t for t in a.tuples if (t[i - 1] == t[j - 1]) == equal))
        case Project(cols, arg):
            a = _ev(ri, arg, cfg)
            return Relation(tuple(a.type[c - 1] for c in cols),
                            frozenset(tuple(t[c - 1] for c in cols) for t in a.tuples))
        case ApplyFn(fn, cols, arg):
            a = _ev(ri, arg, cfg)
            if fn.startswith(functions.CONST_PREFIX):
                v = functions.apply_const(fn, cfg.tower)
                return Relation(a.type + (N,), frozenset(t + (v,) for t in a.tuples))
            f = functions.lookup(fn)
            return Relation(a.type + (N,), frozenset(
                t + (f([t[c - 1] for c in cols], cfg),) for t in a.tuples))
        case Sum(col, group, arg):
            a = _ev(ri, arg, cfg)
            sums: dict[tuple, object] = {}
            for t in a.tuples:
                key = tuple(t[g - 1] for g in group)
                sums[key] = sums.get(key, coerce(0, cfg.tower)) + t[col - 1]
            if not group and not sums:
                sums[()] = coerce(0, cfg.tower)
            return Relation(tuple(B for _ in group) + (N,),
                            frozenset(k + (v,) for k, v in sums.items()))
    raise TypeError(f"not a relational expression: {e!r}")


# -------------------------
# Encoding matrices as relations
# -------------------------

def rel_of_type(t: MatrixType) -> RelType:
    return {"general": (B, B, N), "vector": (B, N), "scalar": (N,)}[t.kind]


def rel_schema(schema: Mapping[str, MatrixType]) -> dict[str, RelType]:
    return {name: rel_of_type(t) for name, t in schema.items()}


def encode_matrix(m: Matrix, t: MatrixType, tower: Tower = Tower.EXACT) -> Relation:
    c = lambda x: coerce(x, tower)  # noqa: E731
    match t.kind:
        case "general":
            tuples = {(i + 1, j + 1, c(m[i, j])) for i in range(m.rows) for j in range(m.cols)}
        case "vector":
            if t.cols == ONE:
                tuples = {(i + 1, c(m[i, 0])) for i in range(m.rows)}
            else:
                tuples = {(j + 1, c(m[0, j])) for j in range(m.cols)}
        case _:
            tuples = {(c(m[0, 0]),)}
    return Relation(rel_of_type(t), frozenset(tuples))


def rel_encode(inst: Mapping[str, Matrix], schema: Mapping[str, MatrixType],
               tower: Tower = Tower.EXACT) -> dict[str, Relation]:
    return {name: encode_matrix(inst[name], schema[name], tower) for name in schema}


def rel_decode(r: Relation, t: MatrixType, sigma: SizeAssignment) -> Matrix:
    """Inverse of :func:`encode_matrix`; the relation must hold exactly one
    tuple per index combination."""
    rows, cols = sigma.dims(t)
    if r.type != rel_of_type(t):
        raise NotGridTotal(f"relation type {r.type} does not encode {t}")
    cells: dict[tuple[int, int], object] = {}
    for tup in r.tuples:
        match t.kind:
            case "general":
                key, v = (tup[0], tup[1]), tup[2]
            case "vector":
                key, v = ((tup[0], 1) if t.cols == ONE else (1, tup[0])), tup[1]
            case _:
                key, v = (1, 1), tup[0]
        if key in cells:
            raise NotGridTotal(f"two tuples for index {key}")
        if not (isinstance(key[0], int) and isinstance(key[1], int)
                and 1 <= key[0] <= rows and 1 <= key[1] <= cols):
            raise NotGridTotal(f"index {key} outside {rows}x{cols}")
        cells[key] = v
    if len(cells) != rows * cols:
        raise NotGridTotal(f"{len(cells)} tuples for a {rows}x{cols} matrix")
    return Matrix.build(rows, cols, lambda i, j: cells[i + 1, j + 1])


# -------------------------
# Translation
# -------------------------

def _shape(t: MatrixType) -> str:
    """G (general), C (column vector), R (row vector) or S (scalar)."""
    if t.kind == "general":
        return "G"
    if t.kind == "scalar":
        return "S"
    return "C" if t.cols == ONE else "R"


def translate(schema: Mapping[str, MatrixType], e: Expr) -> RelExpr:
    """Relational expression computing the encoding of ``e``'s result from the
    encoding of the input.

    The plan uses no set difference and selects only on base columns; its
    functions are those of ``e`` plus ``conj``, ``mul``, and the constants 0
    and 1.  ``let`` is expanded by substitution.
    """
    typecheck(schema, e)
    return _tr(dict(schema), {}, e)


def _tr(types: dict[str, MatrixType], env: dict[str, RelExpr], e: Expr) -> RelExpr:
    match e:
        case Var(name):
            return env.get(name, RelVar(name))
        case Let(name, value, body):
            v = _tr(types, env, value)
            t = typecheck(types, value)
            return _tr({**types, name: t}, {**env, name: v}, body)
        case Transpose(a):
            r = _tr(types, env, a)
            match _shape(typecheck(types, a)):
                case "G":
                    return Project((1, 2, 4), ApplyFn("conj", (3,), Project((2, 1, 3), r)))
                case "C" | "R":
                    return Project((1, 3), ApplyFn("conj", (2,), r))
                case _:
                    return Project((2,), ApplyFn("conj", (1,), r))
        case Ones(a):
            r = _tr(types, env, a)
            match _shape(typecheck(types, a)):
                case "G" | "C":
                    return ApplyFn(functions.const_name(1), (), Project((1,), r))
                case "R":
                    return Project((3,), ApplyFn(functions.const_name(1), (2,), r))
                case _:
                    return Project((2,), ApplyFn(functions.const_name(1), (1,), r))
        case Diag(a):
            r = _tr(types, env, a)
            if _shape(typecheck(types, a)) == "S":
                return r
            idx = Project((1,), r)
            return RelUnion(Select(1, 2, True, Product(idx, r)),
                          ApplyFn(functions.const_name(0), (), Select(1, 2, False, Product(idx, idx))))
        case MatMul(left, right):
            return _tr_matmul(_shape(typecheck(types, left)), _shape(typecheck(types, right)),
                              _tr(types, env, left), _tr(types, env, right))
        case Apply(fn, args):
            rs = [_tr(types, env, x) for x in args]
            return _tr_apply(fn, _shape(typecheck(types, args[0])), rs)
        case Inv() | Eigen() | EigenPair():
            raise UnsupportedConstruct(f"{type(e).__name__.lower()} has no relational translation")
    raise TypeError(f"not an expression: {e!r}")


def _tr_matmul(s1: str, s2: str, m: RelExpr, n: RelExpr) -> RelExpr:
    mul = "mul"
    prod = Product(m, n)
    match s1, s2:
        case "G", "G":   # (i,j,v) x (j,k,w)
            return Sum(7, (1, 5), ApplyFn(mul, (3, 6), Select(2, 4, True, prod)))
        case "G", "C":   # (i,j,v) x (j,w)
            return Sum(6, (1,), ApplyFn(mul, (3, 5), Select(2, 4, True, prod)))
        case "R", "G":   # (j,v) x (j,k,w)
            return Sum(6, (4,), ApplyFn(mul, (2, 5), Select(1, 3, True, prod)))
        case "R", "C":   # (j,v) x (j,w)
            return Sum(5, (), ApplyFn(mul, (2, 4), Select(1, 3, True, prod)))
        case "C", "R":   # (i,v) x (k,w): outer product
            return Project((1, 3, 5), ApplyFn(mul, (2, 4), prod))
        case "C", "S":   # (i,v) x (w)
            return Project((1, 4), ApplyFn(mul, (2, 3), prod))
        case "S", "R":   # (v) x (k,w)
            return Project((2, 4), ApplyFn(mul, (1, 3), prod))
        case "S", "S":
            return Project((3,), ApplyFn(mul, (1, 2), prod))
    raise AssertionError(f"ill-typed product of shapes {s1}, {s2}")


def _tr_apply(fn: str, shape: str, rs: list[RelExpr]) -> RelExpr:
    width = {"G": 3, "C": 2, "R": 2, "S": 1}[shape]
    keys = width - 1
    joined = rs[0]
    for r in rs[1:]:
        joined = Product(joined, r)
    for k in range(1, len(rs)):
        for c in range(1, keys + 1):
            joined = Select(c, k * width + c, True, joined)
    vals = tuple(k * width + width for k in range(len(rs)))
    out = len(rs) * width + 1
    return Project(tuple(range(1, keys + 1)) + (out,), ApplyFn(fn, vals, joined))


def uses_difference(e: RelExpr) -> bool:
    return any(isinstance(n, Difference) for n in rel_walk(e))


def selects_numerical(schema: Mapping[str, RelType], e: RelExpr) -> bool:
    """Does any selection in ``e`` compare a numerical column?"""
    for n in rel_walk(e):
        if isinstance(n, Select):
            t = rel_type(schema, n.arg)
            if t[n.i - 1] != B or t[n.j - 1] != B:
                return True
    return False


def rel_functions(e: RelExpr) -> frozenset[str]:
    return frozenset(n.fn for n in rel_walk(e) if isinstance(n, ApplyFn))


# -------------------------
# Printing
# -------------------------

def _cols(cs) -> str:
    return ",".join(str(c) for c in cs)


def format_rel(e: RelExpr) -> str:
    match e:
        case RelVar(name):
            return name
        case RelUnion(l, r):
            return f"({format_rel(l)} ∪ {format_rel(r)})"
        case Difference(l, r):
            return f"({format_rel(l)} − {format_rel(r)})"
        case Product(l, r):
            return f"({format_rel(l)} × {format_rel(r)})"
        case Select(i, j, eq, a):
            return f"σ[${i}{'=' if eq else '≠'}${j}]({format_rel(a)})"
        case Project(cols, a):
            return f"π[{_cols(cols)}]({format_rel(a)})"
        case ApplyFn(fn, cols, a):
            return f"Apply[{fn};{_cols(cols)}]({format_rel(a)})"
        case Sum(col, group, a):
            return f"Sum[{col};{_cols(group)}]({format_rel(a)})"
    raise TypeError(f"not a relational expression: {e!r}")


def format_relation(r: Relation) -> str:
    def cell(x, k):
        return str(x) if k == B else format_scalar(x)

    head = ",".join(r.type)
    return head + "\n" + "".join(",".join(cell(x, k) for x, k in zip(t, r.type)) + "\n"
                                 for t in r.sorted())

