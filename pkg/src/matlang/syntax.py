"""Abstract syntax of MATLANG expressions, matrix types and schemas."""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from typing import Union


# -------------------------
# Expressions
# -------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Let:
    name: str
    value: Expr
    body: Expr


@dataclass(frozen=True)
class Transpose:
    arg: Expr


@dataclass(frozen=True)
class Ones:
    arg: Expr


@dataclass(frozen=True)
class Diag:
    arg: Expr


@dataclass(frozen=True)
class MatMul:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Apply:
    fn: str
    args: tuple[Expr, ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("apply needs at least one argument")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Inv:
    arg: Expr


@dataclass(frozen=True)
class Eigen:
    arg: Expr


@dataclass(frozen=True)
class EigenPair:
    """``let (basis, diag) = eigen(arg) in body``."""

    basis: str
    diag: str
    arg: Expr
    body: Expr


Expr = Union[Var, Let, Transpose, Ones, Diag, MatMul, Apply, Inv, Eigen, EigenPair]


def children(e: Expr) -> tuple[Expr, ...]:
    match e:
        case Var():
            return ()
        case Let(_, value, body):
            return (value, body)
        case Transpose(a) | Ones(a) | Diag(a) | Inv(a) | Eigen(a):
            return (a,)
        case MatMul(l, r):
            return (l, r)
        case Apply(_, args):
            return args
        case EigenPair(_, _, arg, body):
            return (arg, body)
    raise TypeError(f"not an expression: {e!r}")


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    yield e
    for c in children(e):
        yield from walk(c)


def size(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def free_vars(e: Expr) -> frozenset[str]:
    match e:
        case Var(name):
            return frozenset([name])
        case Let(name, value, body):
            return free_vars(value) | (free_vars(body) - {name})
        case EigenPair(b, d, arg, body):
            return free_vars(arg) | (free_vars(body) - {b, d})
    return frozenset().union(*(free_vars(c) for c in children(e)))


def functions_used(e: Expr) -> frozenset[str]:
    return frozenset(n.fn for n in walk(e) if isinstance(n, Apply))


def fresh_name(prefix: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    for k in itertools.count(1):
        name = f"{prefix}{k}"
        if name not in avoid:
            return name
    raise AssertionError  # pragma: no cover


def all_names(e: Expr) -> frozenset[str]:
    """Every variable name occurring in ``e``, bound or free."""
    out: set[str] = set()
    for n in walk(e):
        match n:
            case Var(name) | Let(name, _, _):
                out.add(name)
            case EigenPair(b, d, _, _):
                out.update((b, d))
    return frozenset(out)


# -------------------------
# Size terms, types, schemas
# -------------------------

@dataclass(frozen=True)
class Sym:
    name: str

    def __post_init__(self):
        if not self.name or not (self.name[0].isalpha() or self.name[0] == "_"):
            raise ValueError(f"bad size symbol {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class One:
    def __str__(self) -> str:
        return "1"


ONE = One()
SizeTerm = Union[Sym, One]


def size_term(s: str | SizeTerm) -> SizeTerm:
    if isinstance(s, (Sym, One)):
        return s
    return ONE if s == "1" else Sym(s)


@dataclass(frozen=True)
class MatrixType:
    rows: SizeTerm
    cols: SizeTerm

    @classmethod
    def of(cls, rows: str | SizeTerm, cols: str | SizeTerm) -> MatrixType:
        return cls(size_term(rows), size_term(cols))

    @property
    def kind(self) -> str:
        """``general``, ``vector`` or ``scalar``; purely syntactic."""
        r, c = isinstance(self.rows, Sym), isinstance(self.cols, Sym)
        if r and c:
            return "general"
        if r or c:
            return "vector"
        return "scalar"

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def transposed(self) -> MatrixType:
        return MatrixType(self.cols, self.rows)

    def symbols(self) -> set[str]:
        return {t.name for t in (self.rows, self.cols) if isinstance(t, Sym)}

    def __str__(self) -> str:
        return f"{self.rows} x {self.cols}"


class Schema(Mapping[str, MatrixType]):
    """Immutable, nonempty map from matrix variables to types; iterates sorted."""

    def __init__(self, types: Mapping[str, MatrixType] | Iterable[tuple[str, MatrixType]]):
        d = dict(types)
        if not d:
            raise ValueError("a schema must declare at least one variable")
        self._types = {k: d[k] for k in sorted(d)}

    def __getitem__(self, name: str) -> MatrixType:
        return self._types[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._types)

    def __len__(self) -> int:
        return len(self._types)

    def __eq__(self, other) -> bool:
        if isinstance(other, Schema):
            return self._types == other._types
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(self._types.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}: {v}" for k, v in self._types.items())
        return f"Schema({{{inner}}})"

    def extend(self, name: str, t: MatrixType) -> Schema:
        d = dict(self._types)
        d[name] = t
        return Schema(d)

    def symbols(self) -> list[str]:
        out: set[str] = set()
        for t in self._types.values():
            out |= t.symbols()
        return sorted(out)

    @classmethod
    def of(cls, **types: str) -> Schema:
        """``Schema.of(M="a x b", v="a x 1")``."""
        out = {}
        for name, text in types.items():
            r, x, c = text.split()
            if x != "x":
                raise ValueError(f"bad type {text!r}")
            out[name] = MatrixType.of(r, c)
        return cls(out)
