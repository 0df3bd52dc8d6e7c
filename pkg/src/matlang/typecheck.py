"""Size-symbol typechecking and instance conformance."""

from __future__ import annotations

import enum
from collections.abc import Iterator, Mapping

from . import functions
from .syntax import (
    ONE, Apply, Diag, Eigen, EigenPair, Expr, Inv, Let, MatMul, MatrixType, One,
    Ones, Schema, SizeTerm, Sym, Transpose, Var, children,
)


class ErrorKind(enum.Enum):
    UNBOUND_VARIABLE = "UnboundVariable"
    DIAG_ON_NON_VECTOR = "DiagOnNonVector"
    MUL_DIM_MISMATCH = "MulDimMismatch"
    APPLY_SHAPE_MISMATCH = "ApplyShapeMismatch"
    INV_NON_SQUARE = "InvNonSquare"
    EIGEN_NON_SQUARE = "EigenNonSquare"
    UNKNOWN_FUNCTION = "UnknownFunction"
    ARITY_MISMATCH = "ArityMismatch"


STATIC_ONLY = frozenset({ErrorKind.UNBOUND_VARIABLE, ErrorKind.UNKNOWN_FUNCTION,
                         ErrorKind.ARITY_MISMATCH})


class TypeCheckError(Exception):
    def __init__(self, kind: ErrorKind, expr: Expr, terms: tuple = (), detail: str = ""):
        self.kind, self.expr, self.terms = kind, expr, terms
        msg = kind.value
        if terms:
            msg += "(" + ", ".join(str(t) for t in terms) + ")"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


def typecheck(schema: Mapping[str, MatrixType], e: Expr) -> MatrixType:
    """Infer the output type of ``e``; raise :class:`TypeCheckError` otherwise.

    Subexpressions are checked left to right before their parent, so the
    reported error is the leftmost-innermost one.
    """
    env = dict(schema)
    return _check(env, e)


def _check(env: dict[str, MatrixType], e: Expr) -> MatrixType:
    match e:
        case Var(name):
            if name not in env:
                raise TypeCheckError(ErrorKind.UNBOUND_VARIABLE, e, detail=name)
            return env[name]
        case Let(name, value, body):
            t1 = _check(env, value)
            return _check({**env, name: t1}, body)
        case Transpose(a):
            return _check(env, a).transposed()
        case Ones(a):
            return MatrixType(_check(env, a).rows, ONE)
        case Diag(a):
            t = _check(env, a)
            if t.cols != ONE:
                raise TypeCheckError(ErrorKind.DIAG_ON_NON_VECTOR, e, (t.cols, ONE))
            return MatrixType(t.rows, t.rows)
        case MatMul(l, r):
            t1 = _check(env, l)
            t2 = _check(env, r)
            if t1.cols != t2.rows:
                raise TypeCheckError(ErrorKind.MUL_DIM_MISMATCH, e, (t1.cols, t2.rows))
            return MatrixType(t1.rows, t2.cols)
        case Apply(fn, args):
            ts = [_check(env, a) for a in args]
            try:
                f = functions.lookup(fn)
            except functions.UnknownFunction:
                raise TypeCheckError(ErrorKind.UNKNOWN_FUNCTION, e, detail=fn) from None
            if f.arity != len(args):
                raise TypeCheckError(ErrorKind.ARITY_MISMATCH, e,
                                     detail=f"{fn} takes {f.arity}, given {len(args)}")
            for t in ts[1:]:
                if t != ts[0]:
                    bad = (ts[0].rows, t.rows) if t.rows != ts[0].rows else (ts[0].cols, t.cols)
                    raise TypeCheckError(ErrorKind.APPLY_SHAPE_MISMATCH, e, bad)
            return ts[0]
        case Inv(a):
            t = _check(env, a)
            if not t.is_square:
                raise TypeCheckError(ErrorKind.INV_NON_SQUARE, e, (t.rows, t.cols))
            return t
        case Eigen(a):
            t = _check(env, a)
            if not t.is_square:
                raise TypeCheckError(ErrorKind.EIGEN_NON_SQUARE, e, (t.rows, t.cols))
            return t
        case EigenPair(b, d, arg, body):
            t = _check(env, arg)
            if not t.is_square:
                raise TypeCheckError(ErrorKind.EIGEN_NON_SQUARE, e, (t.rows, t.cols))
            return _check({**env, b: t, d: t}, body)
    raise TypeError(f"not an expression: {e!r}")


def subexpression_types(schema: Mapping[str, MatrixType], e: Expr) -> Iterator[tuple[Expr, MatrixType]]:
    """Yield every (subexpression, type) pair of a well-typed expression, post-order."""

    def go(env, e):
        match e:
            case Let(name, value, body):
                t1 = yield from go(env, value)
                t = yield from go({**env, name: t1}, body)
            case EigenPair(b, d, arg, body):
                t1 = yield from go(env, arg)
                t = yield from go({**env, b: t1, d: t1}, body)
            case _:
                for c in children(e):
                    yield from go(env, c)
                t = _check(env, e)
        yield e, t
        return t

    yield from go(dict(schema), e)


# -------------------------
# Conformance
# -------------------------

class SizeAssignment(Mapping[str, int]):
    """Size symbol -> positive natural; ``size(ONE) == 1``."""

    def __init__(self, sizes: Mapping[str, int]):
        d = dict(sizes)
        for k, v in d.items():
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"size of {k!r} must be a positive integer, got {v!r}")
        self._d = {k: d[k] for k in sorted(d)}

    def __getitem__(self, k: str) -> int:
        return self._d[k]

    def __iter__(self):
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def __repr__(self) -> str:
        return f"SizeAssignment({self._d})"

    def size(self, term: SizeTerm) -> int:
        if isinstance(term, One):
            return 1
        return self._d[term.name]

    def dims(self, t: MatrixType) -> tuple[int, int]:
        return self.size(t.rows), self.size(t.cols)

    @classmethod
    def parse(cls, text: str) -> SizeAssignment:
        """``a=3,b=4``."""
        out = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            k, v = part.split("=")
            out[k.strip()] = int(v)
        return cls(out)


class ConformanceError(Exception):
    def __init__(self, variable: str, expected, actual, detail: str = ""):
        self.variable, self.expected, self.actual = variable, expected, actual
        super().__init__(f"{variable}: expected {expected}, got {actual[0]} x {actual[1]}"
                         + (f" ({detail})" if detail else ""))


class VariableSetMismatch(Exception):
    pass


def check_conformance(schema: Mapping[str, MatrixType], inst: Mapping) -> SizeAssignment:
    """Find the size assignment by which ``inst`` conforms to ``schema``."""
    if set(schema) != set(inst):
        raise VariableSetMismatch(
            f"schema declares {sorted(schema)}, instance provides {sorted(inst)}")
    sigma: dict[str, int] = {}
    witness: dict[str, str] = {}
    for name in sorted(schema):
        t = schema[name]
        m = inst[name]
        for term, actual in ((t.rows, m.rows), (t.cols, m.cols)):
            if isinstance(term, One):
                if actual != 1:
                    raise ConformanceError(name, t, (m.rows, m.cols), f"1 vs {actual}")
            elif term.name in sigma and sigma[term.name] != actual:
                raise ConformanceError(
                    name, t, (m.rows, m.cols),
                    f"{term.name} is {sigma[term.name]} from {witness[term.name]}, {actual} here")
            else:
                sigma[term.name] = actual
                witness.setdefault(term.name, name)
    return SizeAssignment(sigma)


def induced_schema(inst: Mapping) -> Schema:
    """The schema naming each dimension ``d<k>`` (and using 1 for unit dimensions).

    Typechecking against it is exactly the runtime dimension check.
    """
    def term(k: int) -> SizeTerm:
        return ONE if k == 1 else Sym(f"d{k}")

    return Schema({name: MatrixType(term(m.rows), term(m.cols)) for name, m in inst.items()})
