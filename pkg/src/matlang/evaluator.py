"""Big-step evaluation of expressions over an instance."""

from __future__ import annotations

from collections.abc import Mapping

from . import functions
from .config import EvalConfig, FLOAT
from .functions import TowerError
from .matrix import Matrix, ShapeError, eigen_canonical, invert, verify_eigen
from .syntax import (
    Apply, Diag, Eigen, EigenPair, Expr, Inv, Let, MatMul, Ones, Schema, Transpose, Var,
    all_names, fresh_name, functions_used, walk,
)
from .typecheck import check_conformance, induced_schema, typecheck

Instance = Mapping[str, Matrix]


class StuckError(RuntimeError):
    """A runtime side condition failed; unreachable for typechecked input."""


class InvalidBasis(ValueError):
    pass


# -------------------------
# Desugaring
# -------------------------

def recovery_expr(a: str, b: str) -> Expr:
    """Diagonal matrix of the eigenvalues belonging to the columns of ``b``.

    ``A.B`` divided entrywise by ``B`` holds the column's eigenvalue wherever
    ``B`` is nonzero and 0 elsewhere.  Summing each column and dividing by the
    number of nonzero entries of that column of ``B`` leaves the eigenvalue.
    """
    A, B = Var(a), Var(b)
    q = Apply("div", (MatMul(A, B), B))
    row_ones = Transpose(Ones(B))
    sums = MatMul(row_ones, q)
    counts = MatMul(row_ones, Apply("ne0", (B,)))
    lam_row = Apply("div", (sums, counts))
    return Diag(Transpose(Apply("conj", (lam_row,))))


def desugar(e: Expr) -> Expr:
    """Replace every ``let (B, L) = eigen(e) in body`` by plain lets."""
    avoid = set(all_names(e))

    def go(e: Expr) -> Expr:
        match e:
            case Var():
                return e
            case Let(name, value, body):
                return Let(name, go(value), go(body))
            case Transpose(a):
                return Transpose(go(a))
            case Ones(a):
                return Ones(go(a))
            case Diag(a):
                return Diag(go(a))
            case MatMul(l, r):
                return MatMul(go(l), go(r))
            case Apply(fn, args):
                return Apply(fn, tuple(go(x) for x in args))
            case Inv(a):
                return Inv(go(a))
            case Eigen(a):
                return Eigen(go(a))
            case EigenPair(b, d, arg, body):
                a = fresh_name("_eig_arg", avoid)
                avoid.add(a)
                return Let(a, go(arg), Let(b, Eigen(Var(a)), Let(d, recovery_expr(a, b), go(body))))
        raise TypeError(f"not an expression: {e!r}")

    return go(e)


def uses_eigen(e: Expr) -> bool:
    return any(isinstance(n, (Eigen, EigenPair)) for n in walk(e))


def check_tower(e: Expr, cfg: EvalConfig) -> None:
    if not cfg.exact:
        return
    if uses_eigen(e):
        raise TowerError("eigen is not available in the exact tower")
    for fn in sorted(functions_used(e)):
        if functions.is_known(fn) and not functions.lookup(fn).exact:
            raise TowerError(f"{fn} is not available in the exact tower")


# -------------------------
# Evaluation
# -------------------------

def evaluate(inst: Instance, e: Expr, cfg: EvalConfig | None = None,
             schema: Schema | None = None) -> Matrix:
    """Evaluate ``e`` on ``inst``.

    The expression is typechecked first, against ``schema`` (checking that
    ``inst`` conforms) or, if none is given, against the schema induced by the
    instance's dimensions.  ``eigen`` returns the canonical basis.
    """
    cfg = cfg or FLOAT
    if schema is not None:
        check_conformance(schema, inst)
    else:
        schema = induced_schema(inst)
    typecheck(schema, e)
    check_tower(e, cfg)
    env = {name: m.to_tower(cfg.tower) for name, m in inst.items()}
    return _eval(env, desugar(e), cfg)


def _eval(env: dict[str, Matrix], e: Expr, cfg: EvalConfig) -> Matrix:
    match e:
        case Var(name):
            if name not in env:
                raise StuckError(f"unbound variable {name}")
            return env[name]
        case Let(name, value, body):
            return _eval({**env, name: _eval(env, value, cfg)}, body, cfg)
        case Transpose(a):
            return _eval(env, a, cfg).conj_transpose()
        case Ones(a):
            m = _eval(env, a, cfg)
            one = functions.coerce(1, cfg.tower)
            return Matrix(m.rows, 1, (one,) * m.rows)
        case Diag(a):
            v = _eval(env, a, cfg)
            if v.cols != 1:
                raise StuckError(f"diag of a {v.rows}x{v.cols} matrix")
            zero = functions.coerce(0, cfg.tower)
            return Matrix.build(v.rows, v.rows, lambda i, j: v[i, 0] if i == j else zero)
        case MatMul(l, r):
            a, b = _eval(env, l, cfg), _eval(env, r, cfg)
            try:
                return a @ b
            except ShapeError as exc:
                raise StuckError(str(exc)) from None
        case Apply(fn, args):
            f = functions.lookup(fn)
            ms = [_eval(env, x, cfg) for x in args]
            if any(m.shape != ms[0].shape for m in ms):
                raise StuckError(f"apply[{fn}] on shapes {[m.shape for m in ms]}")
            first = ms[0]
            return Matrix(first.rows, first.cols,
                          tuple(f(vals, cfg) for vals in zip(*(m.entries for m in ms))))
        case Inv(a):
            m = _eval(env, a, cfg)
            if m.rows != m.cols:
                raise StuckError(f"inv of a {m.rows}x{m.cols} matrix")
            return invert(m, cfg)
        case Eigen(a):
            m = _eval(env, a, cfg)
            if m.rows != m.cols:
                raise StuckError(f"eigen of a {m.rows}x{m.cols} matrix")
            return eigen_canonical(m, cfg)
    raise TypeError(f"not an expression: {e!r}")


# -------------------------
# Eigenvalue recovery
# -------------------------

def eigenvalues_from_basis(a: Matrix, b: Matrix, cfg: EvalConfig | None = None) -> Matrix:
    """Diagonal matrix of eigenvalues for the columns of the eigenbasis ``b``."""
    cfg = cfg or FLOAT
    if a.shape != b.shape or a.rows != a.cols:
        raise InvalidBasis(f"need equal square shapes, got {a.shape} and {b.shape}")
    if b.is_zero(cfg):
        raise InvalidBasis("the zero matrix is not an eigenbasis")
    return evaluate({"A": a, "B": b}, recovery_expr("A", "B"), cfg)


def is_eigen_result(a: Matrix, b: Matrix, cfg: EvalConfig | None = None) -> bool:
    return verify_eigen(a, b, cfg or FLOAT)
