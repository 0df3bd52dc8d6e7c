"""Existential formulas over the reals describing an expression's input-output
relation for fixed dimensions.

Every complex entry is a pair of real variables: ``x_M_i_j_re``/``x_M_i_j_im``
for input matrix ``M`` and ``y_i_j_re``/``y_i_j_im`` for the output (indices
1-based).  Each operation that needs fresh entries introduces them under an
existential quantifier.  Every quantifier block carries a *witness*: a
function computing values for its variables from the values of the variables
in scope, using the evaluator.  :func:`ground_check` substitutes witnesses and
evaluates the quantifier-free remainder, so emitted formulas can be checked
without a solver.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from . import functions
from .config import EvalConfig, EXACT, FLOAT
from .evaluator import check_tower, desugar, evaluate
from .functions import TowerError
from .matrix import Matrix, diagonalizable, eigen_canonical, invert, null_vector
from .scalars import GaussianRational, Tower
from .syntax import (
    Apply, Diag, Eigen, Expr, Inv, Let, MatMul, Ones, Schema, Transpose, Var,
)
from .typecheck import SizeAssignment, typecheck


class MissingFnDef(KeyError):
    pass


class MissingWitness(LookupError):
    pass


class FreeVariableEscape(ValueError):
    pass


# -------------------------
# Terms
# -------------------------

@dataclass(frozen=True)
class RVar:
    name: str


@dataclass(frozen=True)
class RConst:
    value: Fraction


@dataclass(frozen=True)
class RAdd:
    terms: tuple


@dataclass(frozen=True)
class RMul:
    terms: tuple


Term = Union[RVar, RConst, RAdd, RMul]

ZERO, ONE_T, MINUS_ONE = RConst(Fraction(0)), RConst(Fraction(1)), RConst(Fraction(-1))


def const(v) -> RConst:
    return RConst(Fraction(v))


def add(*ts: Term) -> Term:
    flat: list[Term] = []
    c = Fraction(0)
    for t in ts:
        for u in (t.terms if isinstance(t, RAdd) else (t,)):
            if isinstance(u, RConst):
                c += u.value
            else:
                flat.append(u)
    if c:
        flat.append(RConst(c))
    if not flat:
        return ZERO
    return flat[0] if len(flat) == 1 else RAdd(tuple(flat))


def mul(*ts: Term) -> Term:
    flat: list[Term] = []
    c = Fraction(1)
    for t in ts:
        for u in (t.terms if isinstance(t, RMul) else (t,)):
            if isinstance(u, RConst):
                c *= u.value
            else:
                flat.append(u)
    if c == 0:
        return ZERO
    if c != 1:
        flat.insert(0, RConst(c))
    if not flat:
        return ONE_T
    return flat[0] if len(flat) == 1 else RMul(tuple(flat))


def neg(t: Term) -> Term:
    return mul(MINUS_ONE, t)


def sub(a: Term, b: Term) -> Term:
    return add(a, neg(b))


# -------------------------
# Formulas
# -------------------------

@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Lt:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class Bool:
    value: bool


Witness = Callable[[Mapping[str, object]], Mapping[str, object] | None]


@dataclass(frozen=True)
class Exists:
    vars: tuple[str, ...]
    body: Formula
    witness: Witness | None = field(default=None, compare=False, repr=False)


Formula = Union[Eq, Lt, And, Or, Bool, Exists]
TRUE, FALSE = Bool(True), Bool(False)


def eq(a: Term, b: Term) -> Formula:
    if isinstance(a, RConst) and isinstance(b, RConst):
        return Bool(a.value == b.value)
    return Eq(a, b)


def lt(a: Term, b: Term) -> Formula:
    if isinstance(a, RConst) and isinstance(b, RConst):
        return Bool(a.value < b.value)
    return Lt(a, b)


def ne(a: Term, b: Term) -> Formula:
    return disj(lt(a, b), lt(b, a))


def le(a: Term, b: Term) -> Formula:
    return disj(lt(a, b), eq(a, b))


def conj(*fs: Formula) -> Formula:
    out: list[Formula] = []
    for f in fs:
        if isinstance(f, Bool):
            if not f.value:
                return FALSE
            continue
        out.extend(f.parts if isinstance(f, And) else (f,))
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(*fs: Formula) -> Formula:
    out: list[Formula] = []
    for f in fs:
        if isinstance(f, Bool):
            if f.value:
                return TRUE
            continue
        out.extend(f.parts if isinstance(f, Or) else (f,))
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def negate(f: Formula) -> Formula:
    """Negation of a quantifier-free formula, pushed to the atoms."""
    match f:
        case Eq(a, b):
            return ne(a, b)
        case Lt(a, b):
            return le(b, a)
        case And(parts):
            return disj(*(negate(p) for p in parts))
        case Or(parts):
            return conj(*(negate(p) for p in parts))
        case Bool(v):
            return Bool(not v)
    raise ValueError("only quantifier-free formulas can be negated")


def term_vars(t: Term) -> frozenset[str]:
    match t:
        case RVar(name):
            return frozenset([name])
        case RConst():
            return frozenset()
        case RAdd(ts) | RMul(ts):
            return frozenset().union(*(term_vars(u) for u in ts))
    raise TypeError(f"not a term: {t!r}")


def free_variables(f: Formula) -> frozenset[str]:
    match f:
        case Eq(a, b) | Lt(a, b):
            return term_vars(a) | term_vars(b)
        case And(ps) | Or(ps):
            return frozenset().union(*(free_variables(p) for p in ps))
        case Bool():
            return frozenset()
        case Exists(vs, body, _):
            return free_variables(body) - set(vs)
    raise TypeError(f"not a formula: {f!r}")


def _term_size(t: Term) -> int:
    if isinstance(t, (RAdd, RMul)):
        return 1 + sum(_term_size(u) for u in t.terms)
    return 1


def formula_size(f: Formula) -> int:
    """Number of term and formula nodes."""
    match f:
        case Eq(a, b) | Lt(a, b):
            return 1 + _term_size(a) + _term_size(b)
        case And(ps) | Or(ps):
            return 1 + sum(formula_size(p) for p in ps)
        case Bool():
            return 1
        case Exists(vs, body, _):
            return 1 + len(vs) + formula_size(body)
    raise TypeError(f"not a formula: {f!r}")


# -------------------------
# Complex entries as pairs of real terms
# -------------------------

CTerm = tuple[Term, Term]
CMat = list[list[CTerm]]
C_ZERO: CTerm = (ZERO, ZERO)
C_ONE: CTerm = (ONE_T, ZERO)


def cconst(z) -> CTerm:
    z = GaussianRational.coerce(z)
    return (RConst(z.re), RConst(z.im))


def cadd(a: CTerm, b: CTerm) -> CTerm:
    return add(a[0], b[0]), add(a[1], b[1])


def csub(a: CTerm, b: CTerm) -> CTerm:
    return sub(a[0], b[0]), sub(a[1], b[1])


def cmul(a: CTerm, b: CTerm) -> CTerm:
    return (sub(mul(a[0], b[0]), mul(a[1], b[1])),
            add(mul(a[0], b[1]), mul(a[1], b[0])))


def cconj(a: CTerm) -> CTerm:
    return a[0], neg(a[1])


def ceq(a: CTerm, b: CTerm) -> Formula:
    return conj(eq(a[0], b[0]), eq(a[1], b[1]))


def cne(a: CTerm, b: CTerm) -> Formula:
    return disj(ne(a[0], b[0]), ne(a[1], b[1]))


def czero(a: CTerm) -> Formula:
    return ceq(a, C_ZERO)


def cne0(a: CTerm) -> Formula:
    return cne(a, C_ZERO)


def creal(a: CTerm) -> Formula:
    return eq(a[1], ZERO)


def csum(ts: Iterable[CTerm]) -> CTerm:
    ts = list(ts)
    return add(*(t[0] for t in ts)), add(*(t[1] for t in ts))


def var_matrix(prefix: str, rows: int, cols: int) -> CMat:
    return [[(RVar(f"{prefix}_{i}_{j}_re"), RVar(f"{prefix}_{i}_{j}_im"))
             for j in range(1, cols + 1)] for i in range(1, rows + 1)]


def var_vector(prefix: str, n: int) -> list[CTerm]:
    return [(RVar(f"{prefix}_{i}_re"), RVar(f"{prefix}_{i}_im")) for i in range(1, n + 1)]


def mat_names(m: CMat) -> list[str]:
    return [t.name for row in m for pair in row for t in pair]


def mat_mul(a: CMat, b: CMat) -> CMat:
    inner = len(b)
    return [[csum(cmul(a[i][k], b[k][j]) for k in range(inner)) for j in range(len(b[0]))]
            for i in range(len(a))]


def mat_eq(a: CMat, b: CMat) -> Formula:
    return conj(*(ceq(x, y) for ra, rb in zip(a, b) for x, y in zip(ra, rb)))


def mat_zero(a: CMat) -> Formula:
    return conj(*(czero(x) for row in a for x in row))


def identity_cmat(n: int) -> CMat:
    return [[C_ONE if i == j else C_ZERO for j in range(n)] for i in range(n)]


# -------------------------
# Pointwise functions as quantifier-free definitions
# -------------------------

@dataclass(frozen=True)
class SemiAlgebraicFnDef:
    """``define(args, out)`` is a quantifier-free formula that holds exactly
    when ``out`` is the function's value on ``args``."""
    name: str
    arity: int
    define: Callable[[list[CTerm], CTerm], Formula]


def _cases(cond: Formula, out: CTerm, then: CTerm, otherwise: CTerm = C_ZERO) -> Formula:
    return disj(conj(cond, ceq(out, then)), conj(negate(cond), ceq(out, otherwise)))


def _real_pair(x: CTerm, y: CTerm) -> Formula:
    return conj(creal(x), creal(y))


def _def_div(args, out):
    x, y = args
    return disj(conj(czero(y), czero(out)), conj(cne0(y), ceq(cmul(out, y), x)))


def _def_recip(args, out):
    (x,) = args
    return disj(conj(czero(x), czero(out)), conj(cne0(x), ceq(cmul(out, x), C_ONE)))


def _def_recip_succ(args, out):
    return _def_recip([cadd(args[0], C_ONE)], out)


def _def_monus(args, out):
    x, y = args
    return _cases(conj(_real_pair(x, y), lt(y[0], x[0])), out, (sub(x[0], y[0]), ZERO))


def _bool_def(cond_of):
    return lambda args, out: _cases(cond_of(*args), out, C_ONE)


def _def_div_sqrt(args, out):
    x, y = args
    cond = conj(creal(y), lt(ZERO, y[0]))
    # out = x / s with s > 0 and s^2 = y: same signs as x, squares scaled by y
    value = conj(
        eq(mul(out[0], out[0], y[0]), mul(x[0], x[0])),
        eq(mul(out[1], out[1], y[0]), mul(x[1], x[1])),
        le(ZERO, mul(out[0], x[0])),
        le(ZERO, mul(out[1], x[1])),
        eq(mul(out[0], x[1]), mul(out[1], x[0])),
    )
    return disj(conj(cond, value), conj(negate(cond), czero(out)))


def _def_sqrt(args, out):
    (y,) = args
    cond = conj(creal(y), lt(ZERO, y[0]))
    value = conj(eq(out[1], ZERO), lt(ZERO, out[0]), eq(mul(out[0], out[0]), y[0]))
    return disj(conj(cond, value), conj(negate(cond), czero(out)))


FN_DEFS: dict[str, SemiAlgebraicFnDef] = {d.name: d for d in [
    SemiAlgebraicFnDef("add", 2, lambda a, o: ceq(o, cadd(a[0], a[1]))),
    SemiAlgebraicFnDef("sub", 2, lambda a, o: ceq(o, csub(a[0], a[1]))),
    SemiAlgebraicFnDef("mul", 2, lambda a, o: ceq(o, cmul(a[0], a[1]))),
    SemiAlgebraicFnDef("neg", 1, lambda a, o: ceq(o, csub(C_ZERO, a[0]))),
    SemiAlgebraicFnDef("div", 2, _def_div),
    SemiAlgebraicFnDef("recip", 1, _def_recip),
    SemiAlgebraicFnDef("recip_succ", 1, _def_recip_succ),
    SemiAlgebraicFnDef("monus", 2, _def_monus),
    SemiAlgebraicFnDef("le", 2, _bool_def(lambda x, y: conj(_real_pair(x, y), le(x[0], y[0])))),
    SemiAlgebraicFnDef("lt", 2, _bool_def(lambda x, y: conj(_real_pair(x, y), lt(x[0], y[0])))),
    SemiAlgebraicFnDef("eq", 2, _bool_def(lambda x, y: ceq(x, y))),
    SemiAlgebraicFnDef("ne0", 1, _bool_def(lambda x: cne0(x))),
    SemiAlgebraicFnDef("gt0", 1, _bool_def(lambda x: conj(creal(x), lt(ZERO, x[0])))),
    SemiAlgebraicFnDef("and", 2, _bool_def(lambda x, y: conj(cne0(x), cne0(y)))),
    SemiAlgebraicFnDef("or", 2, _bool_def(lambda x, y: disj(cne0(x), cne0(y)))),
    SemiAlgebraicFnDef("not", 1, _bool_def(lambda x: czero(x))),
    SemiAlgebraicFnDef("andnot", 2, _bool_def(lambda x, y: conj(cne0(x), czero(y)))),
    SemiAlgebraicFnDef("conj", 1, lambda a, o: ceq(o, cconj(a[0]))),
    SemiAlgebraicFnDef("re", 1, lambda a, o: ceq(o, (a[0][0], ZERO))),
    SemiAlgebraicFnDef("im", 1, lambda a, o: ceq(o, (a[0][1], ZERO))),
    SemiAlgebraicFnDef("div_sqrt", 2, _def_div_sqrt),
    SemiAlgebraicFnDef("sqrt", 1, _def_sqrt),
]}


# -------------------------
# Numeric values of terms
# -------------------------

def _exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def term_value(t: Term, vals: Mapping[str, object]):
    match t:
        case RVar(name):
            if name not in vals:
                raise MissingWitness(f"no value for {name}")
            return vals[name]
        case RConst(v):
            return v
        case RAdd(ts):
            return sum((term_value(u, vals) for u in ts), Fraction(0))
        case RMul(ts):
            p = Fraction(1)
            for u in ts:
                p = p * term_value(u, vals)
            return p
    raise TypeError(f"not a term: {t!r}")


def _scalar(re_, im_):
    if _exact(re_) and _exact(im_):
        return GaussianRational(re_, im_)
    return complex(float(re_), float(im_))


def matrix_value(m: CMat, vals: Mapping[str, object]) -> Matrix:
    return Matrix.from_rows([[_scalar(term_value(a, vals), term_value(b, vals)) for a, b in row]
                             for row in m])


def _parts(z):
    if isinstance(z, GaussianRational):
        return z.re, z.im
    z = complex(z)
    return z.real, z.imag


def assign(m: CMat, value: Matrix) -> dict[str, object]:
    out = {}
    for i, row in enumerate(m):
        for j, (a, b) in enumerate(row):
            out[a.name], out[b.name] = _parts(value[i, j])
    return out


def _cfg_for(*ms: Matrix) -> EvalConfig:
    return EXACT if all(m.tower is Tower.EXACT for m in ms) else FLOAT


def _common(*ms: Matrix) -> list[Matrix]:
    """The matrices in one tower: exact if all are exact, else float."""
    tower = _cfg_for(*ms).tower
    return [m.to_tower(tower) for m in ms]


# -------------------------
# Input-sized expressions
# -------------------------

@dataclass(frozen=True)
class InputSizedExpr:
    schema: Schema
    expr: Expr
    sigma: SizeAssignment

    def __post_init__(self):
        missing = set(self.schema.symbols()) - set(self.sigma)
        if missing:
            raise ValueError(f"size assignment misses {sorted(missing)}")
        object.__setattr__(self, "out_type", typecheck(self.schema, self.expr))

    @property
    def output_dims(self) -> tuple[int, int]:
        return self.sigma.dims(self.out_type)


def x_matrix(name: str, rows: int, cols: int) -> CMat:
    return var_matrix(f"x_{name}", rows, cols)


def y_matrix(rows: int, cols: int) -> CMat:
    return var_matrix("y", rows, cols)


def fv_names(ise: InputSizedExpr) -> tuple[str, ...]:
    names: list[str] = []
    for m, t in ise.schema.items():
        names += mat_names(x_matrix(m, *ise.sigma.dims(t)))
    return tuple(names + mat_names(y_matrix(*ise.output_dims)))


@dataclass(frozen=True)
class EmittedFormula:
    """A formula together with its declared free variables, in order."""
    formula: Formula
    free: tuple[str, ...]

    @property
    def size(self) -> int:
        return formula_size(self.formula)


def instance_assignment(ise: InputSizedExpr, inst: Mapping[str, Matrix], out: Matrix) -> dict:
    """The assignment to FV describing ``inst`` and the output ``out``."""
    rho = {}
    for m, t in ise.schema.items():
        rho.update(assign(x_matrix(m, *ise.sigma.dims(t)), inst[m]))
    rho.update(assign(y_matrix(*ise.output_dims), out))
    return rho


# -------------------------
# Emission
# -------------------------

@dataclass
class _Step:
    vars: list[str]
    constraint: Formula
    witness: Witness | None


class _Emitter:
    def __init__(self, fn_defs: Mapping[str, SemiAlgebraicFnDef]):
        self.fn_defs = fn_defs
        self.steps: list[_Step] = []
        self.counter = itertools.count(1)

    def fresh(self, prefix: str) -> str:
        return f"{prefix}{next(self.counter)}"

    def emit(self, env: dict[str, CMat], e: Expr, out: CMat | None) -> tuple[CMat, bool]:
        """Entries of ``e``'s value; the flag says whether ``out`` was used as
        the result variables (so no final equation is needed)."""
        match e:
            case Var(name):
                return env[name], False
            case Let(name, value, body):
                v, _ = self.emit(env, value, None)
                return self.emit({**env, name: v}, body, out)
            case Transpose(a):
                m, _ = self.emit(env, a, None)
                return [[cconj(m[i][j]) for i in range(len(m))] for j in range(len(m[0]))], False
            case Ones(a):
                rows = self._dims(env, a)[0]
                return [[C_ONE] for _ in range(rows)], False
            case Diag(a):
                v, _ = self.emit(env, a, None)
                n = len(v)
                return [[v[i][0] if i == j else C_ZERO for j in range(n)] for i in range(n)], False
            case Apply(fn, args) if fn.startswith(functions.CONST_PREFIX):
                rows, cols = self._dims(env, args[0])
                c = cconst(functions.constant_value(fn))
                return [[c] * cols for _ in range(rows)], False
            case MatMul(l, r):
                a, _ = self.emit(env, l, None)
                b, _ = self.emit(env, r, None)

                def product(vals):
                    av, bv = _common(matrix_value(a, vals), matrix_value(b, vals))
                    return av @ bv

                return self.op(out, len(a), len(b[0]), lambda o: mat_eq(o, mat_mul(a, b)), product)
            case Apply(fn, args):
                ms = [self.emit(env, x, None)[0] for x in args]
                d = self.fn_defs.get(fn)
                if d is None:
                    raise MissingFnDef(fn)
                rows, cols = len(ms[0]), len(ms[0][0])
                f = functions.lookup(fn)

                def constraint(o):
                    return conj(*(d.define([m[i][j] for m in ms], o[i][j])
                                  for i in range(rows) for j in range(cols)))

                def compute(vals):
                    vs = _common(*(matrix_value(m, vals) for m in ms))
                    cfg = _cfg_for(*vs)
                    return Matrix(rows, cols, tuple(f(list(t), cfg) for t in zip(*(v.entries for v in vs))))

                return self.op(out, rows, cols, constraint, compute)
            case Inv(a):
                x, _ = self.emit(env, a, None)
                n = len(x)
                return self.op(out, n, n, lambda o: self.inv_constraint(x, o),
                               lambda vals: invert(matrix_value(x, vals), _cfg_for(matrix_value(x, vals))))
            case Eigen(a):
                x, _ = self.emit(env, a, None)
                n = len(x)
                return self.op(out, n, n, lambda o: self.eigen_constraint(x, o),
                               lambda vals: eigen_canonical(matrix_value(x, vals), FLOAT))
        raise TypeError(f"not an expression: {e!r}")

    def _dims(self, env, e: Expr) -> tuple[int, int]:
        sizes = {n: (len(m), len(m[0])) for n, m in env.items()}
        return _dims_of(sizes, e)

    def op(self, out, rows, cols, constraint, compute) -> tuple[CMat, bool]:
        if out is not None:
            self.steps.append(_Step([], constraint(out), None))
            return out, True
        o = var_matrix(self.fresh("t"), rows, cols)
        self.steps.append(_Step(mat_names(o), constraint(o), lambda vals: assign(o, compute(vals))))
        return o, False

    def inv_constraint(self, x: CMat, o: CMat) -> Formula:
        n = len(x)
        u = [[t] for t in var_vector(self.fresh("u"), n)]

        def witness(vals):
            xv = matrix_value(x, vals)
            v = null_vector(xv, _cfg_for(xv))
            return None if v is None else assign(u, v)

        singular = Exists(tuple(mat_names(u)),
                          conj(disj(*(cne0(r[0]) for r in u)),
                               mat_zero(mat_mul(x, u)), mat_zero(o)), witness)
        return disj(mat_eq(mat_mul(x, o), identity_cmat(n)), singular)

    def eigen_constraint(self, x: CMat, y: CMat) -> Formula:
        n = len(x)
        k = next(self.counter)
        z, p = var_matrix(f"z{k}", n, n), var_matrix(f"p{k}", n, n)
        lam = var_vector(f"l{k}", n)
        cols = [[y[i][j] for i in range(n)] for j in range(n)]
        pcols = [[p[i][j] for i in range(n)] for j in range(n)]
        eigvec = conj(*(ceq(pcols[j][i], cmul(lam[j], cols[j][i])) for j in range(n) for i in range(n)))
        orth = conj(*(self._orth(pcols[j], cols[j], pcols[m], cols[m])
                      for j in range(n) for m in range(j + 1, n)))
        lam_names = [t.name for pair in lam for t in pair]

        def diag_witness(vals):
            yv, xv = matrix_value(y, vals), matrix_value(x, vals)
            cfg = _cfg_for(yv, xv)
            if yv.is_zero(cfg):
                return None
            zv = invert(yv, cfg)
            if zv.is_zero(cfg):
                return None
            xv, yv = _common(xv, yv)
            pv = xv @ yv
            w = {**assign(z, zv), **assign(p, pv)}
            for j in range(n):
                num = sum((yv[i, j].conjugate() * pv[i, j] for i in range(n)), _zero(cfg))
                den = sum((yv[i, j].conjugate() * yv[i, j] for i in range(n)), _zero(cfg))
                w[lam[j][0].name], w[lam[j][1].name] = _parts(num / den)
            return w

        diag_branch = Exists(tuple(mat_names(z) + mat_names(p) + lam_names),
                             conj(mat_eq(mat_mul(y, z), identity_cmat(n)),
                                  mat_eq(p, mat_mul(x, y)), eigvec, orth),
                             diag_witness)
        return disj(diag_branch, conj(self.jordan(x), mat_zero(y)))

    @staticmethod
    def _orth(pv, v, pw, w) -> Formula:
        # Columns with a common eigenvalue must be orthogonal.  The eigenvalues
        # agree unless some position i with v_i, w_i != 0 has
        # (Av)_i / v_i != (Aw)_i / w_i, written without division.
        differ = disj(*(conj(cne0(v[i]), cne0(w[i]), cne(cmul(pv[i], w[i]), cmul(pw[i], v[i])))
                        for i in range(len(v))))
        return disj(differ, czero(csum(cmul(cconj(v[i]), w[i]) for i in range(len(v)))))

    def jordan(self, x: CMat) -> Formula:
        """Some invertible q makes q x q^-1 upper bidiagonal with a 1 on the
        superdiagonal, i.e. ``x`` is not diagonalizable."""
        n = len(x)
        k = next(self.counter)
        q, qi = var_matrix(f"q{k}", n, n), var_matrix(f"qi{k}", n, n)
        w, j = var_matrix(f"w{k}", n, n), var_matrix(f"j{k}", n, n)
        band = conj(*(czero(j[r][c]) for r in range(n) for c in range(n) if c not in (r, r + 1)))
        sup = [j[r][r + 1] for r in range(n - 1)]
        body = conj(
            mat_eq(mat_mul(q, qi), identity_cmat(n)),
            mat_eq(w, mat_mul(q, x)),
            mat_eq(j, mat_mul(w, qi)),
            band,
            conj(*(disj(czero(s), ceq(s, C_ONE)) for s in sup)),
            disj(*(ceq(s, C_ONE) for s in sup)),
            conj(*(disj(czero(sup[r]), ceq(j[r][r], j[r + 1][r + 1])) for r in range(n - 1))),
        )

        def witness(vals):
            xv = matrix_value(x, vals)
            found = jordan_witness(xv)
            if found is None:
                return None
            qv, qiv, xv = _common(*found, xv)
            wv = qv @ xv
            jv = wv @ qiv
            return {**assign(q, qv), **assign(qi, qiv), **assign(w, wv), **assign(j, jv)}

        return Exists(tuple(mat_names(q) + mat_names(qi) + mat_names(w) + mat_names(j)), body, witness)


def _zero(cfg: EvalConfig):
    return GaussianRational(0) if cfg.exact else 0j


def jordan_witness(a: Matrix) -> tuple[Matrix, Matrix] | None:
    """(q, q^-1) with q a q^-1 in Jordan form, when ``a`` is exact and not
    diagonalizable; otherwise None."""
    if a.tower is not Tower.EXACT:
        if diagonalizable(a, FLOAT):
            return None
        a = a.map(lambda z: GaussianRational(Fraction(z.real).limit_denominator(10**6),
                                             Fraction(z.imag).limit_denominator(10**6)))
    import sympy

    m = sympy.Matrix(a.rows, a.cols, [sympy.Rational(z.re.numerator, z.re.denominator)
                                      + sympy.I * sympy.Rational(z.im.numerator, z.im.denominator)
                                      for z in a.entries])
    if m.is_diagonalizable():
        return None
    p, _ = m.jordan_form()
    return _from_sympy(p.inv()), _from_sympy(p)


def _from_sympy(m) -> Matrix:
    import sympy

    def conv(v):
        v = sympy.nsimplify(v) if not v.is_number else sympy.simplify(v)
        re_, im_ = sympy.re(v), sympy.im(v)
        if re_.is_Rational and im_.is_Rational:
            return GaussianRational(Fraction(int(re_.p), int(re_.q)), Fraction(int(im_.p), int(im_.q)))
        return complex(sympy.N(v, 30))

    entries = [conv(v) for v in m]
    if not all(isinstance(v, GaussianRational) for v in entries):
        entries = [complex(v) for v in entries]
    return Matrix(m.rows, m.cols, tuple(entries))


def _dims_of(sizes: Mapping[str, tuple[int, int]], e: Expr) -> tuple[int, int]:
    match e:
        case Var(name):
            return sizes[name]
        case Let(name, value, body):
            return _dims_of({**sizes, name: _dims_of(sizes, value)}, body)
        case Transpose(a):
            r, c = _dims_of(sizes, a)
            return c, r
        case Ones(a):
            return _dims_of(sizes, a)[0], 1
        case Diag(a):
            r = _dims_of(sizes, a)[0]
            return r, r
        case MatMul(l, r):
            return _dims_of(sizes, l)[0], _dims_of(sizes, r)[1]
        case Apply(_, args):
            return _dims_of(sizes, args[0])
        case Inv(a) | Eigen(a):
            return _dims_of(sizes, a)
    raise TypeError(f"not an expression: {e!r}")


def emit_formula(ise: InputSizedExpr,
                 fn_defs: Mapping[str, SemiAlgebraicFnDef] | None = None) -> EmittedFormula:
    """Formula psi over FV(schema, expr, sigma) that holds exactly when the
    y-variables describe a possible result of the expression on the instance
    described by the x-variables."""
    defs = {**FN_DEFS, **(fn_defs or {})}
    em = _Emitter(defs)
    env = {m: x_matrix(m, *ise.sigma.dims(t)) for m, t in ise.schema.items()}
    y = y_matrix(*ise.output_dims)
    result, used = em.emit(env, desugar(ise.expr), y)
    f = TRUE if used else mat_eq(y, result)
    for step in reversed(em.steps):
        body = conj(step.constraint, f)
        f = Exists(tuple(step.vars), body, step.witness) if step.vars else body
    return EmittedFormula(f, fv_names(ise))


# -------------------------
# Partial evaluation
# -------------------------

def _pins(chi: Formula) -> dict[str, Fraction]:
    parts = chi.parts if isinstance(chi, And) else (chi,)
    pins = {}
    for p in parts:
        if isinstance(p, Eq):
            if isinstance(p.lhs, RVar) and isinstance(p.rhs, RConst):
                pins.setdefault(p.lhs.name, p.rhs.value)
            elif isinstance(p.rhs, RVar) and isinstance(p.lhs, RConst):
                pins.setdefault(p.rhs.name, p.lhs.value)
    return pins


def emit_partial_evaluation(ise: InputSizedExpr, chi: Formula,
                            fn_defs: Mapping[str, SemiAlgebraicFnDef] | None = None) -> EmittedFormula:
    """The sentence ``exists FV (psi and chi)``.

    Its witness builds the instance from the input values ``chi`` pins with
    top-level equations (other entries default to 0) and takes the evaluator's
    result as the output.
    """
    fv = fv_names(ise)
    escaped = free_variables(chi) - set(fv)
    if escaped:
        raise FreeVariableEscape(f"constraint mentions {sorted(escaped)} outside FV")
    psi = emit_formula(ise, fn_defs)

    def witness(_vals):
        pins = _pins(chi)
        inst = {}
        for m, t in ise.schema.items():
            xm = x_matrix(m, *ise.sigma.dims(t))
            inst[m] = Matrix.from_rows([[GaussianRational(pins.get(a.name, 0), pins.get(b.name, 0))
                                         for a, b in row] for row in xm])
        cfg = EXACT
        try:
            check_tower(ise.expr, EXACT)
        except TowerError:
            cfg = FLOAT
        out = evaluate(inst, ise.expr, cfg, ise.schema)
        return instance_assignment(ise, inst, out)

    return EmittedFormula(Exists(fv, conj(psi.formula, chi), witness), ())


# -------------------------
# Ground checking
# -------------------------

def _close(a, b, tol) -> bool:
    return abs(a - b) <= tol * max(1, abs(a), abs(b))


def ground_check(f: Formula | EmittedFormula, rho: Mapping[str, object], tol: float = 0) -> bool:
    """Truth of ``f`` under ``rho`` with every quantifier block instantiated by
    its witness.

    With ``tol == 0`` atoms are decided exactly (use rational values).  With
    ``tol > 0`` an equation holds when both sides agree to relative tolerance
    ``tol`` and ``a < b`` needs ``b - a`` to exceed it; this is for formulas
    whose witnesses are floating point (``eigen``, square roots).
    """
    if isinstance(f, EmittedFormula):
        missing = set(f.free) - set(rho)
        if missing:
            raise MissingWitness(f"no value for free variables {sorted(missing)[:4]}")
        f = f.formula
    vals = {k: (Fraction(v) if isinstance(v, int) else v) for k, v in rho.items()}
    return _holds(f, vals, tol)


def _holds(f: Formula, vals: dict, tol: float) -> bool:
    match f:
        case Eq(a, b):
            x, y = term_value(a, vals), term_value(b, vals)
            return x == y if tol == 0 else _close(x, y, tol)
        case Lt(a, b):
            x, y = term_value(a, vals), term_value(b, vals)
            return x < y if tol == 0 else y - x > tol * max(1, abs(x), abs(y))
        case And(ps):
            return all(_holds(p, vals, tol) for p in ps)
        case Or(ps):
            return any(_holds(p, vals, tol) for p in ps)
        case Bool(v):
            return v
        case Exists(vs, body, witness):
            if witness is None:
                raise MissingWitness(f"no witness for block {vs[:3]}...")
            w = witness(vals)
            if w is None:
                return False
            if set(vs) - set(w):
                raise MissingWitness(f"witness leaves {sorted(set(vs) - set(w))[:3]} unset")
            return _holds(body, {**vals, **w}, tol)
    raise TypeError(f"not a formula: {f!r}")


# -------------------------
# SMT-LIB
# -------------------------

def _smt_num(v: Fraction) -> str:
    a = abs(v)
    s = str(a.numerator) if a.denominator == 1 else f"(/ {a.numerator} {a.denominator})"
    return f"(- {s})" if v < 0 else s


def smt_term(t: Term) -> str:
    match t:
        case RVar(name):
            return name
        case RConst(v):
            return _smt_num(v)
        case RAdd(ts):
            return "(+ " + " ".join(smt_term(u) for u in ts) + ")"
        case RMul(ts):
            return "(* " + " ".join(smt_term(u) for u in ts) + ")"
    raise TypeError(f"not a term: {t!r}")


def smt_formula(f: Formula) -> str:
    """Body text; quantifier blocks are printed without binders (their
    variables are declared as constants by :func:`serialize_smtlib`)."""
    match f:
        case Eq(a, b):
            return f"(= {smt_term(a)} {smt_term(b)})"
        case Lt(a, b):
            return f"(< {smt_term(a)} {smt_term(b)})"
        case And(ps):
            return "(and " + " ".join(smt_formula(p) for p in ps) + ")"
        case Or(ps):
            return "(or " + " ".join(smt_formula(p) for p in ps) + ")"
        case Bool(v):
            return "true" if v else "false"
        case Exists(_, body, _):
            return smt_formula(body)
    raise TypeError(f"not a formula: {f!r}")


def _bound_vars(f: Formula, out: list[str]) -> None:
    match f:
        case And(ps) | Or(ps):
            for p in ps:
                _bound_vars(p, out)
        case Exists(vs, body, _):
            out.extend(vs)
            _bound_vars(body, out)


def _top_conjuncts(f: Formula) -> list[Formula]:
    match f:
        case And(ps):
            return [c for p in ps for c in _top_conjuncts(p)]
        case Exists(_, body, _):
            return _top_conjuncts(body)
        case Bool(True):
            return []
    return [f]


def serialize_smtlib(f: Formula | EmittedFormula) -> str:
    """SMT-LIB 2 script asserting ``f``.

    The formula is negation-free and its bound variables are distinct, so
    every existential can be skolemized to a declared constant: free variables
    are declared first, then bound variables in order of appearance.
    """
    free: tuple[str, ...] = ()
    if isinstance(f, EmittedFormula):
        free, f = f.free, f.formula
    bound: list[str] = []
    _bound_vars(f, bound)
    lines = ["(set-logic NRA)"]
    seen = set()
    for name in list(free) + sorted(free_variables(f) - set(free)) + bound:
        if name not in seen:
            seen.add(name)
            lines.append(f"(declare-const {name} Real)")
    lines += [f"(assert {smt_formula(c)})" for c in _top_conjuncts(f)]
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# -------------------------
# Reading constraints
# -------------------------

_SEXP_TOKEN = re.compile(r"\s*(?:(;[^\n]*)|(\()|(\))|([^\s()]+))")


def _sexp(text: str):
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        pos = m.end()
        if m.group(1):
            continue
        if m.group(2):
            stack.append([])
        elif m.group(3):
            if len(stack) == 1:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        elif m.group(4):
            stack[-1].append(m.group(4))
    if len(stack) != 1:
        raise ValueError("unbalanced '('")
    return stack[0]


def _term_of(s) -> Term:
    if isinstance(s, str):
        try:
            return RConst(Fraction(s))
        except ValueError:
            return RVar(s)
    head, *args = s
    ts = [_term_of(a) for a in args]
    match head:
        case "+":
            return add(*ts)
        case "*":
            return mul(*ts)
        case "-":
            return neg(ts[0]) if len(ts) == 1 else sub(ts[0], add(*ts[1:]))
        case "/":
            if all(isinstance(t, RConst) for t in ts) and len(ts) == 2 and ts[1].value:
                return RConst(ts[0].value / ts[1].value)
    raise ValueError(f"unsupported term {s!r}")


def _formula_of(s) -> Formula:
    if s == "true":
        return TRUE
    if s == "false":
        return FALSE
    if isinstance(s, str) or not s:
        raise ValueError(f"not a formula: {s!r}")
    head, *args = s
    match head:
        case "and":
            return conj(*(_formula_of(a) for a in args))
        case "or":
            return disj(*(_formula_of(a) for a in args))
        case "=":
            a, b = (_term_of(x) for x in args)
            return Eq(a, b)
        case "distinct":
            a, b = (_term_of(x) for x in args)
            return ne(a, b)
        case "<" | ">" | "<=" | ">=":
            a, b = (_term_of(x) for x in args)
            if head in (">", ">="):
                a, b = b, a
            return Lt(a, b) if head in ("<", ">") else le(a, b)
        case "not":
            return negate(_formula_of(args[0]))
        case "exists":
            names = tuple(binding[0] for binding in args[0])
            return Exists(names, _formula_of(args[1]))
    raise ValueError(f"unsupported formula {s!r}")


_SCRIPT_COMMANDS = ("set-logic", "declare-const", "declare-fun", "check-sat", "set-option", "exit")


def parse_formula(text: str) -> Formula:
    """Read a constraint written as an SMT-LIB style term, e.g.
    ``(and (= x_M_1_1_re 2) (distinct y_1_1_re 0))``; several top-level
    forms, or ``(assert ...)`` forms, are conjoined and script commands
    such as declarations are skipped."""
    forms = _sexp(text)
    out = []
    for form in forms:
        if isinstance(form, list) and form and form[0] in _SCRIPT_COMMANDS:
            continue
        if isinstance(form, list) and form and form[0] == "assert":
            form = form[1]
        out.append(_formula_of(form))
    return conj(*out)
