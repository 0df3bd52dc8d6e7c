"""Seeded random schemas, well-typed programs and conforming instances.

Programs are generated top-down from a target type, so every result
typechecks by construction.  The knobs select the fragment: ``inv`` and
``eigen`` toggle those operations and ``functions`` restricts pointwise
application.  Eigen arguments can be forced to the self-adjoint form
``let n = Y in n . n^*``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from . import functions
from .matrix import Matrix
from .scalars import GaussianRational
from .syntax import (
    ONE, Apply, Diag, Eigen, EigenPair, Expr, Inv, Let, MatMul, MatrixType, Ones, Schema, Sym,
    Transpose, Var,
)
from .typecheck import SizeAssignment

# Functions with exact semi-algebraic definitions whose values stay small.
TAME_FUNCTIONS = ("add", "sub", "mul", "neg", "div", "recip", "recip_succ", "monus", "le", "lt",
                  "eq", "ne0", "gt0", "and", "or", "not", "andnot", "conj", "re", "im")
CONSTANTS = (0, 1, 2, -1, Fraction(1, 2))


@dataclass(frozen=True)
class GenOptions:
    depth: int = 4
    inv: bool = False
    eigen: bool = False
    self_adjoint_eigen: bool = False
    functions: tuple[str, ...] = TAME_FUNCTIONS
    let_prob: float = 0.15


def random_schema(rng: random.Random, max_vars: int = 3, symbols: str = "abc") -> Schema:
    syms = [Sym(s) for s in symbols[: rng.randint(1, len(symbols))]]
    terms = syms + [ONE]
    names = ["A", "B", "C", "M", "N"][: rng.randint(1, max_vars)]
    types = {}
    for n in names:
        types[n] = MatrixType(rng.choice(terms), rng.choice(terms))
    # make every chosen symbol occur so that sigma is determined by instances
    used = {t for mt in types.values() for t in (mt.rows, mt.cols)}
    for s in syms:
        if s not in used:
            n = rng.choice(names)
            mt = types[n]
            types[n] = MatrixType(s, mt.cols) if rng.random() < 0.5 else MatrixType(mt.rows, s)
            used = {t for mt in types.values() for t in (mt.rows, mt.cols)}
    return Schema(types)


def random_sigma(rng: random.Random, schema: Schema, max_dim: int = 4) -> SizeAssignment:
    return SizeAssignment({s: rng.randint(1, max_dim) for s in schema.symbols()})


def random_scalar(rng: random.Random, complex_: bool = False) -> GaussianRational:
    def part():
        return Fraction(rng.randint(-4, 4), rng.choice([1, 1, 2, 3]))

    return GaussianRational(part(), part() if complex_ and rng.random() < 0.5 else 0)


def random_instance(rng: random.Random, schema: Schema, sigma: SizeAssignment,
                    complex_: bool = False, zero_prob: float = 0.2) -> dict[str, Matrix]:
    inst = {}
    for name, t in schema.items():
        r, c = sigma.dims(t)
        inst[name] = Matrix.build(r, c, lambda i, j: GaussianRational(0) if rng.random() < zero_prob
                                  else random_scalar(rng, complex_))
    return inst


class _Gen:
    def __init__(self, rng: random.Random, schema: Schema, opts: GenOptions):
        self.rng, self.opts = rng, opts
        self.terms = [Sym(s) for s in schema.symbols()] + [ONE]
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def any_type(self) -> MatrixType:
        return MatrixType(self.rng.choice(self.terms), self.rng.choice(self.terms))

    def leaf(self, env: dict[str, MatrixType], t: MatrixType) -> Expr:
        exact = [Var(n) for n, u in env.items() if u == t]
        flipped = [Transpose(Var(n)) for n, u in env.items() if u == t.transposed()]
        if (exact or flipped) and self.rng.random() < 0.85:
            return self.rng.choice(exact + flipped)
        return self.build_ones(env, t)

    def row_source(self, env, s) -> Expr:
        """Some expression with ``s`` rows."""
        opts = [Var(n) for n, u in env.items() if u.rows == s]
        opts += [Transpose(Var(n)) for n, u in env.items() if u.cols == s]
        if not opts:
            # only ONE lacks a source when no variable has a 1 dimension
            v = self.rng.choice(list(env))
            return Transpose(Ones(Var(v)))
        return self.rng.choice(opts)

    def build_ones(self, env, t: MatrixType) -> Expr:
        col = Ones(self.row_source(env, t.rows))
        if t.cols == ONE:
            return col
        row = Transpose(Ones(self.row_source(env, t.cols)))
        return MatMul(col, row)

    def gen(self, env: dict[str, MatrixType], t: MatrixType, depth: int) -> Expr:
        rng, o = self.rng, self.opts
        if depth <= 0 or rng.random() < 0.15:
            return self.leaf(env, t)
        choices = ["transpose", "matmul", "matmul", "apply", "apply"]
        if t.cols == ONE:
            choices.append("ones")
        if t.rows == t.cols:
            choices.append("diag")
            if o.inv:
                choices.append("inv")
            if o.eigen:
                choices += ["eigen", "eigenpair"]
        if rng.random() < o.let_prob:
            choices.append("let")
        match rng.choice(choices):
            case "transpose":
                return Transpose(self.gen(env, t.transposed(), depth - 1))
            case "matmul":
                k = rng.choice(self.terms)
                return MatMul(self.gen(env, MatrixType(t.rows, k), depth - 1),
                              self.gen(env, MatrixType(k, t.cols), depth - 1))
            case "apply":
                fn = rng.choice(o.functions + ("const",))
                if fn == "const":
                    return Apply(functions.const_name(rng.choice(CONSTANTS)),
                                 (self.gen(env, t, depth - 1),))
                arity = functions.lookup(fn).arity
                return Apply(fn, tuple(self.gen(env, t, depth - 1) for _ in range(arity)))
            case "ones":
                return Ones(self.gen(env, MatrixType(t.rows, rng.choice(self.terms)), depth - 1))
            case "diag":
                return Diag(self.gen(env, MatrixType(t.rows, ONE), depth - 1))
            case "inv":
                return Inv(self.gen(env, t, depth - 1))
            case "eigen":
                return Eigen(self.eigen_arg(env, t, depth - 1))
            case "eigenpair":
                b, lam = self.fresh(), self.fresh()
                inner = {**env, b: t, lam: t}
                pick = rng.choice([Var(b), Var(lam), MatMul(Var(b), Var(lam))])
                body = pick if rng.random() < 0.5 else self.gen(inner, t, depth - 1)
                return EigenPair(b, lam, self.eigen_arg(env, t, depth - 1), body)
            case "let":
                name = self.fresh()
                u = self.any_type()
                value = self.gen(env, u, depth - 1)
                return Let(name, value, self.gen({**env, name: u}, t, depth - 1))
        raise AssertionError("unreachable")

    def eigen_arg(self, env, t: MatrixType, depth: int) -> Expr:
        if not self.opts.self_adjoint_eigen:
            return self.gen(env, t, depth)
        name = self.fresh()
        k = self.rng.choice(self.terms)
        return Let(name, self.gen(env, MatrixType(t.rows, k), depth), MatMul(Var(name), Transpose(Var(name))))


DEFAULT_OPTIONS = GenOptions()


def random_program(rng: random.Random, schema: Schema, opts: GenOptions = DEFAULT_OPTIONS,
                   out: MatrixType | None = None) -> Expr:
    g = _Gen(rng, schema, opts)
    return g.gen(dict(schema), out or g.any_type(), opts.depth)


def random_case(rng: random.Random, opts: GenOptions = DEFAULT_OPTIONS, max_dim: int = 4,
                complex_: bool = False):
    """(schema, expr, sigma, instance) with everything conforming."""
    schema = random_schema(rng)
    sigma = random_sigma(rng, schema, max_dim)
    expr = random_program(rng, schema, opts)
    return schema, expr, sigma, random_instance(rng, schema, sigma, complex_)


def random_binrel(rng: random.Random, depth: int, names: tuple[str, ...] = ("R", "S")):
    """Random binary-relation expression of depth at most ``depth``."""
    from .binrel import All, BRDifference, BRUnion, BRVar, Compose, Converse, Identity

    if depth <= 0 or rng.random() < 0.2:
        return rng.choice([BRVar(n) for n in names] * 3 + [All(), Identity()])
    match rng.choice(["union", "difference", "converse", "compose", "compose"]):
        case "union":
            return BRUnion(random_binrel(rng, depth - 1, names), random_binrel(rng, depth - 1, names))
        case "difference":
            return BRDifference(random_binrel(rng, depth - 1, names), random_binrel(rng, depth - 1, names))
        case "converse":
            return Converse(random_binrel(rng, depth - 1, names))
        case _:
            return Compose(random_binrel(rng, depth - 1, names), random_binrel(rng, depth - 1, names))


def random_graph_instance(rng: random.Random, names: tuple[str, ...] = ("R", "S"), max_n: int = 6):
    from .binrel import GraphInstance

    n = rng.randint(1, max_n)
    p = rng.choice([0.1, 0.3, 0.5])
    return GraphInstance(n, {name: frozenset((i, j) for i in range(1, n + 1) for j in range(1, n + 1)
                                              if rng.random() < p) for name in names})
