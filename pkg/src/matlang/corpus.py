"""Standard library of derived programs, each paired with an independent
reference procedure.

Builders return :class:`NamedProgram` values.  ``oracle(inst)`` computes the
expected result directly (Warshall, union-find, power iteration, Gaussian
elimination, ...) without going through the expression language.
"""

from __future__ import annotations

import random
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import EXACT, FLOAT, EvalConfig
from .evaluator import evaluate
from .functions import const_name
from .matrix import Matrix, invert, max_abs_diff, rank_exact
from .binrel import BRDifference, All, Compose, BRVar, Identity, compile_binrel
from .scalars import GaussianRational
from .syntax import (
    Apply, Diag, EigenPair, Expr, Inv, Let, MatMul, Ones, Schema, Transpose, Var, all_names,
    fresh_name,
)
from .typecheck import typecheck

Instance = Mapping[str, Matrix]


class PreconditionError(ValueError):
    """The instance lies outside the program's stated contract."""


@dataclass(frozen=True)
class NamedProgram:
    name: str
    schema: Schema
    expr: Expr
    oracle: Callable[[Instance], Matrix]
    tolerance: float = 0.0
    cfg: EvalConfig = EXACT
    sample: Callable[[random.Random], dict[str, Matrix]] | None = field(default=None, compare=False)
    precondition: Callable[[Instance], None] | None = field(default=None, compare=False)
    compare: Callable[[Instance, Matrix, Matrix], float] | None = field(default=None, compare=False)
    doc: str = ""

    def __post_init__(self):
        typecheck(self.schema, self.expr)

    def run(self, inst: Instance) -> Matrix:
        if self.precondition is not None:
            self.precondition(inst)
        return evaluate(inst, self.expr, self.cfg, self.schema)

    def error(self, inst: Instance, result: Matrix | None = None) -> float:
        """Distance between the program's result and the oracle's."""
        result = self.run(inst) if result is None else result
        expected = self.oracle(inst)
        if self.compare is not None:
            return self.compare(inst, result, expected)
        return max_abs_diff(result, expected)

    def check(self, inst: Instance) -> bool:
        return self.error(inst) <= self.tolerance


# -------------------------
# Shorthands
# -------------------------

def _fresh(prefix: str, *exprs: Expr, avoid=()) -> str:
    names = set(avoid)
    for e in exprs:
        names |= all_names(e)
    return fresh_name(prefix, names)


def const_expr(c, over: Expr) -> Expr:
    """The 1 x 1 matrix [[c]]: ``let N = ones(over)^* in apply[c](ones(N))``."""
    n = _fresh("_n", over)
    return Let(n, Transpose(Ones(over)), Apply(const_name(c), (Ones(Var(n)),)))


def smul(c: Expr, a: Expr) -> Expr:
    """``c`` (1 x 1) times every entry of ``a``:
    ``let M = ones(a) . c . ones(a^*)^* in apply[mul](M, a)``."""
    av = _fresh("_a", c, a)
    m = _fresh("_m", c, a, avoid={av})
    return Let(av, a, Let(m, MatMul(MatMul(Ones(Var(av)), c), Transpose(Ones(Transpose(Var(av))))),
                          Apply("mul", (Var(m), Var(av)))))


def count_expr(a: Expr) -> Expr:
    """The 1 x 1 matrix holding the number of rows of ``a``."""
    return MatMul(Transpose(Ones(a)), Ones(a))


def identity_expr(a: Expr) -> Expr:
    return Diag(Ones(a))


def rtc_expr(a: Expr) -> Expr:
    """Nonzero pattern of ``(I - A/(n+1))^-1``: the reflexive-transitive closure."""
    scaled = smul(Apply("recip_succ", (count_expr(a),)), a)
    return Apply("ne0", (Inv(Apply("sub", (identity_expr(a), scaled))),))


def _sq(name: str = "A", size: str = "a") -> Schema:
    return Schema.of(**{name: f"{size} x {size}"})


# -------------------------
# Random instances
# -------------------------

def random_digraph(rng: random.Random, n: int, p: float = 0.3, loops: bool = True) -> Matrix:
    return Matrix.build(n, n, lambda i, j: int((loops or i != j) and rng.random() < p))


def random_undirected(rng: random.Random, n: int, p: float = 0.3) -> Matrix:
    edges = {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p}
    return Matrix.build(n, n, lambda i, j: int((min(i, j), max(i, j)) in edges and i != j))


def random_rational(rng: random.Random, rows: int, cols: int, span: int = 5) -> Matrix:
    return Matrix.build(rows, cols, lambda i, j: GaussianRational(
        Fraction(rng.randint(-span * 4, span * 4), rng.choice([1, 2, 4]))))


def random_symmetric_int(rng: random.Random, n: int, span: int = 3, low_rank: bool = False) -> Matrix:
    if low_rank:
        k = rng.randint(0, n)
        vs = [[rng.randint(-span, span) for _ in range(n)] for _ in range(k)]
        return Matrix.build(n, n, lambda i, j: sum(v[i] * v[j] for v in vs))
    vals = {(i, j): rng.randint(-span, span) for i in range(n) for j in range(i, n)}
    return Matrix.build(n, n, lambda i, j: vals[min(i, j), max(i, j)])


def _np(m: Matrix) -> np.ndarray:
    return m.to_numpy()


# -------------------------
# Programs
# -------------------------

def constant(c=7) -> NamedProgram:
    c = GaussianRational.coerce(Fraction(str(c)) if isinstance(c, float) else c)
    return NamedProgram(
        f"constant_{const_name(c)[6:]}", Schema.of(M="a x b"), const_expr(c, Var("M")),
        oracle=lambda inst: Matrix(1, 1, (c,)),
        sample=lambda rng: {"M": random_rational(rng, rng.randint(1, 4), rng.randint(1, 4))},
        doc="the 1 x 1 constant, computed from any input")


def scalar_mult() -> NamedProgram:
    def oracle(inst):
        c, a = inst["C"][0, 0], inst["A"]
        return a.map(lambda x: c * x)

    return NamedProgram(
        "scalar_mult", Schema.of(C="1 x 1", A="a x b"), smul(Var("C"), Var("A")), oracle,
        sample=lambda rng: {"C": random_rational(rng, 1, 1),
                            "A": random_rational(rng, rng.randint(1, 4), rng.randint(1, 4))},
        doc="every entry of A times the scalar C")


def _google_value(a: np.ndarray, d: Fraction | float) -> np.ndarray:
    n = a.shape[0]
    k = a.sum(axis=1)
    return np.array([[float(d) * a[i, j] / k[i] + (1 - float(d)) / n for j in range(n)]
                     for i in range(n)])


def _positive_outdegree(inst):
    a = _np(inst["A"])
    if np.any(np.abs(a).sum(axis=1) == 0):
        raise PreconditionError("every node needs a positive outdegree")


def _sample_graph_with_outdegree(rng: random.Random, lo=1, hi=6):
    n = rng.randint(lo, hi)
    a = random_digraph(rng, n, 0.4)
    rows = [list(a.row(i)) for i in range(n)]
    for i in range(n):
        if not any(rows[i]):
            rows[i][rng.randrange(n)] = 1
    return {"A": Matrix.from_rows(rows)}


def google_matrix(d=Fraction(17, 20)) -> NamedProgram:
    """``d * A_ij / k_i + (1 - d) / n`` for a digraph without sinks."""
    d = Fraction(d)
    A = Var("A")
    body = Apply("add", (smul(const_expr(d, A), Var("B")),
                         smul(const_expr(1 - d, A), smul(Apply("recip", (Var("N"),)), Var("J")))))
    expr = Let("J", MatMul(Ones(A), Transpose(Ones(A))),
               Let("K", MatMul(A, Var("J")),
                   Let("B", Apply("div", (A, Var("K"))),
                       Let("N", count_expr(A), body))))
    return NamedProgram(
        "google_matrix", _sq(), expr,
        oracle=lambda inst: Matrix.from_numpy(_google_value(_np(inst["A"]).real, d)),
        tolerance=1e-12, cfg=FLOAT, sample=_sample_graph_with_outdegree,
        precondition=_positive_outdegree, doc=f"Google matrix with damping {d}")


def vector_min() -> NamedProgram:
    v = Var("v")
    ones = Ones(v)
    expr = Let("V", MatMul(v, Transpose(ones)),
               Let("C", MatMul(Apply("le", (Var("V"), Transpose(Var("V")))), ones),
                   Let("N", MatMul(Transpose(ones), ones),
                       Let("S", Apply("eq", (Var("C"), MatMul(ones, Var("N")))),
                           Let("M", Apply("recip", (MatMul(Transpose(Var("S")), ones),)),
                               MatMul(MatMul(Var("M"), Transpose(v)), Var("S")))))))

    def sample(rng):
        n = rng.randint(1, 6)
        vals = [Fraction(rng.randint(-6, 6), rng.choice([1, 2, 3])) for _ in range(n)]
        return {"v": Matrix(n, 1, tuple(GaussianRational(x) for x in vals))}

    return NamedProgram(
        "vector_min", Schema.of(v="a x 1"), expr,
        oracle=lambda inst: Matrix(1, 1, (min(inst["v"].entries, key=lambda z: z.real),)),
        sample=sample, doc="minimum entry of a real column vector")


def _power_iteration(g: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    n = g.shape[0]
    v = np.full(n, 1.0 / n)
    for _ in range(100000):
        w = g.T @ v
        w = w / w.sum()
        if np.abs(w - v).max() < tol:
            return w
        v = w
    return v


def pagerank(d=Fraction(17, 20)) -> NamedProgram:
    """``(1-d)/n (I - d B^*)^-1 1`` with ``B_ij = A_ij / k_i``.

    The transpose makes this the stationary distribution of the Google matrix,
    which is what power iteration computes.
    """
    d = Fraction(d)
    A = Var("A")
    system = Apply("sub", (identity_expr(A), smul(const_expr(d, A), Transpose(Var("B")))))
    body = smul(const_expr(1 - d, A),
                smul(Apply("recip", (Var("N"),)), MatMul(Inv(system), Ones(A))))
    expr = Let("J", MatMul(Ones(A), Transpose(Ones(A))),
               Let("K", MatMul(A, Var("J")),
                   Let("B", Apply("div", (A, Var("K"))),
                       Let("N", count_expr(A), body))))

    def oracle(inst):
        g = _google_value(_np(inst["A"]).real, d)
        return Matrix.from_numpy(_power_iteration(g).reshape(-1, 1))

    return NamedProgram("pagerank", _sq(), expr, oracle, tolerance=1e-6, cfg=FLOAT,
                        sample=_sample_graph_with_outdegree, precondition=_positive_outdegree,
                        doc=f"PageRank vector with damping {d}")


def warshall(m: Matrix, reflexive: bool) -> Matrix:
    n = m.rows
    r = [[bool(m[i, j]) or (reflexive and i == j) for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            if r[i][k]:
                for j in range(n):
                    r[i][j] = r[i][j] or r[k][j]
    return Matrix.build(n, n, lambda i, j: int(r[i][j]))


def transitive_closure(reflexive: bool = True) -> NamedProgram:
    A = Var("A")
    expr = rtc_expr(A) if reflexive else Apply("ne0", (MatMul(rtc_expr(A), A),))
    return NamedProgram(
        "reflexive_transitive_closure" if reflexive else "transitive_closure", _sq(), expr,
        oracle=lambda inst: warshall(inst["A"], reflexive),
        sample=lambda rng: {"A": random_digraph(rng, rng.randint(1, 8), rng.choice([0.1, 0.2, 0.35]))},
        doc="0/1 closure of a digraph via a matrix inverse")


def _two_colourable(m: Matrix) -> bool:
    n = m.rows
    colour: dict[int, int] = {}
    for s in range(n):
        if s in colour:
            continue
        colour[s] = 0
        todo = [s]
        while todo:
            u = todo.pop()
            for w in range(n):
                if m[u, w] or m[w, u]:
                    if w not in colour:
                        colour[w] = 1 - colour[u]
                        todo.append(w)
                    elif colour[w] == colour[u]:
                        return False
    return True


def _undirected_precondition(inst):
    a = inst["R"]
    if any(a[i, j] != a[j, i] for i in range(a.rows) for j in range(a.cols)):
        raise PreconditionError("the relation must be symmetric")
    if any(a[i, i] for i in range(a.rows)):
        raise PreconditionError("the relation must have no self-loops")


def bipartiteness() -> NamedProgram:
    """All pairs if the undirected graph R has no odd cycle, else no pairs.

    ``T`` is the transitive closure of ``R ; R``; the graph has an odd cycle
    iff some ``R(x, y)`` has ``T(y, x)``, i.e. iff ``(R ; T)`` meets the
    identity.  In the algebra of binary relations the answer is
    ``all - (all ; ((R ; T) - ((R ; T) - id)) ; all)``.
    """
    rt = Compose(BRVar("R"), BRVar("T"))
    meets_id = BRDifference(rt, BRDifference(rt, Identity()))
    query = BRDifference(All(), Compose(Compose(All(), meets_id), All()))
    R = Var("R")
    rr = Apply("gt0", (MatMul(R, R),))
    t_expr = Let("_rr", rr, Apply("ne0", (MatMul(rtc_expr(Var("_rr")), Var("_rr")),)))
    expr = Let("T", t_expr, compile_binrel(query, ["R", "T"]))

    def oracle(inst):
        n = inst["R"].rows
        v = int(_two_colourable(inst["R"]))
        return Matrix.build(n, n, lambda i, j: v)

    return NamedProgram(
        "bipartiteness", _sq("R"), expr, oracle,
        sample=lambda rng: {"R": random_undirected(rng, rng.randint(1, 8), rng.choice([0.2, 0.3, 0.5]))},
        precondition=_undirected_precondition,
        doc="all-ones if the graph is bipartite, zero otherwise")


def _components(m: Matrix) -> int:
    parent = list(range(m.rows))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m.rows):
        for j in range(m.cols):
            if m[i, j]:
                parent[find(i)] = find(j)
    return len({find(i) for i in range(m.rows)})


def connected_components() -> NamedProgram:
    R = Var("R")
    C = Var("C")
    expr = Let("S", Apply("or", (R, Transpose(R))),
               Let("C", rtc_expr(Var("S")),
                   MatMul(Transpose(Ones(C)), Apply("recip", (MatMul(C, Ones(C)),)))))
    return NamedProgram(
        "connected_components", _sq("R"), expr,
        oracle=lambda inst: Matrix(1, 1, (GaussianRational(_components(inst["R"])),)),
        sample=lambda rng: {"R": random_digraph(rng, rng.randint(1, 8), rng.choice([0.05, 0.15, 0.3]))},
        doc="number of weakly connected components")


def rank_expr() -> NamedProgram:
    A = Var("A")
    expr = EigenPair("B", "L", A, MatMul(MatMul(Transpose(Ones(A)), Apply("ne0", (Var("L"),))), Ones(A)))

    def sample(rng):
        return {"A": random_symmetric_int(rng, rng.randint(1, 6), low_rank=rng.random() < 0.5)}

    return NamedProgram(
        "rank", _sq(), expr,
        oracle=lambda inst: Matrix(1, 1, (GaussianRational(rank_exact(inst["A"])),)),
        tolerance=1e-6, cfg=FLOAT, sample=sample,
        doc="rank of a diagonalizable matrix: number of nonzero eigenvalues")


def _fiedler_error(inst, result: Matrix, expected: Matrix) -> float:
    """How far the nonzero columns of ``result`` are from spanning the
    eigenspace of the second-smallest Laplacian eigenvalue."""
    a = _np(inst["A"]).real
    lap = np.diag(a.sum(axis=1)) - a
    vals = np.linalg.eigvalsh(lap)
    lam2 = complex(expected[0, 0]).real
    mult = int(np.sum(np.abs(vals - lam2) <= 1e-6))
    b = _np(result)
    cols = [b[:, j] for j in range(b.shape[1]) if np.abs(b[:, j]).max() > 1e-9]
    if len(cols) != mult:
        return float("inf")
    return max(float(np.abs(lap @ v - lam2 * v).max()) for v in cols)


def laplacian_partition() -> NamedProgram:
    """Eigenvectors of the second-smallest Laplacian eigenvalue (counted with
    multiplicity), other columns zeroed."""
    A = Var("A")
    lam = Var("lam")
    ones = Ones(lam)
    V = Var("V")
    body = Let("lam", MatMul(Var("Lam"), Ones(Var("Lam"))),
               Let("V", MatMul(lam, Transpose(ones)),
                   Let("c", MatMul(Apply("lt", (Transpose(V), V)), ones),
                       Let("d", MatMul(Apply("le", (Transpose(V), V)), ones),
                           Let("s", Apply("and", (Apply("le", (Var("c"), Apply(const_name(1), (lam,)))),
                                                  Apply("le", (Apply(const_name(2), (lam,)), Var("d"))))),
                               MatMul(Var("B"), Diag(Var("s"))))))))
    expr = Let("D", Diag(MatMul(A, Ones(A))),
               Let("L", Apply("sub", (Var("D"), A)), EigenPair("B", "Lam", Var("L"), body)))

    def oracle(inst):
        a = _np(inst["A"]).real
        vals = np.sort(np.linalg.eigvalsh(np.diag(a.sum(axis=1)) - a))
        return Matrix(1, 1, (complex(vals[1] if len(vals) > 1 else np.nan),))

    def sample(rng):
        return {"A": random_undirected(rng, rng.randint(2, 6), rng.choice([0.3, 0.5, 0.8]))}

    return NamedProgram("laplacian_partition", _sq(), expr, oracle, tolerance=1e-6, cfg=FLOAT,
                        sample=sample, compare=_fiedler_error,
                        doc="Fiedler eigenvectors of an undirected graph")


def inv_via_eigen() -> NamedProgram:
    """Inverse from the eigenvectors of the self-adjoint ``A^* A``."""
    A = Var("A")
    B = Var("B")
    ones_b = Ones(B)
    norms = MatMul(ones_b, Transpose(MatMul(MatMul(Transpose(B), B), ones_b)))
    k_nonzero = MatMul(MatMul(Transpose(Ones(A)), Apply("ne0", (Var("Lam"),))), Ones(A))
    z = Apply("eq", (k_nonzero, count_expr(A)))
    body = Let("U", Apply("div_sqrt", (B, norms)),
               Let("Li", Apply("recip", (Var("Lam"),)),
                   Let("C", MatMul(MatMul(MatMul(Var("U"), Var("Li")), Transpose(Var("U"))), Transpose(A)),
                       Let("Z", smul(z, identity_expr(A)), MatMul(Var("C"), Var("Z"))))))
    expr = Let("S", MatMul(Transpose(A), A), EigenPair("B", "Lam", Var("S"), body))

    def sample(rng):
        n = rng.randint(1, 5)
        if rng.random() < 0.15:
            rows = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(n)]
            if n > 1:
                rows[-1] = [x + y for x, y in zip(rows[0], rows[1 % (n - 1)] if n > 2 else rows[0])]
            else:
                rows = [[0]]
            return {"A": Matrix.from_rows(rows)}
        while True:
            m = Matrix.build(n, n, lambda i, j: GaussianRational(Fraction(rng.randint(-8, 8), 2)))
            if np.linalg.cond(m.to_numpy()) < 50:
                return {"A": m}

    return NamedProgram(
        "inv_via_eigen", _sq(), expr, oracle=lambda inst: invert(inst["A"], EXACT),
        tolerance=1e-6, cfg=FLOAT, sample=sample, doc="matrix inverse through eigen")


def all_programs() -> list[NamedProgram]:
    return [constant(7), scalar_mult(), google_matrix(), vector_min(), pagerank(),
            transitive_closure(True), transitive_closure(False), bipartiteness(),
            connected_components(), rank_expr(), laplacian_partition(), inv_via_eigen()]


# -------------------------
# Running the suite
# -------------------------

@dataclass(frozen=True)
class CorpusRow:
    program: str
    trial: int
    dims: str
    error: float
    tolerance: float
    passed: bool
    note: str = ""


def run_corpus(trials: int = 20, seed: int = 0,
               programs: list[NamedProgram] | None = None) -> list[CorpusRow]:
    """Run every program on ``trials`` random instances and compare with its oracle."""
    rows = []
    for prog in programs or all_programs():
        rng = random.Random(f"{seed}:{prog.name}")
        for t in range(trials):
            inst = prog.sample(rng)
            dims = ";".join(f"{k}={m.rows}x{m.cols}" for k, m in sorted(inst.items()))
            try:
                err = prog.error(inst)
                note = ""
            except PreconditionError as exc:
                err, note = float("nan"), f"precondition: {exc}"
            passed = note != "" or err <= prog.tolerance
            rows.append(CorpusRow(prog.name, t, dims, err, prog.tolerance, passed, note))
    return rows


def write_program_files(directory, programs: list[NamedProgram] | None = None) -> list:
    """Write ``<name>.mtl`` and ``<name>.mts`` for every program."""
    from pathlib import Path

    from .parser import format_schema, pretty_print

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for prog in programs or all_programs():
        for suffix, text in ((".mtl", pretty_print(prog.expr)), (".mts", format_schema(prog.schema))):
            path = directory / f"{prog.name}{suffix}"
            path.write_text(text.rstrip("\n") + "\n")
            written.append(path)
    return written
