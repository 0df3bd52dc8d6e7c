import random
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import mat
from matlang.config import EXACT, FLOAT
from matlang.corpus import (
    PreconditionError, all_programs, bipartiteness, connected_components, constant, google_matrix,
    inv_via_eigen, laplacian_partition, pagerank, random_rational, rank_expr, run_corpus, scalar_mult,
    transitive_closure, vector_min, warshall, write_program_files,
)
from matlang.matrix import Matrix, invert, max_abs_diff
from matlang.parser import format_schema, parse, parse_schema
from matlang.scalars import GaussianRational as G
from matlang.typecheck import typecheck

PROGRAMS = Path(__file__).parent.parent / "programs"


def digraph(n, edges):
    return Matrix.build(n, n, lambda i, j: int((i + 1, j + 1) in edges))


def undirected(n, edges):
    return digraph(n, set(edges) | {(j, i) for i, j in edges})


def cycle(n):
    return {(i, i % n + 1) for i in range(1, n + 1)}


def test_every_program_typechecks():
    progs = all_programs()
    assert len({p.name for p in progs}) == len(progs) == 12
    for p in progs:
        typecheck(p.schema, p.expr)


def test_shipped_program_files_are_current(tmp_path):
    for path in write_program_files(tmp_path):
        shipped = PROGRAMS / path.name
        assert shipped.read_text() == path.read_text(), path.name
    for p in all_programs():
        assert parse((PROGRAMS / f"{p.name}.mtl").read_text()) == p.expr
        shipped = parse_schema((PROGRAMS / f"{p.name}.mts").read_text())
        assert format_schema(shipped) == format_schema(p.schema)


@pytest.mark.parametrize("c, expected", [(7, 7), (0, 0), (1 - Fraction(85, 100), Fraction(3, 20))])
def test_constant(c, expected):
    p = constant(c)
    assert p.run({"M": Matrix.zeros(3, 3)}) == mat([expected])


def test_scalar_mult_examples(rng):
    p = scalar_mult()
    a = random_rational(rng, 3, 4)
    assert p.run({"C": mat([1]), "A": a}) == a
    assert p.run({"C": mat([0]), "A": a}) == Matrix.zeros(3, 4)
    c = random_rational(rng, 1, 1)
    assert p.run({"C": c, "A": a}) == Matrix.build(3, 4, lambda i, j: c[0, 0] * a[i, j])


def test_google_matrix_examples():
    p = google_matrix(Fraction(85, 100))
    two_cycle = {"A": digraph(2, cycle(2))}
    assert p.error(two_cycle) <= 1e-12
    g = p.run(two_cycle).to_numpy().real
    assert np.allclose(g, [[0.075, 0.925], [0.925, 0.075]], atol=1e-12)
    complete = {"A": Matrix.build(3, 3, lambda i, j: 1)}
    g = p.run(complete).to_numpy().real
    assert p.error(complete) <= 1e-12
    assert np.allclose(g.sum(axis=1), 1, atol=1e-12) and np.allclose(g, 1 / 3, atol=1e-12)


def test_google_matrix_rejects_sinks():
    with pytest.raises(PreconditionError):
        google_matrix().run({"A": digraph(3, {(1, 2), (2, 1)})})


@pytest.mark.parametrize("v, expected", [((3, 1, 2), 1), ((5, 5, 5), 5), ((9,), 9),
                                         ((Fraction(-1, 2), 4, Fraction(-1, 3)), Fraction(-1, 2))])
def test_vector_min(v, expected):
    assert vector_min().run({"v": mat(*[[x] for x in v])}) == mat([expected])


@pytest.mark.parametrize("n, edges, expected", [
    (2, cycle(2), [0.5, 0.5]),
    (3, cycle(3), [1 / 3] * 3),
    (4, {(1, 2), (1, 3), (1, 4), (2, 1), (3, 1), (4, 1)}, None),
])
def test_pagerank(n, edges, expected):
    p = pagerank(Fraction(85, 100))
    inst = {"A": digraph(n, edges)}
    assert p.error(inst) <= 1e-6
    v = p.run(inst).to_numpy().real.ravel()
    assert abs(v.sum() - 1) <= 1e-9
    if expected is not None:
        assert np.allclose(v, expected, atol=1e-9)
    else:
        assert v[0] > v[1] == pytest.approx(v[2]) == pytest.approx(v[3])


def test_transitive_closure_examples():
    path = {"A": digraph(3, {(1, 2), (2, 3)})}
    assert transitive_closure(False).run(path) == digraph(3, {(1, 2), (2, 3), (1, 3)})
    assert transitive_closure(True).run(path) == digraph(3, {(1, 1), (2, 2), (3, 3), (1, 2), (2, 3), (1, 3)})
    assert transitive_closure(True).run({"A": Matrix.zeros(4, 4)}) == Matrix.identity(4)
    assert transitive_closure(False).run({"A": Matrix.zeros(4, 4)}) == Matrix.zeros(4, 4)
    assert transitive_closure(False).run({"A": digraph(3, cycle(3))}) == Matrix.build(3, 3, lambda i, j: 1)


def test_warshall_oracle():
    assert warshall(digraph(2, {(1, 2)}), False) == digraph(2, {(1, 2)})
    assert warshall(digraph(2, {(1, 2)}), True) == digraph(2, {(1, 1), (2, 2), (1, 2)})


@pytest.mark.parametrize("n, edges, expected", [
    (4, cycle(4), True), (6, cycle(6), True), (3, cycle(3), False), (5, cycle(5), False),
    (2, {(1, 2)}, True), (1, set(), True), (4, {(1, 2), (3, 4)}, True),
    (5, {(1, 2), (2, 3), (3, 1), (4, 5)}, False),
])
def test_bipartiteness(n, edges, expected):
    p = bipartiteness()
    inst = {"R": undirected(n, edges)}
    assert p.run(inst) == Matrix.build(n, n, lambda i, j: int(expected))
    assert p.check(inst)


def test_bipartiteness_precondition():
    with pytest.raises(PreconditionError):
        bipartiteness().run({"R": digraph(2, {(1, 2)})})
    with pytest.raises(PreconditionError):
        bipartiteness().run({"R": digraph(2, {(1, 1)})})


@pytest.mark.parametrize("n, edges, expected", [
    (5, set(), 5), (1, set(), 1), (4, cycle(4), 1), (6, cycle(3) | {(4, 5)}, 3), (3, {(1, 2)}, 2),
])
def test_connected_components(n, edges, expected):
    assert connected_components().run({"R": digraph(n, edges)}) == mat([expected])


@pytest.mark.parametrize("a, expected", [
    (Matrix.identity(4), 4), (Matrix.build(3, 3, lambda i, j: 1), 1), (Matrix.zeros(2, 2), 0),
    (mat([1, 2], [2, 4]), 1), (mat([2, 1], [1, 2]), 2),
])
def test_rank(a, expected):
    r = rank_expr().run({"A": a})
    assert abs(complex(r[0, 0]) - expected) <= 1e-6


def _fiedler_columns(a):
    b = laplacian_partition().run({"A": a}).to_numpy()
    return [b[:, j].real for j in range(b.shape[1]) if np.abs(b[:, j]).max() > 1e-9]


def test_laplacian_two_disjoint_edges():
    a = undirected(4, {(1, 2), (3, 4)})
    assert laplacian_partition().check({"A": a})
    cols = _fiedler_columns(a)
    assert len(cols) == 2  # lambda_2 = 0 repeats lambda_1


def test_laplacian_path_sign_pattern():
    a = undirected(4, {(1, 2), (2, 3), (3, 4)})
    assert laplacian_partition().check({"A": a})
    (v,) = _fiedler_columns(a)
    signs = np.sign(v) * np.sign(v[0])
    assert list(signs) == [1, 1, -1, -1]


def test_laplacian_k2():
    a = undirected(2, {(1, 2)})
    p = laplacian_partition()
    assert complex(p.oracle({"A": a})[0, 0]).real == pytest.approx(2)
    assert p.check({"A": a})
    (v,) = _fiedler_columns(a)
    assert v[0] == pytest.approx(-v[1])


def test_inv_via_eigen_examples():
    p = inv_via_eigen()
    assert max_abs_diff(p.run({"A": Matrix.identity(3)}), Matrix.identity(3)) <= 1e-9
    singular = mat([1, 2], [2, 4])
    assert invert(singular, EXACT) == Matrix.zeros(2, 2)
    assert max_abs_diff(p.run({"A": singular}), Matrix.zeros(2, 2)) <= 1e-9
    a = mat([2, 1], [1, 3])
    assert max_abs_diff(p.run({"A": a}), invert(a, EXACT)) <= 1e-6
    nonsym = mat([0, 1], [-2, 1])
    assert max_abs_diff(p.run({"A": nonsym}), invert(nonsym, EXACT)) <= 1e-6


@pytest.mark.parametrize("prog", all_programs(), ids=lambda p: p.name)
@given(seed=st.integers(0, 2**32 - 1))
def test_program_matches_oracle(prog, seed):
    inst = prog.sample(random.Random(seed))
    assert prog.error(inst) <= prog.tolerance


def test_exact_programs_stay_exact():
    for p in all_programs():
        assert p.cfg in (EXACT, FLOAT)
        if p.tolerance == 0:
            assert p.cfg == EXACT, p.name


def test_run_corpus_is_deterministic_and_green():
    rows = run_corpus(trials=3, seed=5)
    again = run_corpus(trials=3, seed=5)
    assert [(r.program, r.dims, r.passed) for r in rows] == [(r.program, r.dims, r.passed) for r in again]
    assert all(r.passed for r in rows)
    assert {r.program for r in rows} == {p.name for p in all_programs()}


def test_run_corpus_notes_preconditions():
    p = google_matrix()
    bad = type(p)(p.name, p.schema, p.expr, p.oracle, p.tolerance, p.cfg,
                  sample=lambda rng: {"A": Matrix.zeros(2, 2)}, precondition=p.precondition)
    (row,) = run_corpus(trials=1, programs=[bad])
    assert row.note.startswith("precondition") and row.passed


def test_scalar_entries_are_gaussian_rationals():
    assert isinstance(constant(7).run({"M": mat([1])})[0, 0], G)
