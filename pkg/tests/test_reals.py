import os
import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from conftest import mat, perturbations, wrongly_accepted
from matlang.config import EXACT, FLOAT
from matlang.evaluator import evaluate, uses_eigen
from matlang.functions import lookup
from matlang.generate import GenOptions, random_case
from matlang.matrix import Matrix
from matlang.parser import parse
from matlang.reals import (
    FN_DEFS, TRUE, And, Eq, Exists, FreeVariableEscape, InputSizedExpr, MissingFnDef, MissingWitness,
    RVar, assign, const, emit_formula, emit_partial_evaluation, eq, fv_names, free_variables,
    ground_check, instance_assignment, mul, ne, parse_formula, serialize_smtlib, smt_formula, sub,
)
from matlang.scalars import GaussianRational as G
from matlang.syntax import Schema, size
from matlang.typecheck import SizeAssignment

GOLDEN = Path(__file__).parent / "golden" / "smt"


def ise(schema, text, **sigma):
    return InputSizedExpr(Schema.of(**schema), parse(text), SizeAssignment(sigma))


def holds(s, inst, out, tol=0):
    return ground_check(emit_formula(s), instance_assignment(s, inst, out), tol)


def test_identity_formula():
    s = ise({"M": "a x b"}, "M", a=1, b=1)
    f = emit_formula(s)
    y_re, y_im, x_re, x_im = (RVar(n) for n in ("y_1_1_re", "y_1_1_im", "x_M_1_1_re", "x_M_1_1_im"))
    assert f.formula == And((Eq(y_re, x_re), Eq(y_im, x_im)))
    assert f.free == ("x_M_1_1_re", "x_M_1_1_im", "y_1_1_re", "y_1_1_im")


def test_scalar_product_is_complex_multiplication():
    s = ise({"M": "a x b", "N": "b x c"}, "M . N", a=1, b=1, c=1)
    text = smt_formula(emit_formula(s).formula)
    assert "(* x_M_1_1_re x_N_1_1_re)" in text and "x_M_1_1_im x_N_1_1_im)" in text
    assert holds(s, {"M": mat([G(1, 2)]), "N": mat([G(3, -1)])}, mat([G(5, 5)]))
    assert not holds(s, {"M": mat([G(1, 2)]), "N": mat([G(3, -1)])}, mat([G(5, 4)]))


def test_eigen_of_jordan_block():
    s = ise({"M": "a x a"}, "eigen(M)", a=2)
    jordan = {"M": mat([0, 1], [0, 0])}
    assert holds(s, jordan, Matrix.zeros(2, 2))
    assert not holds(s, jordan, Matrix.identity(2))


def test_eigen_accepts_any_valid_basis():
    s = ise({"M": "a x a"}, "eigen(M)", a=2)
    d = {"M": mat([2, 0], [0, 5])}
    assert holds(s, d, mat([0, 3], [-2, 0]))
    assert not holds(s, d, mat([1, 1], [0, 1]))
    assert not holds(s, d, Matrix.zeros(2, 2))
    same = {"M": mat([3, 0], [0, 3])}
    assert holds(s, same, mat([1, 1], [1, -1]))
    assert not holds(s, same, mat([1, 1], [0, 1]))


def test_inverse_formula():
    s = ise({"M": "a x a"}, "inv(M)", a=2)
    m = {"M": mat([1, 2], [3, 4])}
    inv = mat([-2, 1], [Fraction(3, 2), Fraction(-1, 2)])
    assert holds(s, m, inv)
    for k in range(4):
        entries = list(inv.entries)
        entries[k] += 1
        assert not holds(s, m, Matrix(2, 2, tuple(entries)))
    singular = {"M": mat([1, 2], [2, 4])}
    assert holds(s, singular, Matrix.zeros(2, 2))
    assert not holds(s, singular, Matrix.identity(2))


@pytest.mark.parametrize("name", sorted(FN_DEFS))
def test_function_definitions_on_test_points(name):
    d = FN_DEFS[name]
    f = lookup(name)
    tower_cfg = EXACT if f.exact else FLOAT
    tol = 0 if f.exact else 1e-9
    rng = random.Random(name)
    points = [G(0), G(1), G(-1), G(2), G(0, 1), G(Fraction(1, 2), -3), G(4), G(-4, 0)]
    for _ in range(40):
        args = [rng.choice(points) for _ in range(d.arity)]
        out = f(args, tower_cfg)
        xs = [(RVar(f"a{i}_re"), RVar(f"a{i}_im")) for i in range(d.arity)]
        o = (RVar("o_re"), RVar("o_im"))
        rho = {}
        for (re_, im_), v in zip(xs + [o], args + [out]):
            v = complex(v) if tol else G.coerce(v)
            rho[re_.name], rho[im_.name] = (v.real, v.imag)
        assert ground_check(d.define(xs, o), rho, tol), (name, args, out)
        rho["o_re"] += 1
        assert not ground_check(d.define(xs, o), rho, tol), (name, args, out)


def test_missing_function_definition(monkeypatch):
    from matlang import reals

    monkeypatch.delitem(reals.FN_DEFS, "add")
    with pytest.raises(MissingFnDef):
        emit_formula(ise({"M": "a x a"}, "apply[add](M, M)", a=1))


def test_ground_check_needs_witnesses():
    f = Exists(("z",), eq(RVar("z"), const(1)), None)
    with pytest.raises(MissingWitness):
        ground_check(f, {})
    s = ise({"M": "a x b"}, "M", a=1, b=1)
    with pytest.raises(MissingWitness):
        ground_check(emit_formula(s), {})


# -- partial evaluation -------------------------------------------------------

def test_partial_evaluation_examples():
    s = ise({"M": "a x a"}, "M . M", a=1)
    pinned = parse_formula("(and (= x_M_1_1_re 3) (= x_M_1_1_im 0) (distinct y_1_1_re 0))")
    assert ground_check(emit_partial_evaluation(s, pinned), {})
    zero = parse_formula("(and (= x_M_1_1_re 0) (= x_M_1_1_im 0) (distinct y_1_1_re 0))")
    assert not ground_check(emit_partial_evaluation(s, zero), {})
    assert ground_check(emit_partial_evaluation(ise({"M": "a x b"}, "M", a=1, b=1), TRUE), {})
    contradictory = parse_formula("(and (= y_1_1_re 0) (= y_1_1_re 1))")
    assert not ground_check(emit_partial_evaluation(ise({"M": "a x b"}, "M", a=1, b=1), contradictory), {})
    sentence = emit_partial_evaluation(s, pinned)
    assert sentence.free == () and free_variables(sentence.formula) == frozenset()


def test_partial_evaluation_rejects_escaping_variables():
    with pytest.raises(FreeVariableEscape):
        emit_partial_evaluation(ise({"M": "a x b"}, "M", a=1, b=1), parse_formula("(= q 1)"))


# -- SMT-LIB ------------------------------------------------------------------

SMT_CASES = {
    "identity": ({"M": "a x b"}, "M", {"a": 1, "b": 1}),
    "product_1x1": ({"M": "a x b", "N": "b x c"}, "M . N", {"a": 1, "b": 1, "c": 1}),
    "inverse_1x1": ({"M": "a x a"}, "inv(M)", {"a": 1}),
    "eigen_1x1": ({"M": "a x a"}, "eigen(M)", {"a": 1}),
    "divide_2x1": ({"v": "a x 1"}, "apply[div](v, apply[add](v, v))", {"a": 2}),
    "vector_min_2": ({"v": "a x 1"}, "let V = v . ones(v)^* in apply[le](V, V^*) . ones(v)", {"a": 2}),
}


def test_identity_script():
    text = serialize_smtlib(emit_formula(ise(*SMT_CASES["identity"][:2], **SMT_CASES["identity"][2])))
    assert text == (
        "(set-logic NRA)\n"
        "(declare-const x_M_1_1_re Real)\n(declare-const x_M_1_1_im Real)\n"
        "(declare-const y_1_1_re Real)\n(declare-const y_1_1_im Real)\n"
        "(assert (= y_1_1_re x_M_1_1_re))\n(assert (= y_1_1_im x_M_1_1_im))\n"
        "(check-sat)\n")


@pytest.mark.parametrize("name", sorted(SMT_CASES))
def test_smtlib_golden(name):
    schema, text, sigma = SMT_CASES[name]
    script = serialize_smtlib(emit_formula(ise(schema, text, **sigma)))
    golden = GOLDEN / f"{name}.smt2"
    if os.environ.get("MATLANG_REGEN_GOLDEN"):
        golden.parent.mkdir(parents=True, exist_ok=True)
        golden.write_text(script)
    assert script == golden.read_text()
    assert script.startswith("(set-logic NRA)\n") and script.endswith("(check-sat)\n")
    assert script.count("(") == script.count(")")
    parse_formula(script)


@pytest.mark.parametrize("name", sorted(SMT_CASES))
def test_smtlib_parses_with_z3(name):
    z3 = pytest.importorskip("z3")
    assertions = z3.parse_smt2_string((GOLDEN / f"{name}.smt2").read_text())
    assert len(assertions) >= 1


def test_eigen_1x1_script_is_satisfiable_with_z3():
    z3 = pytest.importorskip("z3")
    solver = z3.Solver()
    solver.add(z3.parse_smt2_string((GOLDEN / "eigen_1x1.smt2").read_text()))
    solver.set("timeout", 10000)
    assert solver.check() == z3.sat


def test_parse_formula_round_trip():
    f = parse_formula("(and (< a (* 2 b)) (or (= c (- 1)) (not (<= d (/ 1 3)))) (> e 0))")
    again = parse_formula(smt_formula(f))
    assert again == f
    assert ne(RVar("x"), const(0)) == parse_formula("(distinct x 0)")
    assert parse_formula("(= z (- x (* 2 y)))") == eq(RVar("z"), sub(RVar("x"), mul(const(2), RVar("y"))))


# -- properties ---------------------------------------------------------------

def _case(seed):
    rng = random.Random(seed)
    opts = GenOptions(depth=3, inv=True, eigen=rng.random() < 0.5, self_adjoint_eigen=True)
    schema, e, sigma, inst = random_case(rng, opts, max_dim=3)
    return InputSizedExpr(schema, e, sigma), inst


@given(st.integers(0, 2**32 - 1))
def test_free_variable_hygiene(seed):
    s, _ = _case(seed)
    f = emit_formula(s)
    assert free_variables(f.formula) <= set(f.free)
    assert set(f.free) == set(fv_names(s))
    assert len(set(f.free)) == len(f.free)


@given(st.integers(0, 2**32 - 1))
def test_emitted_formula_holds_on_the_result(seed):
    s, inst = _case(seed)
    eig = uses_eigen(s.expr)
    out = evaluate(inst, s.expr, FLOAT if eig else EXACT, s.schema)
    assert holds(s, inst, out, 1e-6 if eig else 0)


def test_assign_names():
    m = mat([G(1, 2)])
    from matlang.reals import x_matrix

    assert assign(x_matrix("M", 1, 1), m) == {"x_M_1_1_re": 1, "x_M_1_1_im": 2}


SIZE_CONSTANT = 64


def size_bound(s: InputSizedExpr) -> int:
    d = max(max(s.sigma.dims(t)) for t in s.schema.values())
    d = max(d, *s.output_dims)
    return SIZE_CONSTANT * size(s.expr) * d ** 6


@given(st.integers(0, 2**32 - 1))
def test_formula_size_is_polynomial(seed):
    s, _ = _case(seed)
    assert emit_formula(s).size <= size_bound(s)


@given(st.integers(0, 2**32 - 1))
def test_perturbed_outputs_are_rejected(seed):
    s, inst = _case(seed)
    eig = uses_eigen(s.expr)
    cfg = FLOAT if eig else EXACT
    out = evaluate(inst, s.expr, cfg, s.schema)
    f, rng = emit_formula(s), random.Random(seed)
    for bad in perturbations(out, rng):
        assert not wrongly_accepted(f, s, inst, bad, 1e-6 if eig else 0)
