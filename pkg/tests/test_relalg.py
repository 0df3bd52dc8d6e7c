import os
import random
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from conftest import mat
from matlang.config import EXACT
from matlang.evaluator import evaluate
from matlang.generate import GenOptions, random_case, random_instance, random_sigma
from matlang.parser import parse
from matlang.relalg import (
    ApplyFn, B, Difference, N, NotGridTotal, Product, Project, Relation, RelTypeError, RelUnion, RelVar,
    Select, Sum, UnsupportedConstruct, encode_matrix, eval_rel, format_rel, rel_decode, rel_encode,
    rel_schema, rel_type, selects_numerical, translate, uses_difference,
)
from matlang.scalars import GaussianRational as G
from matlang.syntax import MatrixType, Schema
from matlang.typecheck import SizeAssignment, typecheck

GOLDEN = Path(__file__).parent / "golden" / "relalg"


def rel(type_, *tuples):
    return Relation(tuple(type_), frozenset(tuple(G(x) if k == N else x for x, k in zip(t, type_))
                                            for t in tuples))


@pytest.mark.parametrize("m, t, expected", [
    (mat([1, 0], [0, 1]), "a x b", rel("bbn", (1, 1, 1), (1, 2, 0), (2, 1, 0), (2, 2, 1))),
    (mat([7], [8]), "a x 1", rel("bn", (1, 7), (2, 8))),
    (mat([7, 8]), "1 x a", rel("bn", (1, 7), (2, 8))),
    (mat([5]), "1 x 1", rel("n", (5,))),
])
def test_encode_decode(m, t, expected):
    r_, _, c_ = t.split()
    mt = MatrixType.of(r_, c_)
    assert encode_matrix(m, mt) == expected
    sigma = SizeAssignment({s: n for s, n in zip((r_, c_), m.shape) if s != "1"})
    assert rel_decode(expected, mt, sigma) == m


def test_decode_needs_grid_total():
    t = MatrixType.of("a", "1")
    with pytest.raises(NotGridTotal):
        rel_decode(rel("bn", (1, 7)), t, SizeAssignment({"a": 2}))
    with pytest.raises(NotGridTotal):
        rel_decode(rel("bn", (1, 7), (1, 8)), t, SizeAssignment({"a": 1}))
    with pytest.raises(NotGridTotal):
        rel_decode(rel("bn", (1, 7), (3, 8)), t, SizeAssignment({"a": 2}))


@pytest.mark.parametrize("e, ri, expected", [
    (Sum(3, (1,), RelVar("r")), {"r": rel("bbn", (1, 1, 2), (1, 2, 3), (2, 1, 4))},
     rel("bn", (1, 5), (2, 4))),
    (Select(1, 2, True, RelVar("r")), {"r": rel("bb", (1, 1), (1, 2))}, rel("bb", (1, 1))),
    (ApplyFn("mul", (1, 2), RelVar("r")), {"r": rel("nn", (2, 3))}, rel("nnn", (2, 3, 6))),
    (Sum(1, (), RelVar("r")), {"r": rel("n", (2,), (3,))}, rel("n", (5,))),
    (Sum(2, (), RelVar("r")), {"r": Relation(("b", "n"), frozenset())}, rel("n", (0,))),
    (Difference(RelVar("r"), RelVar("s")), {"r": rel("b", (1,), (2,)), "s": rel("b", (2,))}, rel("b", (1,))),
    (RelUnion(RelVar("r"), RelVar("s")), {"r": rel("b", (1,)), "s": rel("b", (2,))}, rel("b", (1,), (2,))),
    (Project((2,), Product(RelVar("r"), RelVar("s"))), {"r": rel("b", (1,)), "s": rel("b", (2,))},
     rel("b", (2,))),
    (ApplyFn("const:0", (), RelVar("r")), {"r": rel("b", (1,))}, rel("bn", (1, 0))),
])
def test_eval_rel(e, ri, expected):
    assert eval_rel(ri, e) == expected


@pytest.mark.parametrize("e", [
    Select(1, 2, True, RelVar("r")),          # numerical column in a selection
    Sum(1, (2,), RelVar("r")),                # summing a base column
    ApplyFn("mul", (1, 2), RelVar("r")),      # function on a base column
    RelUnion(RelVar("r"), RelVar("u")),       # type mismatch
    Project((4,), RelVar("r")),
])
def test_rel_type_errors(e):
    with pytest.raises(RelTypeError):
        rel_type({"r": (B, N), "u": (N,)}, e)


def test_translation_examples_from_the_proof_cases():
    s = Schema.of(M="a x b", N="b x c", v="a x 1")
    assert format_rel(translate(s, parse("M^*"))) == "π[1,2,4](Apply[conj;3](π[2,1,3](M)))"
    assert format_rel(translate(s, parse("M . N"))) == "Sum[7;1,5](Apply[mul;3,6](σ[$2=$4]((M × N))))"
    assert format_rel(translate(s, parse("diag(v)"))) == (
        "(σ[$1=$2]((π[1](v) × v)) ∪ Apply[const:0;](σ[$1≠$2]((π[1](v) × π[1](v)))))")


def test_translate_rejects_inv_and_eigen():
    for text in ("inv(A)", "eigen(A)", "let (B, L) = eigen(A) in L"):
        with pytest.raises(UnsupportedConstruct):
            translate(Schema.of(A="a x a"), parse(text))


SHAPES = {"G": ("a", "b"), "C": ("a", "1"), "R": ("1", "a"), "S": ("1", "1")}


def _shape_cases():
    cases = {}
    # MatMul: left r x k, right k x c with each of r, k, c a symbol or 1
    for r in ("a", "1"):
        for k in ("b", "1"):
            for c in ("c", "1"):
                name = f"matmul_{r}{k}_{k}{c}"
                cases[name] = (Schema.of(M=f"{r} x {k}", N=f"{k} x {c}"), "M . N")
    for shape, (r, c) in SHAPES.items():
        cases[f"apply1_{shape}"] = (Schema.of(M=f"{r} x {c}"), "apply[neg](M)")
        cases[f"apply2_{shape}"] = (Schema.of(M=f"{r} x {c}", N=f"{r} x {c}"), "apply[monus](M, N)")
        cases[f"const_{shape}"] = (Schema.of(M=f"{r} x {c}"), "apply[const:3](M)")
        cases[f"transpose_{shape}"] = (Schema.of(M=f"{r} x {c}"), "M^*")
        cases[f"ones_{shape}"] = (Schema.of(M=f"{r} x {c}"), "ones(M)")
    cases["diag_C"] = (Schema.of(M="a x 1"), "diag(M)")
    cases["diag_S"] = (Schema.of(M="1 x 1"), "diag(M)")
    cases["let"] = (Schema.of(M="a x b"), "let P = M^* in P . M")
    return cases


CASES = _shape_cases()


@pytest.mark.parametrize("name", sorted(CASES))
def test_translation_golden_and_equivalence(name):
    schema, text = CASES[name]
    e = parse(text)
    plan = translate(schema, e)
    golden = GOLDEN / f"{name}.txt"
    rendered = format_rel(plan) + "\n"
    if os.environ.get("MATLANG_REGEN_GOLDEN"):
        golden.parent.mkdir(parents=True, exist_ok=True)
        golden.write_text(rendered)
    assert rendered == golden.read_text()
    assert not uses_difference(plan) and not selects_numerical(rel_schema(schema), plan)
    rng = random.Random(name)
    for _ in range(5):
        sigma = random_sigma(rng, schema, max_dim=4)
        inst = random_instance(rng, schema, sigma, complex_=True)
        out = eval_rel(rel_encode(inst, schema), plan)
        assert rel_decode(out, typecheck(schema, e), sigma) == evaluate(inst, e, EXACT, schema)


@given(st.integers(0, 2**32 - 1))
def test_translation_agrees_with_evaluation(seed):
    rng = random.Random(seed)
    schema, e, sigma, inst = random_case(rng, GenOptions(depth=4), complex_=True)
    plan = translate(schema, e)
    decoded = rel_decode(eval_rel(rel_encode(inst, schema), plan), typecheck(schema, e), sigma)
    assert decoded == evaluate(inst, e, EXACT, schema)
