import random

import pytest
from hypothesis import given, strategies as st

from matlang.config import EXACT, FLOAT
from matlang.evaluator import StuckError, evaluate
from matlang.generate import GenOptions, random_instance, random_program, random_schema, random_sigma
from matlang.matrix import Matrix
from matlang.parser import parse
from matlang.syntax import MatrixType, Schema
from matlang.typecheck import (
    STATIC_ONLY, ConformanceError, ErrorKind, SizeAssignment, TypeCheckError, VariableSetMismatch,
    check_conformance, typecheck,
)

MN = Schema.of(M="a x b", N="c x b")


def t(text):
    r, _, c = text.split()
    return MatrixType.of(r, c)


@pytest.mark.parametrize("schema, text, expected", [
    (MN, "M . N^*", "a x c"),
    (Schema.of(M="a x b"), "diag(ones(M))", "a x a"),
    (Schema.of(A="a x a"), "inv(A)", "a x a"),
    (Schema.of(A="a x a"), "eigen(A)", "a x a"),
    (Schema.of(A="a x a"), "let (B, L) = eigen(A) in B . L", "a x a"),
    (Schema.of(M="a x b"), "let N = (ones(M))^* in apply[const:7](ones(N))", "1 x 1"),
    (Schema.of(M="a x b"), "let M = M^* in M", "b x a"),
    (Schema.of(v="a x 1"), "apply[add](v, v)", "a x 1"),
    (Schema.of(s="1 x 1"), "diag(s)", "1 x 1"),
])
def test_typecheck_examples(schema, text, expected):
    assert typecheck(schema, parse(text)) == t(expected)


@pytest.mark.parametrize("schema, text, kind, terms", [
    (MN, "M . N", ErrorKind.MUL_DIM_MISMATCH, ("b", "c")),
    (MN, "P", ErrorKind.UNBOUND_VARIABLE, ()),
    (MN, "diag(M)", ErrorKind.DIAG_ON_NON_VECTOR, ()),
    (MN, "apply[add](M, N)", ErrorKind.APPLY_SHAPE_MISMATCH, ()),
    (MN, "inv(M)", ErrorKind.INV_NON_SQUARE, ()),
    (MN, "eigen(M)", ErrorKind.EIGEN_NON_SQUARE, ()),
    (MN, "apply[frobnicate](M)", ErrorKind.UNKNOWN_FUNCTION, ()),
    (MN, "apply[add](M)", ErrorKind.ARITY_MISMATCH, ()),
])
def test_typecheck_errors(schema, text, kind, terms):
    with pytest.raises(TypeCheckError) as info:
        typecheck(schema, parse(text))
    assert info.value.kind is kind
    assert tuple(str(x) for x in info.value.terms)[: len(terms)] == terms


def test_leftmost_innermost_error_wins():
    with pytest.raises(TypeCheckError) as info:
        typecheck(MN, parse("inv(M . N) . P"))
    assert info.value.kind is ErrorKind.MUL_DIM_MISMATCH


# Each dynamic error kind: a conforming instance on which evaluation without
# the type check gets stuck.
@pytest.mark.parametrize("schema, text", [
    (MN, "M . N"),
    (MN, "diag(M)"),
    (MN, "apply[add](M, N)"),
    (MN, "inv(M)"),
    (MN, "eigen(M)"),
])
def test_failure_soundness(schema, text):
    from matlang.evaluator import _eval

    e = parse(text)
    with pytest.raises(TypeCheckError) as info:
        typecheck(schema, e)
    assert info.value.kind not in STATIC_ONLY
    inst = {"M": Matrix.build(2, 3, lambda i, j: i + j), "N": Matrix.build(4, 3, lambda i, j: 1)}
    with pytest.raises(StuckError):
        _eval(inst, e, FLOAT)


def test_conformance_examples():
    assert dict(check_conformance(Schema.of(M="a x b"), {"M": Matrix.build(3, 4, lambda i, j: 0)})) \
        == {"a": 3, "b": 4}
    with pytest.raises(ConformanceError):
        check_conformance(Schema.of(M="a x a"), {"M": Matrix.build(3, 4, lambda i, j: 0)})
    with pytest.raises(ConformanceError) as info:
        check_conformance(Schema.of(M="a x b", N="a x c"),
                          {"M": Matrix.build(2, 3, lambda i, j: 0), "N": Matrix.build(5, 4, lambda i, j: 0)})
    assert "2" in str(info.value) and "5" in str(info.value)
    with pytest.raises(VariableSetMismatch):
        check_conformance(Schema.of(M="a x b"), {"N": Matrix.build(1, 1, lambda i, j: 0)})
    with pytest.raises(ConformanceError):
        check_conformance(Schema.of(v="a x 1"), {"v": Matrix.build(2, 2, lambda i, j: 0)})


def test_distinct_symbols_may_share_a_value():
    sigma = check_conformance(Schema.of(M="a x b"), {"M": Matrix.build(2, 2, lambda i, j: 0)})
    assert dict(sigma) == {"a": 2, "b": 2}


def test_size_assignment_parse():
    assert dict(SizeAssignment.parse("a=3, b=4")) == {"a": 3, "b": 4}
    with pytest.raises(ValueError):
        SizeAssignment({"a": 0})


@given(st.integers(0, 2**32 - 1))
def test_safety_dimensions(seed):
    """Typechecked programs evaluate on conforming instances to matrices of the inferred dimensions."""
    rng = random.Random(seed)
    schema = random_schema(rng)
    sigma = random_sigma(rng, schema, max_dim=5)
    e = random_program(rng, schema, GenOptions(depth=4))
    out = typecheck(schema, e)
    result = evaluate(random_instance(rng, schema, sigma), e, EXACT, schema)
    assert result.shape == sigma.dims(out)
