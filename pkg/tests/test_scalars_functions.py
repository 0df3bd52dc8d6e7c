from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from matlang.config import EXACT, FLOAT, EvalConfig
from matlang.functions import (
    TowerError, UnknownFunction, builtin_registry, const_name, is_known, lookup,
)
from matlang.scalars import GaussianRational as G, Tower, format_scalar, parse_scalar

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=12)
gaussians = st.builds(G, fractions, fractions)


@pytest.mark.parametrize("text, value", [
    ("3", G(3)),
    ("-1/2", G(Fraction(-1, 2))),
    ("0.15", G(Fraction(3, 20))),
    ("1+2i", G(1, 2)),
    ("1-i", G(1, -1)),
    ("i", G(0, 1)),
    ("-2/3i", G(0, Fraction(-2, 3))),
    (" 4 - 4i ", G(4, -4)),
])
def test_parse_scalar(text, value):
    assert parse_scalar(text) == value


@pytest.mark.parametrize("text", ["", "1+", "2x", "1//2", "i2"])
def test_parse_scalar_rejects(text):
    with pytest.raises(ValueError):
        parse_scalar(text)


@pytest.mark.parametrize("value, text", [
    (G(1, -1), "1-i"), (G(0, -1), "-i"), (G(0, 2), "2i"), (G(Fraction(3, 2), Fraction(1, 3)), "3/2+1/3i"),
    (G(0), "0"), (0.25 + 0j, "0.25"), (-0.0 + 0j, "0"), (2 + 0j, "2"),
])
def test_format_scalar(value, text):
    assert format_scalar(value) == text


@given(gaussians)
def test_scalar_text_round_trip(z):
    assert parse_scalar(format_scalar(z)) == z


@given(gaussians, gaussians)
def test_gaussian_field_laws(a, b):
    assert a + b == b + a
    assert a * b == b * a
    assert (a - b) + b == a
    if b:
        assert (a / b) * b == a
    assert complex(a * b) == pytest.approx(complex(a) * complex(b))
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()


def call(name, *args, cfg=EXACT):
    return lookup(name)(list(args), cfg)


@pytest.mark.parametrize("name, args, expected", [
    ("monus", (5, 3), 2),
    ("monus", (3, 5), 0),
    ("div", (1, 0), 0),
    ("div", (0, 0), 0),
    ("div", (3, 4), Fraction(3, 4)),
    ("recip", (4,), Fraction(1, 4)),
    ("recip", (0,), 0),
    ("recip_succ", (3,), Fraction(1, 4)),
    ("le", (2, 2), 1),
    ("le", (3, 2), 0),
    ("lt", (2, 2), 0),
    ("eq", (G(1, 1), G(1, 1)), 1),
    ("ne0", (G(0, 1),), 1),
    ("gt0", (-1,), 0),
    ("and", (1, 0), 0),
    ("or", (1, 0), 1),
    ("not", (0,), 1),
    ("andnot", (1, 0), 1),
    ("conj", (G(1, 2),), G(1, -2)),
    ("re", (G(1, 2),), 1),
    ("im", (G(1, 2),), 2),
    ("le", (G(1, 1), 5), 0),
    ("gt0", (G(1, 1),), 0),
])
def test_builtin_values_exact(name, args, expected):
    assert call(name, *[G.coerce(a) for a in args]) == G.coerce(expected)


@pytest.mark.parametrize("name, args, expected", [
    ("recip", (4,), 0.25),
    ("div_sqrt", (3, 4), 1.5),
    ("div_sqrt", (3, -4), 0),
    ("sqrt", (9,), 3),
    ("eq", (0.1 + 0.2, 0.3), 1),
    ("ne0", (1e-12,), 0),
])
def test_builtin_values_float(name, args, expected):
    assert call(name, *args, cfg=FLOAT) == pytest.approx(expected)


def test_sqrt_family_is_float_only():
    with pytest.raises(TowerError):
        call("sqrt", G(4))


def test_constants_and_registry():
    assert call(const_name(7), G(3)) == G(7)
    assert call(const_name(G(1, -1)), G(0)) == G(1, -1)
    assert is_known("const:1/2") and not is_known("frobnicate")
    with pytest.raises(UnknownFunction):
        lookup("frobnicate")
    names = {f.name for f in builtin_registry()}
    assert {"monus", "div", "recip", "le", "eq", "ne0", "gt0", "and", "or", "not", "conj", "re", "im",
            "div_sqrt", "recip_succ"} <= names
    assert all(f.arity >= 1 for f in builtin_registry())


def test_eval_config(monkeypatch):
    assert EvalConfig().eps == 1e-9 and EvalConfig().delta == 1e-6
    monkeypatch.setenv("MATLANG_EPS", "1e-7")
    monkeypatch.setenv("MATLANG_DELTA", "1e-4")
    cfg = EvalConfig.from_env(Tower.EXACT)
    assert (cfg.eps, cfg.delta, cfg.exact) == (1e-7, 1e-4, True)
    with pytest.raises(ValueError):
        EvalConfig(eps=0)
