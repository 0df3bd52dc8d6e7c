"""Registry of builtin pointwise functions.

Every function is total: partial operations are extended by zero
(``div(x, 0) = 0``, ``recip(0) = 0``, ``div_sqrt(x, y) = 0`` for ``y <= 0``).
Order comparisons return 0 when an argument is not real.  In the float tower
zero tests and comparisons use the configured ``eps``.
"""

from __future__ import annotations

import cmath
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from .config import EvalConfig
from .scalars import GaussianRational, Tower, coerce, format_scalar, parse_scalar


class UnknownFunction(KeyError):
    pass


class TowerError(Exception):
    """An operation that needs irrational numbers was used in the exact tower."""


@dataclass(frozen=True)
class BuiltinFn:
    name: str
    arity: int
    impl: Callable[[Sequence, EvalConfig], object]
    exact: bool = True
    doc: str = ""

    def __call__(self, args: Sequence, cfg: EvalConfig):
        if len(args) != self.arity:
            raise TypeError(f"{self.name} takes {self.arity} arguments, got {len(args)}")
        if cfg.exact and not self.exact:
            raise TowerError(f"{self.name} is not available in the exact tower")
        return self.impl([coerce(a, cfg.tower) for a in args], cfg)


# -------------------------
# tower-aware predicates
# -------------------------

def is_zero(z, cfg: EvalConfig) -> bool:
    if cfg.exact:
        return not z
    return abs(complex(z)) <= cfg.eps


def real_value(z, cfg: EvalConfig):
    """Real part when ``z`` is real (within eps in the float tower), else None."""
    if cfg.exact:
        return z.re if z.im == 0 else None
    return z.real if abs(z.imag) <= cfg.eps else None


def _tol(cfg: EvalConfig):
    return 0 if cfg.exact else cfg.eps


def _bool(b: bool, cfg: EvalConfig):
    return coerce(1 if b else 0, cfg.tower)


def _num(x, cfg: EvalConfig):
    return coerce(x, cfg.tower)


def _div(args, cfg):
    x, y = args
    return _num(0, cfg) if is_zero(y, cfg) else x / y


def _recip(args, cfg):
    (x,) = args
    return _num(0, cfg) if is_zero(x, cfg) else _num(1, cfg) / x


def _recip_succ(args, cfg):
    (x,) = args
    return _recip([x + 1], cfg)


def _monus(args, cfg):
    x, y = (real_value(a, cfg) for a in args)
    if x is None or y is None or x <= y:
        return _num(0, cfg)
    return _num(x - y, cfg)


def _le(args, cfg):
    x, y = (real_value(a, cfg) for a in args)
    return _bool(x is not None and y is not None and x <= y + _tol(cfg), cfg)


def _lt(args, cfg):
    x, y = (real_value(a, cfg) for a in args)
    return _bool(x is not None and y is not None and x < y - _tol(cfg), cfg)


def _gt0(args, cfg):
    x = real_value(args[0], cfg)
    return _bool(x is not None and x > _tol(cfg), cfg)


def _eq(args, cfg):
    return _bool(is_zero(args[0] - args[1], cfg), cfg)


def _sqrt_real(y):
    return cmath.sqrt(y).real


def _div_sqrt(args, cfg):
    x, y = args
    yr = real_value(y, cfg)
    if yr is None or yr <= _tol(cfg):
        return _num(0, cfg)
    return x / _sqrt_real(yr)


def _sqrt(args, cfg):
    yr = real_value(args[0], cfg)
    if yr is None or yr <= 0:
        return _num(0, cfg)
    return _num(_sqrt_real(yr), cfg)


def _re(args, cfg):
    z = args[0]
    return _num(z.real, cfg)


def _im(args, cfg):
    z = args[0]
    return _num(z.imag, cfg)


_TABLE = [
    BuiltinFn("add", 2, lambda a, c: a[0] + a[1], doc="x + y"),
    BuiltinFn("sub", 2, lambda a, c: a[0] - a[1], doc="x - y"),
    BuiltinFn("mul", 2, lambda a, c: a[0] * a[1], doc="x * y"),
    BuiltinFn("neg", 1, lambda a, c: -a[0], doc="-x"),
    BuiltinFn("div", 2, _div, doc="x / y, 0 when y = 0"),
    BuiltinFn("recip", 1, _recip, doc="1 / x, 0 when x = 0"),
    BuiltinFn("recip_succ", 1, _recip_succ, doc="1 / (x + 1), 0 when x = -1"),
    BuiltinFn("monus", 2, _monus, doc="x - y if x, y real and x >= y, else 0"),
    BuiltinFn("le", 2, _le, doc="1 if x <= y (both real) else 0"),
    BuiltinFn("lt", 2, _lt, doc="1 if x < y (both real) else 0"),
    BuiltinFn("eq", 2, _eq, doc="1 if x = y else 0"),
    BuiltinFn("ne0", 1, lambda a, c: _bool(not is_zero(a[0], c), c), doc="1 if x != 0 else 0"),
    BuiltinFn("gt0", 1, _gt0, doc="1 if x real and x > 0 else 0"),
    BuiltinFn("and", 2, lambda a, c: _bool(not is_zero(a[0], c) and not is_zero(a[1], c), c),
              doc="boolean and, nonzero is true"),
    BuiltinFn("or", 2, lambda a, c: _bool(not is_zero(a[0], c) or not is_zero(a[1], c), c),
              doc="boolean or"),
    BuiltinFn("not", 1, lambda a, c: _bool(is_zero(a[0], c), c), doc="boolean not"),
    BuiltinFn("andnot", 2, lambda a, c: _bool(not is_zero(a[0], c) and is_zero(a[1], c), c),
              doc="x and not y"),
    BuiltinFn("conj", 1, lambda a, c: a[0].conjugate(), doc="complex conjugate"),
    BuiltinFn("re", 1, _re, doc="real part"),
    BuiltinFn("im", 1, _im, doc="imaginary part"),
    BuiltinFn("div_sqrt", 2, _div_sqrt, exact=False, doc="x / sqrt(y), 0 unless y real > 0"),
    BuiltinFn("sqrt", 1, _sqrt, exact=False, doc="sqrt(x) for real x >= 0, else 0"),
]

REGISTRY: dict[str, BuiltinFn] = {f.name: f for f in _TABLE}

CONST_PREFIX = "const:"


def constant_value(name: str) -> GaussianRational:
    return parse_scalar(name[len(CONST_PREFIX):])


def _const_fn(name: str) -> BuiltinFn:
    value = constant_value(name)

    def impl(args, cfg):
        return coerce(value if cfg.exact else complex(value), cfg.tower)

    return BuiltinFn(name, 1, impl, doc=f"the constant {value}")


def lookup(name: str) -> BuiltinFn:
    if name in REGISTRY:
        return REGISTRY[name]
    if name.startswith(CONST_PREFIX):
        try:
            return _const_fn(name)
        except ValueError:
            pass
    raise UnknownFunction(name)


def is_known(name: str) -> bool:
    try:
        lookup(name)
    except UnknownFunction:
        return False
    return True


def builtin_registry() -> frozenset[BuiltinFn]:
    """The fixed registry (``const:<c>`` constants are resolved on demand)."""
    return frozenset(_TABLE)


def const_name(value) -> str:
    return CONST_PREFIX + format_scalar(GaussianRational.coerce(value))


BOOLEAN_FNS = frozenset({"and", "or", "not", "andnot"})


def apply_const(name: str, tower: Tower):
    """Value of a ``const:`` function, for callers that apply it with no arguments."""
    v = constant_value(name)
    return coerce(v if tower is Tower.EXACT else complex(v), tower)
