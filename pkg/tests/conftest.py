import random

import pytest
from hypothesis import HealthCheck, settings

from matlang.matrix import Matrix

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def mat(*rows) -> Matrix:
    """Exact matrix from nested rows of ints, Fractions or GaussianRationals."""
    return Matrix.from_rows([list(r) for r in rows])


@pytest.fixture
def rng():
    return random.Random(20240611)


def root_eigen_arg(e):
    """The argument of an eigen at the root of ``e`` (looking through lets), with
    the enclosing lets kept so it evaluates on the same instance; else None."""
    from matlang.evaluator import desugar
    from matlang.syntax import Eigen, Let

    def go(e, wrap):
        match e:
            case Let(name, value, body):
                return go(body, lambda x: wrap(Let(name, value, x)))
            case Eigen(arg):
                return wrap(arg)
        return None

    return go(desugar(e), lambda x: x)


def wrongly_accepted(f, ise, inst, bad, tol) -> bool:
    """True if the emitted formula ``f`` holds for the wrong output ``bad``.

    With eigen at the root any valid eigenbasis is a correct answer, so a
    satisfying ``bad`` only counts as wrong if it fails the basis check."""
    from matlang.config import FLOAT
    from matlang.evaluator import evaluate
    from matlang.matrix import verify_eigen
    from matlang.reals import ground_check, instance_assignment

    if not ground_check(f, instance_assignment(ise, inst, bad), tol):
        return False
    arg = root_eigen_arg(ise.expr)
    return arg is None or not verify_eigen(evaluate(inst, arg, FLOAT, ise.schema), bad, FLOAT)


def perturbations(out, rng, count=3):
    """Copies of ``out`` with one entry moved by a nonzero rational."""
    from fractions import Fraction

    from matlang.scalars import GaussianRational

    for _ in range(count):
        k = rng.randrange(len(out.entries))
        step = GaussianRational(Fraction(rng.choice([1, -1, 2, -3]), rng.choice([1, 2])),
                                rng.choice([0, 0, 1]))
        entries = list(out.entries)
        entries[k] = entries[k] + (step if isinstance(entries[k], GaussianRational) else complex(step))
        yield type(out)(out.rows, out.cols, tuple(entries))


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
