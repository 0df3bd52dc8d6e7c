"""MATLANG: a matrix query language with inversion and eigenvectors."""

from .config import EXACT, FLOAT, EvalConfig
from .evaluator import evaluate, eigenvalues_from_basis
from .matrix import Matrix, eigen_canonical, invert, verify_eigen
from .parser import parse, parse_schema, pretty_print
from .scalars import GaussianRational, Tower
from .syntax import MatrixType, Schema
from .typecheck import SizeAssignment, check_conformance, typecheck

__all__ = [
    "EXACT", "FLOAT", "EvalConfig", "GaussianRational", "Matrix", "MatrixType", "Schema",
    "SizeAssignment", "Tower", "check_conformance", "eigen_canonical", "eigenvalues_from_basis",
    "evaluate", "invert", "parse", "parse_schema", "pretty_print", "typecheck", "verify_eigen",
]
