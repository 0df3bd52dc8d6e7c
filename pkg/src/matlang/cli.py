"""Command-line entry point: ``matlang <subcommand> ...``.

Exit status is 0 on success, 1 on a domain error (bad program, ill-typed
expression, nonconforming instance, invalid basis, failing corpus run) and 2
on a usage error (bad flags, missing files).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from .binrel import EmptySchema, compile_binrel, parse_binrel
from .config import EvalConfig
from .corpus import PreconditionError, run_corpus
from .evaluator import InvalidBasis, StuckError, check_tower, evaluate
from .functions import TowerError, UnknownFunction
from .io import InstanceFormatError, format_matrix, read_manifest, read_matrix
from .matrix import ShapeError, verify_eigen
from .parser import DuplicateVariable, ParseError, parse, parse_schema, pretty_print
from .reals import (
    FreeVariableEscape, InputSizedExpr, emit_formula, emit_partial_evaluation, parse_formula,
    serialize_smtlib,
)
from .relalg import (
    NotGridTotal, RelTypeError, UnsupportedConstruct, eval_rel, format_rel, format_relation,
    rel_encode, translate,
)
from .scalars import Tower
from .syntax import Schema
from .typecheck import (
    ConformanceError, SizeAssignment, TypeCheckError, VariableSetMismatch, check_conformance,
    typecheck,
)

DOMAIN_ERRORS = (
    ParseError, DuplicateVariable, TypeCheckError, ConformanceError, VariableSetMismatch,
    InstanceFormatError, TowerError, UnknownFunction, UnsupportedConstruct, RelTypeError,
    NotGridTotal, ShapeError, InvalidBasis, StuckError, FreeVariableEscape, EmptySchema,
    PreconditionError,
)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    schema: Path | None = None
    program: Path | None = None
    instance: Path | None = None
    tower: str = "auto"
    eps: float | None = None
    delta: float | None = None
    output: Path | None = None

    def __post_init__(self):
        for field in ("schema", "program", "instance"):
            p = getattr(self, field)
            if p is not None and not p.exists():
                raise UsageError(f"{field} file not found: {p}")

    def eval_config(self, program=None) -> EvalConfig:
        tower = Tower.FLOAT if self.tower == "float" else Tower.EXACT
        cfg = EvalConfig.from_env(tower, eps=self.eps, delta=self.delta)
        if self.tower == "auto" and program is not None:
            try:
                check_tower(program, cfg)
            except TowerError:
                cfg = cfg.with_tower(Tower.FLOAT)
        return cfg


def _read_program(cfg: CliConfig):
    if cfg.program is None:
        raise UsageError("--program is required")
    return parse(cfg.program.read_text())


def _read_schema(cfg: CliConfig) -> Schema:
    path = cfg.schema
    if path is None and cfg.program is not None:
        path = cfg.program.with_suffix(".mts")
        if not path.exists():
            raise UsageError(f"--schema not given and {path} does not exist")
    if path is None:
        raise UsageError("--schema is required")
    return parse_schema(path.read_text())


def _read_instance(cfg: CliConfig):
    if cfg.instance is None:
        raise UsageError("--instance is required")
    return read_manifest(cfg.instance)


def _emit(cfg: CliConfig, text: str) -> None:
    if cfg.output is None:
        sys.stdout.write(text)
    else:
        cfg.output.write_text(text)


# -------------------------
# Subcommands
# -------------------------

def cmd_parse(cfg: CliConfig, args) -> int:
    e = _read_program(cfg)
    _emit(cfg, f"{e!r}\n")
    return 0


def cmd_typecheck(cfg: CliConfig, args) -> int:
    t = typecheck(_read_schema(cfg), _read_program(cfg))
    _emit(cfg, f"{t}\n")
    return 0


def cmd_eval(cfg: CliConfig, args) -> int:
    e = _read_program(cfg)
    schema = _read_schema(cfg)
    inst = _read_instance(cfg)
    result = evaluate(inst, e, cfg.eval_config(e), schema)
    _emit(cfg, format_matrix(result))
    return 0


def cmd_translate_rel(cfg: CliConfig, args) -> int:
    _emit(cfg, format_rel(translate(_read_schema(cfg), _read_program(cfg))) + "\n")
    return 0


def cmd_eval_rel(cfg: CliConfig, args) -> int:
    e = _read_program(cfg)
    schema = _read_schema(cfg)
    inst = _read_instance(cfg)
    check_conformance(schema, inst)
    ecfg = cfg.eval_config(e)
    plan = translate(schema, e)
    _emit(cfg, format_relation(eval_rel(rel_encode(inst, schema, ecfg.tower), plan, ecfg)))
    return 0


def cmd_compile_binrel(cfg: CliConfig, args) -> int:
    text = Path(args.expr).read_text() if Path(args.expr).is_file() else args.expr
    rels = [r for r in (args.relations or "").split(",") if r]
    _emit(cfg, pretty_print(compile_binrel(parse_binrel(text.strip()), rels)) + "\n")
    return 0


def cmd_emit_smt(cfg: CliConfig, args) -> int:
    try:
        sigma = SizeAssignment.parse(args.sigma)
    except ValueError as exc:
        raise UsageError(f"bad --sigma: {exc}") from None
    schema = _read_schema(cfg)
    try:
        ise = InputSizedExpr(schema, _read_program(cfg), sigma)
    except ValueError as exc:
        if isinstance(exc, DOMAIN_ERRORS):
            raise
        raise UsageError(str(exc)) from None
    if args.chi:
        chi_path = Path(args.chi)
        if not chi_path.exists():
            raise UsageError(f"chi file not found: {chi_path}")
        f = emit_partial_evaluation(ise, parse_formula(chi_path.read_text()))
    else:
        f = emit_formula(ise)
    _emit(cfg, serialize_smtlib(f))
    return 0


def cmd_verify_eigen(cfg: CliConfig, args) -> int:
    for p in (args.matrix, args.basis):
        if not Path(p).exists():
            raise UsageError(f"file not found: {p}")
    a, b = read_matrix(args.matrix), read_matrix(args.basis)
    if a.shape != b.shape or a.rows != a.cols:
        raise ShapeError(f"need equal square shapes, got {a.rows}x{a.cols} and {b.rows}x{b.cols}")
    ok = verify_eigen(a, b, cfg.eval_config().with_tower(Tower.FLOAT))
    _emit(cfg, ("valid" if ok else "invalid") + "\n")
    return 0 if ok else 1


def cmd_run_corpus(cfg: CliConfig, args) -> int:
    from .plotting import plot_errors, plot_pass_counts

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_corpus(trials=args.trials, seed=args.seed)
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(asdict(rows[0])))
        w.writeheader()
        for r in rows:
            w.writerow({**asdict(r), "error": f"{r.error:.3e}"})
    plot_errors(rows, out / "errors.png")
    plot_pass_counts(rows, out / "passes.png")
    failed = [r for r in rows if not r.passed]
    print(f"{len(rows) - len(failed)}/{len(rows)} trials passed; report in {out}")
    return 1 if failed else 0


# -------------------------
# Argument parsing
# -------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matlang", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    def add(name, fn, help_, schema=False, program=False, instance=False, tower=False):
        sp = sub.add_parser(name, help=help_)
        if schema:
            sp.add_argument("-s", "--schema", type=Path,
                            help="schema file (.mts); defaults to the program path with .mts")
        if program:
            sp.add_argument("-p", "--program", type=Path, required=True, help="program file (.mtl)")
        if instance:
            sp.add_argument("-i", "--instance", type=Path, required=True, help="instance manifest")
        if tower:
            sp.add_argument("--tower", choices=("auto", "exact", "float"), default="auto",
                            help="numeric tower; auto picks exact unless the program needs float")
            sp.add_argument("--eps", type=float, help="zero tolerance (float tower)")
            sp.add_argument("--delta", type=float, help="eigenvalue grouping tolerance")
        sp.add_argument("-o", "--output", type=Path, help="write here instead of stdout")
        sp.set_defaults(fn=fn)
        return sp

    add("parse", cmd_parse, "print the syntax tree", program=True)
    add("typecheck", cmd_typecheck, "print the inferred output type", schema=True, program=True)
    add("eval", cmd_eval, "evaluate and print the result matrix as CSV",
        schema=True, program=True, instance=True, tower=True)
    add("translate-rel", cmd_translate_rel, "print the relational plan", schema=True, program=True)
    add("eval-rel", cmd_eval_rel, "run the relational plan on the encoded instance",
        schema=True, program=True, instance=True, tower=True)
    sp = add("compile-binrel", cmd_compile_binrel, "compile a binary-relation expression")
    sp.add_argument("expr", help="expression text, or a file containing it")
    sp.add_argument("--relations", help="comma-separated relation names of the schema")
    sp = add("emit-smt", cmd_emit_smt, "write the real-arithmetic formula as SMT-LIB",
             schema=True, program=True)
    sp.add_argument("--sigma", required=True, help="size assignment, e.g. a=3,b=4")
    sp.add_argument("--chi", help="file with an extra constraint on the free variables")
    sp = add("verify-eigen", cmd_verify_eigen, "check a candidate eigenbasis", tower=True)
    sp.add_argument("-a", "--matrix", required=True, help="square matrix CSV")
    sp.add_argument("-b", "--basis", required=True, help="candidate basis CSV")
    sp = add("run-corpus", cmd_run_corpus, "run the program library against its oracles")
    sp.add_argument("--out", required=True, help="directory for report.csv and figures")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = CliConfig(
            args.subcommand, getattr(args, "schema", None), getattr(args, "program", None),
            getattr(args, "instance", None), getattr(args, "tower", "auto"),
            getattr(args, "eps", None), getattr(args, "delta", None), getattr(args, "output", None))
        return args.fn(cfg, args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"matlang: usage error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"matlang: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
