"""Instance files: one CSV per matrix, and a manifest naming them.

A matrix file starts with a ``rows,cols`` header line followed by ``rows``
lines of ``cols`` comma-separated scalars (``3``, ``-1/2``, ``0.25``,
``1+2i``).  A manifest has lines ``NAME = path``, paths relative to the
manifest's directory; ``#`` starts a comment.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .matrix import Matrix
from .scalars import parse_scalar


class InstanceFormatError(ValueError):
    pass


def read_matrix_text(text: str, source: str = "<matrix>") -> Matrix:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InstanceFormatError(f"{source}: empty matrix file")
    try:
        m, n = (int(x) for x in rows[0])
    except ValueError:
        header = ",".join(rows[0])
        raise InstanceFormatError(f"{source}: header must be 'rows,cols', got {header!r}") from None
    body = rows[1:]
    if len(body) != m or any(len(r) != n for r in body):
        raise InstanceFormatError(f"{source}: expected {m} rows of {n} entries")
    try:
        return Matrix(m, n, tuple(parse_scalar(c) for r in body for c in r))
    except ValueError as exc:
        raise InstanceFormatError(f"{source}: {exc}") from None


def format_matrix(m: Matrix) -> str:
    return f"{m.rows},{m.cols}\n{m}\n"


def read_matrix(path: str | Path) -> Matrix:
    path = Path(path)
    return read_matrix_text(path.read_text(), str(path))


def write_matrix(path: str | Path, m: Matrix) -> None:
    Path(path).write_text(format_matrix(m))


def read_manifest(path: str | Path) -> dict[str, Matrix]:
    path = Path(path)
    inst: dict[str, Matrix] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, target = (s.strip() for s in line.partition("="))
        if not sep or not name.isidentifier() or not target:
            raise InstanceFormatError(f"{path}:{lineno}: expected 'NAME = path'")
        if name in inst:
            raise InstanceFormatError(f"{path}:{lineno}: {name} listed twice")
        inst[name] = read_matrix(path.parent / target)
    if not inst:
        raise InstanceFormatError(f"{path}: empty manifest")
    return inst


def write_instance(directory: str | Path, inst: dict[str, Matrix],
                   manifest: str = "instance.manifest") -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for name in sorted(inst):
        write_matrix(directory / f"{name}.csv", inst[name])
        lines.append(f"{name} = {name}.csv")
    out = directory / manifest
    out.write_text("\n".join(lines) + "\n")
    return out

