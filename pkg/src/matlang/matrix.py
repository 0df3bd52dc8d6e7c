"""Dense complex matrices and the linear algebra behind ``inv`` and ``eigen``."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .config import EvalConfig
from .functions import is_zero
from .scalars import GaussianRational, Tower, coerce, format_scalar


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Matrix:
    rows: int
    cols: int
    entries: tuple  # row-major

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ShapeError(f"matrix dimensions must be positive, got {self.rows}x{self.cols}")
        if not isinstance(self.entries, tuple):
            object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) != self.rows * self.cols:
            raise ShapeError(f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> Matrix:
        rows = [list(r) for r in rows]
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise ShapeError("ragged or empty row list")
        return cls(len(rows), len(rows[0]), tuple(x for r in rows for x in r))

    @classmethod
    def build(cls, rows: int, cols: int, f: Callable[[int, int], object]) -> Matrix:
        return cls(rows, cols, tuple(f(i, j) for i in range(rows) for j in range(cols)))

    @classmethod
    def zeros(cls, rows: int, cols: int, tower: Tower = Tower.EXACT) -> Matrix:
        z = coerce(0, tower)
        return cls(rows, cols, (z,) * (rows * cols))

    @classmethod
    def identity(cls, n: int, tower: Tower = Tower.EXACT) -> Matrix:
        one, zero = coerce(1, tower), coerce(0, tower)
        return cls.build(n, n, lambda i, j: one if i == j else zero)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij: tuple[int, int]):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> tuple:
        return self.entries[j::self.cols]

    def tolist(self) -> list[list]:
        return [list(self.row(i)) for i in range(self.rows)]

    def map(self, f) -> Matrix:
        return Matrix(self.rows, self.cols, tuple(f(x) for x in self.entries))

    def to_tower(self, tower: Tower) -> Matrix:
        return self.map(lambda x: coerce(x, tower))

    @property
    def tower(self) -> Tower:
        return Tower.EXACT if all(isinstance(x, (GaussianRational, int)) for x in self.entries) \
            else Tower.FLOAT

    def to_numpy(self) -> np.ndarray:
        return np.array([complex(x) for x in self.entries], dtype=complex).reshape(self.rows, self.cols)

    @classmethod
    def from_numpy(cls, a: np.ndarray) -> Matrix:
        a = np.atleast_2d(a)
        return cls(a.shape[0], a.shape[1], tuple(complex(x) for x in a.ravel()))

    def conj_transpose(self) -> Matrix:
        return Matrix.build(self.cols, self.rows, lambda i, j: self[j, i].conjugate())

    def __matmul__(self, other: Matrix) -> Matrix:
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        n = self.cols
        return Matrix.build(self.rows, other.cols,
                            lambda i, j: _dot(self.row(i), other.col(j), n))

    def is_zero(self, cfg: EvalConfig) -> bool:
        return all(is_zero(x, cfg) for x in self.entries)

    def max_abs(self) -> float:
        return max(abs(complex(x)) for x in self.entries)

    def inf_norm(self) -> float:
        return max(sum(abs(complex(x)) for x in self.row(i)) for i in range(self.rows))

    def __str__(self) -> str:
        return "\n".join(",".join(format_scalar(x) for x in self.row(i)) for i in range(self.rows))


def _dot(a, b, n):
    s = a[0] * b[0]
    for k in range(1, n):
        s = s + a[k] * b[k]
    return s


def max_abs_diff(a: Matrix, b: Matrix) -> float:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return max(abs(complex(x) - complex(y)) for x, y in zip(a.entries, b.entries))


# -------------------------
# Gaussian elimination
# -------------------------

def _rows(a: Matrix, tower: Tower) -> list[list]:
    return [[coerce(x, tower) for x in a.row(i)] for i in range(a.rows)]


def invert(a: Matrix, cfg: EvalConfig) -> Matrix:
    """Inverse by Gauss-Jordan elimination with partial pivoting, or the zero
    matrix when ``a`` is singular.

    The exact tower tests pivots against zero; the float tower treats
    ``|pivot| < eps * (1 + ||a||_inf)`` as singular.
    """
    if a.rows != a.cols:
        raise ShapeError(f"cannot invert a {a.rows}x{a.cols} matrix")
    n, tower = a.rows, cfg.tower
    m = _rows(a, tower)
    inv = _rows(Matrix.identity(n, tower), tower)
    thresh = 0 if cfg.exact else cfg.eps * (1 + a.inf_norm())
    for c in range(n):
        if cfg.exact:
            p = next((r for r in range(c, n) if m[r][c]), None)
        else:
            p = max(range(c, n), key=lambda r: abs(m[r][c]))
            if abs(m[p][c]) < thresh:
                p = None
        if p is None:
            return Matrix.zeros(n, n, tower)
        m[c], m[p] = m[p], m[c]
        inv[c], inv[p] = inv[p], inv[c]
        piv = m[c][c]
        m[c] = [x / piv for x in m[c]]
        inv[c] = [x / piv for x in inv[c]]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
                inv[r] = [x - f * y for x, y in zip(inv[r], inv[c])]
    return Matrix.from_rows(inv)


def is_invertible(a: Matrix, cfg: EvalConfig) -> bool:
    return not invert(a, cfg).is_zero(cfg)


def null_vector(a: Matrix, cfg: EvalConfig) -> Matrix | None:
    """A nonzero column vector ``u`` with ``a u = 0``, or None.

    Exact tower: from the reduced row echelon form, one free variable set to 1.
    Float tower: the right singular vector of the smallest singular value,
    scaled so its largest entry is 1, accepted when that value is below eps.
    """
    n = a.cols
    if cfg.exact:
        m = _rows(a, Tower.EXACT)
        pivots: list[int] = []
        r = 0
        for c in range(n):
            p = next((i for i in range(r, a.rows) if m[i][c]), None)
            if p is None:
                continue
            m[r], m[p] = m[p], m[r]
            piv = m[r][c]
            m[r] = [x / piv for x in m[r]]
            for i in range(a.rows):
                if i != r and m[i][c]:
                    f = m[i][c]
                    m[i] = [x - f * y for x, y in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
            if r == a.rows:
                break
        free = [c for c in range(n) if c not in pivots]
        if not free:
            return None
        fc = free[0]
        u = [GaussianRational(0)] * n
        u[fc] = GaussianRational(1)
        for row, pc in enumerate(pivots):
            u[pc] = -m[row][fc]
        return Matrix(n, 1, tuple(u))
    arr = a.to_numpy()
    _, s, vh = np.linalg.svd(arr)
    s_full = np.zeros(n)
    s_full[:len(s)] = s
    k = int(np.argmin(s_full))
    if s_full[k] > cfg.eps * (1 + a.inf_norm()):
        return None
    v = vh[k].conj()
    v = v / v[np.argmax(np.abs(v))]
    return Matrix(n, 1, tuple(complex(x) for x in v))


def rank_exact(a: Matrix) -> int:
    m = _rows(a, Tower.EXACT)
    r = 0
    for c in range(a.cols):
        p = next((i for i in range(r, a.rows) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        for i in range(r + 1, a.rows):
            if m[i][c]:
                f = m[i][c] / m[r][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        r += 1
    return r


# -------------------------
# eigen
# -------------------------

def eigen_clusters(a: np.ndarray, cfg: EvalConfig) -> list[tuple[complex, int, float]]:
    """Eigenvalues grouped within ``delta``: (mean, algebraic multiplicity, radius),
    sorted by (real, imaginary) part of the mean."""
    vals = np.linalg.eigvals(a)
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= cfg.delta:
                parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(complex(vals[i]))
    out = []
    for g in groups.values():
        mean = sum(g) / len(g)
        radius = max(abs(v - mean) for v in g)
        out.append((mean, len(g), radius))
    out.sort(key=lambda t: (round(t[0].real, 12), round(t[0].imag, 12)))
    return out


def _eigenspace(a: np.ndarray, lam: complex, radius: float, cfg: EvalConfig) -> np.ndarray:
    """Orthonormal basis (as rows) of the numerical null space of a - lam I."""
    n = a.shape[0]
    _, s, vh = np.linalg.svd(a - lam * np.eye(n))
    tol = max(cfg.eps * (1 + np.abs(a).sum(axis=1).max()), 2 * radius)
    g = int(np.sum(s <= tol))
    return vh[n - g:].conj() if g else np.zeros((0, n), dtype=complex)


def _rref_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    m = rows.astype(complex).copy()
    k, n = m.shape
    r = 0
    for c in range(n):
        if r == k:
            break
        p = r + int(np.argmax(np.abs(m[r:, c])))
        if abs(m[p, c]) <= tol:
            continue
        m[[r, p]] = m[[p, r]]
        m[r] /= m[r, c]
        for i in range(k):
            if i != r:
                m[i] -= m[i, c] * m[r]
        r += 1
    return m


def _mgs(rows: np.ndarray) -> np.ndarray:
    out = []
    for v in rows:
        w = v.astype(complex).copy()
        for q in out:
            w = w - np.vdot(q, w) * q
        w = w / np.linalg.norm(w)
        out.append(w)
    return np.array(out)


def _phase_normalise(v: np.ndarray, tol: float) -> np.ndarray:
    k = next(i for i, x in enumerate(v) if abs(x) > tol)
    return v * (abs(v[k]) / v[k])


def diagonalizable(a: Matrix, cfg: EvalConfig) -> bool:
    arr = a.to_numpy()
    return all(_eigenspace(arr, lam, rad, cfg).shape[0] == mult
               for lam, mult, rad in eigen_clusters(arr, cfg))


def eigen_canonical(a: Matrix, cfg: EvalConfig) -> Matrix:
    """A basis of eigenvectors as columns, or the zero matrix if ``a`` is not
    diagonalizable.

    Columns are grouped by eigenvalue in ascending (real, imaginary) order.
    Each eigenspace basis is reduced to row echelon form and orthonormalised
    with modified Gram-Schmidt, then every column is rotated so that its first
    nonzero coordinate is real and positive.  The result depends only on the
    eigenspaces, not on the eigensolver's choice of vectors.
    """
    if a.rows != a.cols:
        raise ShapeError(f"eigen needs a square matrix, got {a.rows}x{a.cols}")
    if cfg.exact:
        from .functions import TowerError
        raise TowerError("eigen is not available in the exact tower")
    arr = a.to_numpy()
    n = a.rows
    tol = np.sqrt(cfg.eps)
    cols = []
    for lam, mult, rad in eigen_clusters(arr, cfg):
        basis = _eigenspace(arr, lam, rad, cfg)
        if basis.shape[0] != mult:
            return Matrix.zeros(n, n, Tower.FLOAT)
        basis = _mgs(_rref_rows(basis, tol))
        cols.extend(_phase_normalise(v, tol) for v in basis)
    return Matrix.from_numpy(np.array(cols).T)


def rayleigh(a: np.ndarray, v: np.ndarray) -> complex:
    return complex(np.vdot(v, a @ v) / np.vdot(v, v))


def verify_eigen(a: Matrix, b: Matrix, cfg: EvalConfig) -> bool:
    """Is ``b`` a possible result of ``eigen(a)``?

    True iff ``b`` is invertible, each column ``v`` satisfies
    ``||a v - lambda v||_inf <= eps (1 + ||a||_inf)`` for its Rayleigh quotient
    ``lambda`` (with ``v`` scaled to unit max-norm), and columns whose
    eigenvalues lie within ``delta`` are orthogonal within eps; or ``a`` is not
    diagonalizable and ``b`` is zero.
    """
    if a.shape != b.shape or a.rows != a.cols:
        raise ShapeError(f"verify_eigen needs equal square shapes, got {a.shape} and {b.shape}")
    fcfg = cfg.with_tower(Tower.FLOAT)
    a, b = a.to_tower(Tower.FLOAT), b.to_tower(Tower.FLOAT)
    if b.is_zero(fcfg):
        return not diagonalizable(a, fcfg)
    if not is_invertible(b, fcfg):
        return False
    A, B = a.to_numpy(), b.to_numpy()
    bound = cfg.eps * (1 + a.inf_norm())
    lams = []
    for j in range(B.shape[1]):
        v = B[:, j] / np.max(np.abs(B[:, j]))
        lam = rayleigh(A, v)
        if np.max(np.abs(A @ v - lam * v)) > bound:
            return False
        lams.append(lam)
    for j in range(len(lams)):
        for k in range(j + 1, len(lams)):
            if abs(lams[j] - lams[k]) <= cfg.delta:
                v, w = B[:, j], B[:, k]
                if abs(np.vdot(v, w)) > cfg.eps * np.linalg.norm(v) * np.linalg.norm(w) * 10:
                    return False
    return True


def matrix_from_values(rows: int, cols: int, values: Iterable) -> Matrix:
    return Matrix(rows, cols, tuple(values))
