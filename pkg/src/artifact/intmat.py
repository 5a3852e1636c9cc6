"""Small exact integer matrix toolkit.

Matrices are tuples of row tuples of Python ints, so they are hashable,
immutable and never overflow.  Shapes with zero rows or columns are
allowed; a matrix with no rows carries its column count separately via
:func:`zeros`, which is why most helpers accept explicit shapes.

Normal forms and rational inverses are delegated to sympy's
``DomainMatrix``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from sympy import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import smith_normal_decomp

Matrix = tuple  # tuple[tuple[int, ...], ...]
Vector = tuple  # tuple[int, ...]


class NotUnimodular(ArithmeticError):
    """Raised when an integer inverse is requested for a matrix with det != +-1."""


def mat(rows: Iterable[Iterable[int]]) -> Matrix:
    return tuple(tuple(int(x) for x in r) for r in rows)


def vec(xs: Iterable[int]) -> Vector:
    return tuple(int(x) for x in xs)


def identity(n: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def zeros(r: int, c: int) -> Matrix:
    return tuple((0,) * c for _ in range(r))


def unit(n: int, i: int) -> Vector:
    return tuple(1 if j == i else 0 for j in range(n))


def shape(a: Matrix, ncols: int | None = None) -> tuple[int, int]:
    if a:
        return len(a), len(a[0])
    return 0, (ncols or 0)


def transpose(a: Matrix, ncols: int = 0) -> Matrix:
    if not a:
        return zeros(ncols, 0)
    return tuple(zip(*a))


def from_columns(cols: Sequence[Vector], nrows: int) -> Matrix:
    if not cols:
        return zeros(nrows, 0)
    return tuple(tuple(c[i] for c in cols) for i in range(nrows))


def columns(a: Matrix) -> list[Vector]:
    if not a:
        return []
    return [tuple(r[j] for r in a) for j in range(len(a[0]))]


def matmul(a: Matrix, b: Matrix, inner: int | None = None, ncols: int | None = None) -> Matrix:
    """Product ``a @ b``.

    ``ncols`` is only consulted when ``b`` has no rows (then ``a`` must have
    no columns and the result is an all-zero block).
    """
    if not b:
        c = ncols or 0
        return zeros(len(a), c)
    bt = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(r, col)) for col in bt) for r in a)


def matvec(a: Matrix, v: Vector) -> Vector:
    return tuple(sum(x * y for x, y in zip(r, v)) for r in a)


def dot(u: Vector, v: Vector) -> int:
    return sum(x * y for x, y in zip(u, v))


def bilinear(g: Matrix, u: Vector, v: Vector) -> int:
    return dot(u, matvec(g, v))


def add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(a, b))


def sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(r, s)) for r, s in zip(a, b))


def scale(k: int, a: Matrix) -> Matrix:
    return tuple(tuple(k * x for x in r) for r in a)


def vadd(u: Vector, v: Vector) -> Vector:
    return tuple(x + y for x, y in zip(u, v))


def vsub(u: Vector, v: Vector) -> Vector:
    return tuple(x - y for x, y in zip(u, v))


def vscale(k: int, v: Vector) -> Vector:
    return tuple(k * x for x in v)


def _dm(a: Matrix, ncols: int = 0) -> DomainMatrix:
    r, c = shape(a, ncols)
    return DomainMatrix([[ZZ(x) for x in row] for row in a], (r, c), ZZ)


def _from_dm(m: DomainMatrix) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in m.to_list())


def det(a: Matrix) -> int:
    if not a:
        return 1
    return int(_dm(a).det())


def inverse(a: Matrix) -> Matrix:
    """Integer inverse of a unimodular square matrix."""
    n = len(a)
    if n == 0:
        return ()
    q = _dm(a).convert_to(QQ)
    try:
        inv = q.inv()
    except Exception as exc:  # singular
        raise NotUnimodular("matrix is singular") from exc
    rows = []
    for row in inv.to_list():
        out = []
        for x in row:
            f = Fraction(int(x.numerator), int(x.denominator))
            if f.denominator != 1:
                raise NotUnimodular("inverse is not integral")
            out.append(f.numerator)
        rows.append(tuple(out))
    return tuple(rows)


def rational_solve(a: Matrix, b: Matrix) -> list[list[Fraction]]:
    """Solve ``a x = b`` over the rationals for square invertible ``a``."""
    q = _dm(a).convert_to(QQ)
    inv = q.inv().to_list()
    out = []
    for row in inv:
        out.append([Fraction(int(x.numerator), int(x.denominator)) for x in row])
    n = len(a)
    cols = len(b[0]) if b else 0
    return [[sum(out[i][k] * b[k][j] for k in range(n)) for j in range(cols)] for i in range(n)]


def power(a: Matrix, k: int) -> Matrix:
    n = len(a)
    if k < 0:
        a = inverse(a)
        k = -k
    result = identity(n)
    base = a
    while k:
        if k & 1:
            result = matmul(result, base)
        base = matmul(base, base)
        k >>= 1
    return result


def smith(a: Matrix, ncols: int = 0) -> tuple[Matrix, Matrix, Matrix]:
    """Return ``(d, u, v)`` with ``d = u a v`` in Smith normal form."""
    r, c = shape(a, ncols)
    if r == 0 or c == 0:
        return zeros(r, c), identity(r), identity(c)
    d, u, v = smith_normal_decomp(_dm(a))
    return _from_dm(d), _from_dm(u), _from_dm(v)


def rank_of_smith(d: Matrix) -> int:
    return sum(1 for i in range(min(shape(d))) if d[i][i] != 0)


def kernel(a: Matrix, ncols: int) -> list[Vector]:
    """Saturated integer basis of the right kernel ``{x : a x = 0}``.

    The returned vectors are columns of a unimodular matrix, so their
    span is saturated in ``Z^ncols``.
    """
    if not a:
        return [unit(ncols, i) for i in range(ncols)]
    d, _u, v = smith(a, ncols)
    r = rank_of_smith(d)
    return [tuple(v[i][j] for i in range(ncols)) for j in range(r, ncols)]


def left_inverse(basis: Sequence[Vector], n: int) -> Matrix:
    """Integer left inverse of a saturated basis given as column vectors.

    Raises ``NotUnimodular`` when the span is not saturated.
    """
    k = len(basis)
    if k == 0:
        return zeros(0, n)
    b = from_columns(basis, n)
    d, u, v = smith(b)
    for i in range(k):
        if abs(d[i][i]) != 1:
            raise NotUnimodular("basis does not span a saturated sublattice")
    # b = u^-1 d v^-1 with d = [diag(+-1); 0]
    dk = tuple(tuple(d[i][j] for j in range(k)) for i in range(k))
    top_u = tuple(u[i] for i in range(k))
    return matmul(matmul(v, dk), top_u)


def is_zero(a: Matrix) -> bool:
    return all(x == 0 for r in a for x in r)


def to_lists(a: Matrix) -> list[list[int]]:
    return [list(r) for r in a]
