"""Exact dense linear algebra over finite fields, Q and Z.

Field matrices are lists of rows of :class:`RingElem`.  Integer matrices are
lists of rows of Python ints.  Smith normal form is delegated to sympy.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

from .rings import Ring, RingElem

Matrix = list[list[RingElem]]


def identity(F: Ring, n: int) -> Matrix:
    return [[F.one() if i == j else F.zero() for j in range(n)] for i in range(n)]


def zeros(F: Ring, rows: int, cols: int) -> Matrix:
    return [[F.zero() for _ in range(cols)] for _ in range(rows)]


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(c: RingElem, A: Matrix) -> Matrix:
    return [[c * a for a in row] for row in A]


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    cols = list(zip(*B))
    return [[_dot(row, col) for col in cols] for row in A]


def mat_vec(A: Matrix, v: Sequence[RingElem]) -> list[RingElem]:
    return [_dot(row, v) for row in A]


def vec_mat(v: Sequence[RingElem], A: Matrix) -> list[RingElem]:
    return [_dot(v, col) for col in zip(*A)]


def _dot(u, v) -> RingElem:
    it = iter(zip(u, v))
    a, b = next(it)
    acc = a * b
    for a, b in it:
        acc = acc + a * b
    return acc


def dot(u: Sequence[RingElem], v: Sequence[RingElem]) -> RingElem:
    return _dot(u, v)


@dataclass
class Echelon:
    """Row-reduced form R = T @ M with the list of pivot columns."""

    reduced: Matrix
    transform: Matrix
    pivots: list[int]

    @property
    def rank(self) -> int:
        return len(self.pivots)


def rref(M: Matrix, F: Ring | None = None) -> Echelon:
    """Gauss-Jordan elimination over a field, tracking the row transform."""
    rows = len(M)
    if F is None:
        F = M[0][0].ring
    cols = len(M[0]) if rows else 0
    A = [list(r) for r in M]
    T = identity(F, rows)
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pr = next((i for i in range(r, rows) if not A[i][c].is_zero()), None)
        if pr is None:
            continue
        A[r], A[pr] = A[pr], A[r]
        T[r], T[pr] = T[pr], T[r]
        inv = A[r][c].inverse()
        A[r] = [inv * x for x in A[r]]
        T[r] = [inv * x for x in T[r]]
        for i in range(rows):
            if i != r and not A[i][c].is_zero():
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
                T[i] = [x - f * y for x, y in zip(T[i], T[r])]
        pivots.append(c)
        r += 1
    return Echelon(A, T, pivots)


def rank(M: Matrix) -> int:
    if not M or not M[0]:
        return 0
    return rref(M).rank


def det(M: Matrix) -> RingElem:
    """Determinant over a field by elimination."""
    n = len(M)
    F = M[0][0].ring
    A = [list(r) for r in M]
    result = F.one()
    for c in range(n):
        pr = next((i for i in range(c, n) if not A[i][c].is_zero()), None)
        if pr is None:
            return F.zero()
        if pr != c:
            A[c], A[pr] = A[pr], A[c]
            result = -result
        result = result * A[c][c]
        inv = A[c][c].inverse()
        for i in range(c + 1, n):
            if not A[i][c].is_zero():
                f = A[i][c] * inv
                A[i] = [x - f * y for x, y in zip(A[i], A[c])]
    return result


def inverse(M: Matrix) -> Matrix:
    ech = rref(M)
    if ech.rank != len(M):
        raise ZeroDivisionError("matrix is singular")
    return ech.transform


def solve(M: Matrix, b: Sequence[RingElem]) -> list[RingElem] | None:
    """Some x with M x = b, or None when b is outside the column space."""
    ech = rref(M)
    tb = mat_vec(ech.transform, b)
    for i in range(ech.rank, len(M)):
        if not tb[i].is_zero():
            return None
    F = b[0].ring
    x = [F.zero() for _ in range(len(M[0]))]
    for i, c in enumerate(ech.pivots):
        x[c] = tb[i]
    return x


def left_null_certificate(M: Matrix, b: Sequence[RingElem]) -> list[RingElem] | None:
    """A row vector v with v M = 0 and v b != 0, or None if b lies in the column space."""
    ech = rref(M)
    for i in range(ech.rank, len(M)):
        v = ech.transform[i]
        if not dot(v, b).is_zero():
            return v
    return None


# ---------------------------------------------------------------------------
# Integer and rational matrices


def int_det(M: Sequence[Sequence[int]]) -> int:
    """Bareiss fraction-free determinant."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(map(int, r)) for r in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def _fraction_rref(M):
    A = [[Fraction(x) for x in r] for r in M]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        pr = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if pr is None:
            continue
        A[r], A[pr] = A[pr], A[r]
        piv = A[r][c]
        A[r] = [x / piv for x in A[r]]
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A, pivots


def int_rank(M: Sequence[Sequence[int]]) -> int:
    if not M or not M[0]:
        return 0
    return len(_fraction_rref(M)[1])


def fraction_solve(M, b) -> list[Fraction] | None:
    """Unique-or-some rational solution of M x = b, or None."""
    aug = [list(r) + [bi] for r, bi in zip(M, b)]
    A, pivots = _fraction_rref(aug)
    ncols = len(M[0])
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for i, c in enumerate(pivots):
        x[c] = A[i][-1]
    return x


def int_kernel_basis(M: Sequence[Sequence[int]]) -> list[list[int]]:
    """Primitive integer vectors spanning ker(M) over Q."""
    A, pivots = _fraction_rref(M)
    ncols = len(M[0])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -A[i][f]
        scale = lcm(*(x.denominator for x in v))
        w = [int(x * scale) for x in v]
        basis.append(w)
    return basis


def int_mat_vec(M, v) -> list[int]:
    return [sum(a * b for a, b in zip(row, v)) for row in M]


def invariant_factors(M: Sequence[Sequence[int]]) -> list[int]:
    """Diagonal of the Smith normal form (sympy), padded with zeros to min(rows, cols)."""
    from sympy import Matrix as SMatrix
    from sympy.matrices.normalforms import smith_normal_form
    from sympy.polys.domains import ZZ

    S = smith_normal_form(SMatrix(M), domain=ZZ)
    k = min(S.shape)
    return [abs(int(S[i, i])) for i in range(k)]
