"""Triangular matrix groups over the rings of :mod:`reidemeister.rings`.

Covers B_n, U_n, D_n, the projective quotient PB_n = B_n / scalars, and the
variants B_n^+ / PB_n^+ whose diagonal lies in the torsion-free unit
complement (pure powers t^k for Laurent rings, {1} otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Callable, Hashable, Sequence

from .rings import (
    LaurentRing,
    NotAUnit,
    ParseError,
    PolyRing,
    Ring,
    RingElem,
    enumerate_polys,
    parse_element,
)

MAX_N = 8
DEFAULT_CAP = 10**6


class GroupError(ValueError):
    pass


class IndexOutOfRange(GroupError):
    pass


class TagMismatch(GroupError):
    pass


class NotUnipotent(GroupError):
    pass


class SizeCapExceeded(GroupError):
    pass


class GroupTag(str, Enum):
    BOREL = "Borel"
    UNIPOTENT = "Unipotent"
    DIAGONAL = "Diagonal"
    PROJ_BOREL = "ProjBorel"
    BOREL_PLUS = "BorelPlus"
    PROJ_BOREL_PLUS = "ProjBorelPlus"

    @property
    def projective(self) -> bool:
        return self in (GroupTag.PROJ_BOREL, GroupTag.PROJ_BOREL_PLUS)


def _is_tf_unit(r: RingElem) -> bool:
    """Membership in the fixed torsion-free unit complement."""
    if isinstance(r.ring, LaurentRing):
        return len(r.value) == 1 and r.value[0][1] == r.ring.base._one
    return r == 1


class TriMatrix:
    """Upper-triangular n x n matrix with unit diagonal entries."""

    __slots__ = ("n", "ring", "rows", "_hash")

    def __init__(self, ring: Ring, rows: Sequence[Sequence[RingElem]], check: bool = True):
        n = len(rows)
        self.n = n
        self.ring = ring
        self.rows = tuple(tuple(r) for r in rows)
        if check:
            if n < 2 or n > MAX_N:
                raise IndexOutOfRange(f"matrix size {n} outside 2..{MAX_N}")
            for i, row in enumerate(self.rows):
                if len(row) != n:
                    raise GroupError("matrix is not square")
                for j in range(i):
                    if not row[j].is_zero():
                        raise GroupError("matrix is not upper triangular")
                if not row[i].is_unit():
                    raise NotAUnit(f"diagonal entry {row[i]} is not a unit")
        self._hash = hash(tuple(x.value for row in self.rows for x in row))

    def __getitem__(self, ij: tuple[int, int]) -> RingElem:
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, TriMatrix) and self._hash == other._hash and self.rows == other.rows

    def __hash__(self):
        return self._hash

    def __mul__(self, other: TriMatrix) -> TriMatrix:
        n, z = self.n, self.ring.zero()
        A, B = self.rows, other.rows
        out = [[z] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                acc = A[i][i] * B[i][j]
                for k in range(i + 1, j + 1):
                    acc = acc + A[i][k] * B[k][j]
                out[i][j] = acc
        return TriMatrix(self.ring, out, check=False)

    def inverse(self) -> TriMatrix:
        n, z = self.n, self.ring.zero()
        A = self.rows
        inv_diag = [A[i][i].inverse() for i in range(n)]
        out = [[z] * n for _ in range(n)]
        for i in range(n):
            out[i][i] = inv_diag[i]
        # back substitution column by column: (A X)_{ij} = 0 for i < j
        for j in range(n):
            for i in range(j - 1, -1, -1):
                acc = z
                for k in range(i + 1, j + 1):
                    acc = acc + A[i][k] * out[k][j]
                out[i][j] = -(inv_diag[i] * acc)
        return TriMatrix(self.ring, out, check=False)

    def scale(self, c: RingElem) -> TriMatrix:
        return TriMatrix(self.ring, [[c * x for x in row] for row in self.rows], check=False)

    def diagonal(self) -> list[RingElem]:
        return [self.rows[i][i] for i in range(self.n)]

    def is_unipotent(self) -> bool:
        return all(self.rows[i][i] == 1 for i in range(self.n))

    def is_diagonal(self) -> bool:
        return all(self.rows[i][j].is_zero() for i in range(self.n) for j in range(i + 1, self.n))

    def map_entries(self, f: Callable[[RingElem], RingElem]) -> TriMatrix:
        return TriMatrix(self.ring, [[f(x) for x in row] for row in self.rows], check=False)

    def to_text(self) -> str:
        return "(" + ";".join(",".join(str(x) for x in row) for row in self.rows) + ")"

    def __repr__(self):
        return f"TriMatrix{self.to_text()}"


@dataclass(frozen=True)
class GroupElem:
    matrix: TriMatrix
    tag: GroupTag = GroupTag.BOREL

    def __post_init__(self):
        m, tag = self.matrix, GroupTag(self.tag)
        object.__setattr__(self, "tag", tag)
        if tag is GroupTag.UNIPOTENT and not m.is_unipotent():
            raise TagMismatch("unipotent element with non-unit diagonal")
        if tag is GroupTag.DIAGONAL and not m.is_diagonal():
            raise TagMismatch("diagonal element with off-diagonal entries")
        if tag in (GroupTag.BOREL_PLUS, GroupTag.PROJ_BOREL_PLUS):
            if not all(_is_tf_unit(d) for d in m.diagonal()):
                raise TagMismatch("diagonal entries must be pure powers of t")
        if tag.projective and m[0, 0] != 1:
            object.__setattr__(self, "matrix", m.scale(m[0, 0].inverse()))

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def ring(self) -> Ring:
        return self.matrix.ring

    def signature(self) -> tuple:
        return (self.n, self.ring, self.tag)

    def __getitem__(self, ij):
        return self.matrix[ij]

    def __mul__(self, other: GroupElem) -> GroupElem:
        return group_op(self, other, "mul")

    def inverse(self) -> GroupElem:
        return group_op(self, None, "inv")

    def with_tag(self, tag: GroupTag) -> GroupElem:
        return GroupElem(self.matrix, tag)

    def to_text(self) -> str:
        return self.matrix.to_text()

    def __str__(self):
        return self.to_text()


def _check_sig(a: GroupElem, b: GroupElem):
    if a.n != b.n or a.ring != b.ring:
        raise TagMismatch(f"size/ring mismatch: {a.n},{a.ring.spec()} vs {b.n},{b.ring.spec()}")
    if a.tag is not b.tag:
        raise TagMismatch(f"{a.tag.value} vs {b.tag.value}")


def group_op(a: GroupElem, b: GroupElem | None, op: str = "mul") -> GroupElem:
    """Product a*b (op='mul') or inverse of a (op='inv')."""
    if op == "mul":
        _check_sig(a, b)
        m = a.matrix * b.matrix
    elif op == "inv":
        m = a.matrix.inverse()
    else:
        raise GroupError(f"unknown op {op!r}")
    if a.tag.projective:
        m = m.scale(m[0, 0].inverse())
    return _fast_elem(m, a.tag)


def _fast_elem(m: TriMatrix, tag: GroupTag) -> GroupElem:
    # results of group operations already satisfy the tag invariants
    g = object.__new__(GroupElem)
    object.__setattr__(g, "matrix", m)
    object.__setattr__(g, "tag", tag)
    return g


def identity(n: int, ring: Ring, tag: GroupTag = GroupTag.BOREL) -> GroupElem:
    z, o = ring.zero(), ring.one()
    return _fast_elem(TriMatrix(ring, [[o if i == j else z for j in range(n)] for i in range(n)]), GroupTag(tag))


def elem(i: int, j: int, r, n: int, ring: Ring, tag: GroupTag = GroupTag.UNIPOTENT) -> GroupElem:
    """Elementary matrix e_{i,j}(r), 1-based indices."""
    if not (1 <= i <= n and 1 <= j <= n) or i == j:
        raise IndexOutOfRange(f"e_({i},{j}) outside n={n}")
    if i > j:
        raise IndexOutOfRange(f"e_({i},{j}) is lower triangular")
    z, o = ring.zero(), ring.one()
    rows = [[o if a == b else z for b in range(n)] for a in range(n)]
    rows[i - 1][j - 1] = ring(r)
    return GroupElem(TriMatrix(ring, rows), GroupTag(tag))


def diag_gen(i: int, u, n: int, ring: Ring, tag: GroupTag = GroupTag.BOREL) -> GroupElem:
    """Elementary diagonal matrix d_i(u)."""
    if not 1 <= i <= n:
        raise IndexOutOfRange(f"d_{i} outside n={n}")
    u = ring(u)
    if not u.is_unit():
        raise NotAUnit(f"{u} is not a unit")
    return diag([u if k == i - 1 else ring.one() for k in range(n)], ring, tag)


def diag(units: Sequence, ring: Ring, tag: GroupTag = GroupTag.BOREL) -> GroupElem:
    n = len(units)
    z = ring.zero()
    rows = [[ring(units[a]) if a == b else z for b in range(n)] for a in range(n)]
    return GroupElem(TriMatrix(ring, rows), GroupTag(tag))


def generator(kind: str, n: int, ring: Ring, i: int, j_or_u, r=None, tag: GroupTag | None = None) -> GroupElem:
    """``generator('elem', n, R, i, j, r)`` or ``generator('diag', n, R, i, u)``."""
    if kind == "elem":
        return elem(i, j_or_u, r, n, ring, tag or GroupTag.UNIPOTENT)
    if kind == "diag":
        return diag_gen(i, j_or_u, n, ring, tag or GroupTag.BOREL)
    raise GroupError(f"unknown generator kind {kind!r}")


def from_rows(rows: Sequence[Sequence], ring: Ring, tag: GroupTag = GroupTag.BOREL) -> GroupElem:
    return GroupElem(TriMatrix(ring, [[ring(x) for x in row] for row in rows]), GroupTag(tag))


def commutator(a: GroupElem, b: GroupElem) -> GroupElem:
    """[a, b] = a b a^-1 b^-1."""
    return a * b * a.inverse() * b.inverse()


# ---------------------------------------------------------------------------
# Normal form


def superdiagonal_order(n: int) -> list[tuple[int, int]]:
    """(1,2),(2,3),...,(n-1,n),(1,3),...,(1,n), 1-based."""
    return [(i, i + k) for k in range(1, n) for i in range(1, n - k + 1)]


@dataclass(frozen=True)
class NormalForm:
    n: int
    ring: Ring
    coeffs: tuple[tuple[tuple[int, int], RingElem], ...]

    def __getitem__(self, ij: tuple[int, int]) -> RingElem:
        for key, v in self.coeffs:
            if key == ij:
                return v
        raise KeyError(ij)

    def as_dict(self) -> dict[tuple[int, int], RingElem]:
        return dict(self.coeffs)


def normal_form(u: GroupElem) -> NormalForm:
    """Coefficients r_ij with u = prod over superdiagonals k of prod_i e_{i,i+k}(r_{i,i+k})."""
    if not u.matrix.is_unipotent():
        raise NotUnipotent("normal form needs a unipotent element")
    n, R = u.n, u.ring
    y = u.with_tag(GroupTag.UNIPOTENT) if u.tag is not GroupTag.UNIPOTENT else u
    coeffs = []
    for k in range(1, n):
        layer = identity(n, R, GroupTag.UNIPOTENT)
        for i in range(1, n - k + 1):
            r = y[i - 1, i + k - 1]
            coeffs.append(((i, i + k), r))
            if not r.is_zero():
                layer = layer * elem(i, i + k, r, n, R)
        y = layer.inverse() * y
    return NormalForm(n, R, tuple(coeffs))


def recompose(nf: NormalForm) -> GroupElem:
    out = identity(nf.n, nf.ring, GroupTag.UNIPOTENT)
    for (i, j), r in nf.coeffs:
        if not r.is_zero():
            out = out * elem(i, j, r, nf.n, nf.ring)
    return out


def projective_reduce(b: GroupElem) -> GroupElem:
    """Canonical representative modulo scalars: scale so the (1,1) entry is 1."""
    tag = GroupTag.PROJ_BOREL_PLUS if b.tag in (GroupTag.BOREL_PLUS, GroupTag.PROJ_BOREL_PLUS) else GroupTag.PROJ_BOREL
    return GroupElem(b.matrix, tag)


# ---------------------------------------------------------------------------
# Text form


def _split_top(text: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_matrix(text: str, ring: Ring, tag: GroupTag = GroupTag.BOREL) -> GroupElem:
    """Parse ``(a,b;c,d)``: rows separated by ';', entries by ','."""
    s = text.strip()
    if not (s.startswith("(") and s.endswith(")")):
        raise ParseError(f"matrix text must be parenthesised: {text!r}")
    inner = s[1:-1]
    rows = [[parse_element(ring, e) for e in _split_top(row, ",")] for row in _split_top(inner, ";")]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ParseError("matrix text is not square")
    return GroupElem(TriMatrix(ring, rows), GroupTag(tag))


# ---------------------------------------------------------------------------
# Finite groups


class FiniteGroup:
    """An explicitly enumerated finite group with O(1) membership."""

    def __init__(
        self,
        elements: Sequence[Hashable],
        op: Callable,
        inv: Callable,
        identity_elem: Hashable,
        generators: Sequence[Hashable] | None = None,
        name: str = "",
    ):
        self.elements = list(elements)
        self.index = {g: k for k, g in enumerate(self.elements)}
        if len(self.index) != len(self.elements):
            raise GroupError("duplicate elements in enumeration")
        self.op = op
        self.inv = inv
        self.identity = identity_elem
        self.generators = list(generators) if generators is not None else list(self.elements)
        self.name = name

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g):
        return g in self.index

    def is_closed(self) -> bool:
        idx = self.index
        for a in self.elements:
            if self.inv(a) not in idx:
                return False
            for b in self.elements:
                if self.op(a, b) not in idx:
                    return False
        return True


def _entry_degree_cap(i: int, j: int, D: int, n: int) -> int:
    # n = 2 uses the flat bound; larger n grades by distance to the diagonal
    return D * (j - i) if n > 2 else D


def truncated_size(q: int, D: int, n: int, tag: GroupTag) -> int:
    tag = GroupTag(tag)
    off = sum(_entry_degree_cap(i, j, D, n) + 1 for i in range(n) for j in range(i + 1, n))
    if tag is GroupTag.UNIPOTENT:
        return q**off
    if tag is GroupTag.DIAGONAL:
        return (q - 1) ** n
    if tag is GroupTag.PROJ_BOREL:
        return (q - 1) ** (n - 1) * q**off
    if tag is GroupTag.BOREL:
        return (q - 1) ** n * q**off
    raise GroupError(f"no truncation for tag {tag.value}")


def truncated_borel(F: Ring, D: int, n: int, tag: GroupTag = GroupTag.BOREL, cap: int = DEFAULT_CAP) -> FiniteGroup:
    """All elements of the tagged group over F[t] with bounded entry degrees.

    For n = 2 off-diagonal entries have degree <= D.  For n >= 3 the entry at
    (i, j) has degree <= D*(j - i), which is the smallest such bound closed
    under multiplication.  Units of F[t] are constants, so the set is a group.
    """
    tag = GroupTag(tag)
    if not (F.is_field and F.is_finite):
        raise GroupError("truncated groups need a finite field")
    size = truncated_size(F.q, D, n, tag)
    if size > cap:
        raise SizeCapExceeded(f"{size} elements exceeds cap {cap}")
    R = PolyRing(F)
    units = F.units()
    positions = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if tag is GroupTag.DIAGONAL:
        entry_sets = [[R.zero()] for _ in positions]
    else:
        polys = {}
        entry_sets = []
        for i, j in positions:
            cap_ij = _entry_degree_cap(i, j, D, n)
            if cap_ij not in polys:
                polys[cap_ij] = enumerate_polys(R, cap_ij)
            entry_sets.append(polys[cap_ij])
    if tag is GroupTag.UNIPOTENT:
        diag_sets = [[F.one()] * 1 for _ in range(n)]
    elif tag is GroupTag.PROJ_BOREL:
        diag_sets = [[F.one()]] + [units for _ in range(n - 1)]
    else:
        diag_sets = [units for _ in range(n)]
    z = R.zero()
    elements = []
    for ds in product(*diag_sets):
        for offs in product(*entry_sets):
            rows = [[z] * n for _ in range(n)]
            for k in range(n):
                rows[k][k] = R.embed(ds[k])
            for (i, j), v in zip(positions, offs):
                rows[i][j] = v
            elements.append(_fast_elem(TriMatrix(R, rows, check=False), tag))
    gens = _truncated_generators(F, R, D, n, tag)
    name = f"{tag.value}_{n}(F_{F.q}[t], deg<={D})"
    return FiniteGroup(elements, lambda a, b: a * b, lambda a: a.inverse(), identity(n, R, tag), gens, name)


def _truncated_generators(F: Ring, R: PolyRing, D: int, n: int, tag: GroupTag) -> list[GroupElem]:
    gens = []
    if tag is not GroupTag.UNIPOTENT:
        first = 2 if tag is GroupTag.PROJ_BOREL else 1
        for i in range(first, n + 1):
            for u in F.units():
                if u != 1:
                    gens.append(diag_gen(i, R.embed(u), n, R, tag))
    if tag is not GroupTag.DIAGONAL:
        for i in range(1, n):
            for k in range(D + 1):
                for c in F.additive_basis():
                    gens.append(elem(i, i + 1, R.monomial(k, c), n, R, tag))
    return gens


def additive_group(F: Ring, dim: int) -> FiniteGroup:
    """(F^dim, +) with elements as tuples of field elements, generated by c*e_i."""
    if not (F.is_field and F.is_finite):
        raise GroupError("additive groups need a finite field")
    elems = list(product(F.elements(), repeat=dim))
    zero = tuple([F.zero()] * dim)

    def add(a, b):
        return tuple(x + y for x, y in zip(a, b))

    def neg(a):
        return tuple(-x for x in a)

    basis = [tuple(c if k == i else F.zero() for k in range(dim)) for i in range(dim) for c in F.additive_basis()]
    return FiniteGroup(elems, add, neg, zero, basis, name=f"F_{F.q}^{dim}")
