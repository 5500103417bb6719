"""Triangular matrix groups, normal forms and truncated groups."""

import random
from itertools import product

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from reidemeister.matgroups import (
    GroupTag,
    IndexOutOfRange,
    NotUnipotent,
    SizeCapExceeded,
    TagMismatch,
    commutator,
    diag,
    diag_gen,
    elem,
    from_rows,
    identity,
    normal_form,
    parse_matrix,
    projective_reduce,
    recompose,
    truncated_borel,
    truncated_size,
)
from reidemeister.rings import Integers, LaurentRing, PolyRing, PrimeField, field_of_order, parse_element

Z = Integers()
F2, F3, F5 = PrimeField(2), PrimeField(3), PrimeField(5)


def _rows(g):
    return [[str(x) for x in row] for row in g.matrix.rows]


def test_elem_over_integers():
    assert _rows(elem(1, 2, 2, 2, Z)) == [["1", "2"], ["0", "1"]]


def test_diag_gen_over_integers():
    assert _rows(diag_gen(2, -1, 2, Z)) == [["1", "0"], ["0", "-1"]]


def test_lower_triangular_elem_rejected():
    with pytest.raises(IndexOutOfRange):
        elem(2, 1, 1, 2, Z)


def test_inverse_of_elem():
    assert elem(1, 2, 3, 2, Z).inverse() == elem(1, 2, -3, 2, Z)


def test_unipotent_tag_checks_diagonal():
    with pytest.raises(TagMismatch):
        from_rows([[2, 0], [0, 1]], F5, GroupTag.UNIPOTENT)


def test_mixed_signatures_rejected():
    with pytest.raises(TagMismatch):
        elem(1, 2, 1, 2, F5) * diag([2, 1], F5)


def test_commutator_adjacent():
    assert commutator(elem(1, 2, 2, 3, F5), elem(2, 3, 3, 3, F5)) == elem(1, 3, 6, 3, F5)


def test_diagonal_conjugation_scales():
    u = F5(3)
    d = diag_gen(1, u, 3, F5)
    e = elem(1, 3, 2, 3, F5, GroupTag.BOREL)
    assert d * e * d.inverse() == elem(1, 3, u * 2, 3, F5, GroupTag.BOREL)


def test_diag_conjugation_formula():
    units = [F5(2), F5(3), F5(4), F5(1)]
    d = diag(units, F5)
    for k, l in [(1, 2), (1, 4), (2, 3), (3, 4)]:
        e = elem(k, l, 1, 4, F5, GroupTag.BOREL)
        want = elem(k, l, units[k - 1] * units[l - 1].inverse(), 4, F5, GroupTag.BOREL)
        assert d * e * d.inverse() == want


# ---------------------------------------------------------------------------
# normal form


def test_normal_form_u3_product():
    r, s = F5(2), F5(3)
    nf = normal_form(elem(2, 3, r, 3, F5) * elem(1, 2, s, 3, F5))
    assert nf[(1, 2)] == s and nf[(2, 3)] == r and nf[(1, 3)] == -(s * r)


def test_normal_form_identity():
    assert all(v.is_zero() for _, v in normal_form(identity(4, F5, GroupTag.UNIPOTENT)).coeffs)


def test_normal_form_single_corner():
    nf = normal_form(elem(1, 3, 4, 3, F5))
    assert nf[(1, 3)] == 4 and nf[(1, 2)].is_zero() and nf[(2, 3)].is_zero()


def test_normal_form_needs_unipotent():
    with pytest.raises(NotUnipotent):
        normal_form(diag([2, 1], F5))


def _sympy_product(nf, p):
    M = sympy.eye(nf.n)
    for (i, j), r in nf.coeffs:
        E = sympy.eye(nf.n)
        E[i - 1, j - 1] = int(r.value)
        M = M * E
    return M.applyfunc(lambda x: x % p)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 6), st.randoms(use_true_random=False))
def test_normal_form_round_trip(n, rnd):
    elems = F5.elements()
    rows = [[F5.one() if i == j else (elems[rnd.randrange(5)] if j > i else F5.zero()) for j in range(n)] for i in range(n)]
    g = from_rows(rows, F5, GroupTag.UNIPOTENT)
    nf = normal_form(g)
    assert recompose(nf) == g
    assert normal_form(recompose(nf)) == nf
    want = sympy.Matrix([[int(x.value) for x in row] for row in g.matrix.rows])
    assert _sympy_product(nf, 5) == want


# ---------------------------------------------------------------------------
# projective forms


def test_laurent_projective_canonical_form():
    L = LaurentRing(F5)
    b = parse_matrix("(t,t^2+1;0,1)", L, GroupTag.PROJ_BOREL)
    want = parse_matrix("(1,t+t^-1;0,t^-1)", L, GroupTag.PROJ_BOREL)
    assert b == want


def test_scalar_matrices_die():
    assert projective_reduce(diag([3, 3, 3], F5)) == identity(3, F5, GroupTag.PROJ_BOREL)


def test_projective_reduce_detects_scalars():
    G = truncated_borel(F3, 0, 2, GroupTag.BOREL)
    scalars = [PolyRing(F3)(1), PolyRing(F3)(2)]
    for b1 in G:
        for b2 in G:
            same = projective_reduce(b1) == projective_reduce(b2)
            by_scalar = any(b1.matrix == b2.matrix.scale(z) for z in scalars)
            assert same == by_scalar


# ---------------------------------------------------------------------------
# group axioms and relations


def _random_elem(rng, n, R, tag):
    elems = R.base.elements() if hasattr(R, "base") else R.elements()
    units = [u for u in elems if not u.is_zero()]

    def entry():
        if isinstance(R, PolyRing):
            return R([elems[rng.randrange(len(elems))] for _ in range(3)])
        return elems[rng.randrange(len(elems))]

    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            if j < i:
                row.append(0)
            elif j == i:
                row.append(1 if tag is GroupTag.UNIPOTENT else units[rng.randrange(len(units))])
            else:
                row.append(entry())
        rows.append(row)
    return from_rows(rows, R, tag)


@pytest.mark.parametrize("tag", [GroupTag.UNIPOTENT, GroupTag.BOREL, GroupTag.PROJ_BOREL])
@pytest.mark.parametrize("R", [F5, field_of_order(4), PolyRing(F3)], ids=["F5", "F4", "F3[t]"])
def test_group_axioms(tag, R):
    rng = random.Random(7)
    e = identity(3, R, tag)
    for _ in range(500):
        a, b, c = (_random_elem(rng, 3, R, tag) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * e == a == e * a
        assert a * a.inverse() == e


def _expected_commutator(i, j, k, l, r, s, n, R):
    if j == k:
        return elem(i, l, r * s, n, R)
    if i == l:
        return elem(k, j, -(r * s), n, R)
    return identity(n, R, GroupTag.UNIPOTENT)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_commutator_relations(n):
    rng = random.Random(n)
    R = F5
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    for (i, j), (k, l) in product(pairs, repeat=2):
        for _ in range(20):
            r, s = R(rng.randrange(5)), R(rng.randrange(5))
            got = commutator(elem(i, j, r, n, R), elem(k, l, s, n, R))
            assert got == _expected_commutator(i, j, k, l, r, s, n, R)


# ---------------------------------------------------------------------------
# truncated groups


def test_truncated_f3_d0_borel():
    assert len(truncated_borel(F3, 0, 2)) == 12


def test_truncated_f2_d0_unipotent():
    G = truncated_borel(F2, 0, 2, GroupTag.UNIPOTENT)
    assert set(G) == {identity(2, PolyRing(F2), GroupTag.UNIPOTENT), elem(1, 2, 1, 2, PolyRing(F2))}


def test_truncated_f2_d1_borel_count():
    # (q-1)^2 q^(D+1) with q = 2, D = 1
    assert len(truncated_borel(F2, 1, 2)) == 4


@pytest.mark.parametrize(
    "q,D,n,tag",
    [(2, 1, 2, "Borel"), (3, 1, 2, "ProjBorel"), (2, 1, 3, "Unipotent"), (3, 0, 3, "Borel"), (2, 2, 2, "Diagonal")],
)
def test_truncated_closed_and_sized(q, D, n, tag):
    G = truncated_borel(field_of_order(q), D, n, GroupTag(tag))
    assert len(G) == truncated_size(q, D, n, GroupTag(tag))
    assert G.is_closed()


def test_truncated_cap():
    with pytest.raises(SizeCapExceeded):
        truncated_borel(F5, 3, 3, cap=1000)


def test_generators_generate():
    G = truncated_borel(F3, 1, 2, GroupTag.BOREL)
    seen = {G.identity}
    frontier = [G.identity]
    while frontier:
        nxt = []
        for g in frontier:
            for s in G.generators:
                h = g * s
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        frontier = nxt
    assert len(seen) == len(G)


def test_parse_matrix_round_trip():
    R = PolyRing(F5)
    g = parse_matrix("(2,t^2+1;0,3)", R)
    assert parse_matrix(g.to_text(), R) == g
    assert g[0, 1] == parse_element(R, "t^2+1")
