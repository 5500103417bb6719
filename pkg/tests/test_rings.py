"""Rings, finite fields, ring automorphisms and parsing."""

from itertools import product

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from reidemeister.autos import lula_det
from reidemeister.rings import (
    DescriptorMismatch,
    ExtField,
    FieldTooSmall,
    IdentityAuto,
    Integers,
    LaurentFlip,
    LaurentRing,
    MonogenicOrder,
    NotAUnit,
    NotPrime,
    OrderRootMap,
    ParseError,
    PolyAffine,
    PolyRing,
    PrimeField,
    ReducibleModulus,
    ReducibleP,
    RingError,
    companion_lula,
    companion_matrix,
    field_of_order,
    find_flip_unit,
    find_irreducible,
    fixed_submodule_rank,
    is_irreducible,
    make_finite_field,
    monic_polys,
    parse_element,
    parse_ring,
)

F2, F3, F5, F7 = PrimeField(2), PrimeField(3), PrimeField(5), PrimeField(7)
F4 = make_finite_field(2, [1, 1, 1])
F9 = field_of_order(9)
GAUSS = MonogenicOrder((1, 0, 1))
CUBIC = MonogenicOrder((-2, 0, 0, 1))

FIELDS = [F2, F3, F5, F7, F4, F9, field_of_order(8)]


def _coeffs(P):
    return [int(c.value) for c in P.ring.coefficients(P)]


def _sympy_irreducibles(p, d):
    """All monic irreducible degree-d polynomials over F_p, per sympy, as ascending lists."""
    x = sympy.symbols("x")
    out = []
    for tail in product(range(p), repeat=d):
        cs = list(tail) + [1]
        poly = sympy.Poly(list(reversed(cs)), x, modulus=p)
        if poly.is_irreducible:
            out.append(cs)
    return out


# ---------------------------------------------------------------------------
# construction


def test_prime_field_rejects_composite():
    with pytest.raises(NotPrime):
        PrimeField(6)


def test_ext_field_f4_descriptor():
    F = make_finite_field(2, [1, 1, 1])
    assert isinstance(F, ExtField) and F.q == 4


def test_prime_field_descriptor_when_modulus_absent():
    assert make_finite_field(5) == PrimeField(5)


def test_reducible_modulus_rejected():
    with pytest.raises(ReducibleModulus):
        make_finite_field(2, [0, 0, 1])


def test_order_requires_monic():
    with pytest.raises(RingError):
        MonogenicOrder((1, 0, 2))


def test_poly_over_poly_rejected():
    with pytest.raises(DescriptorMismatch):
        PolyRing(PolyRing(F2))


def test_polynomials_trim_leading_zeros():
    R = PolyRing(F5)
    assert R([1, 2, 0, 0]) == R([1, 2])
    assert R.degree(R([0, 0, 0])) < 0


def test_laurent_support_drops_zero_coefficients():
    L = LaurentRing(F5)
    x = parse_element(L, "t^3 + 2*t^-1")
    assert L.support(x - parse_element(L, "t^3")) == [-1]


# ---------------------------------------------------------------------------
# irreducibles, companions, flip units


def test_find_irreducible_f2_quadratic():
    assert _coeffs(find_irreducible(F2, 2)) == [1, 1, 1]


@pytest.mark.parametrize("p,d,frozen", [(5, 2, [2, 0, 1]), (3, 3, [1, 2, 0, 1]), (3, 2, [1, 0, 1])])
def test_find_irreducible_frozen(p, d, frozen):
    # frozen values come from the sympy scan below; order is by descending coefficients
    assert _coeffs(find_irreducible(PrimeField(p), d)) == frozen


@pytest.mark.parametrize("p,d", [(2, 2), (2, 3), (3, 2), (3, 3), (5, 2)])
def test_find_irreducible_is_first_in_descending_order(p, d):
    cands = _sympy_irreducibles(p, d)
    expected = min(cands, key=lambda cs: list(reversed(cs)))
    assert _coeffs(find_irreducible(PrimeField(p), d)) == expected


@pytest.mark.parametrize("p,d", [(2, 2), (2, 4), (3, 2), (3, 3), (5, 2)])
def test_irreducibility_matches_sympy(p, d):
    F = PrimeField(p)
    ours = sorted(_coeffs(P) for P in monic_polys(F, d) if is_irreducible(P))
    assert ours == sorted(_sympy_irreducibles(p, d))


def test_companion_lula_frozen():
    P = parse_element(PolyRing(F5), "t^2+t+2")
    C, ok = companion_lula(P, 1)
    assert [[int(x.value) for x in row] for row in C] == [[0, 3], [1, 4]]
    assert ok


def test_companion_lula_a_zero():
    P = find_irreducible(F7, 3)
    assert companion_lula(P, 0)[1]


def test_companion_lula_f2():
    assert companion_lula(find_irreducible(F2, 2), 1)[1]


@pytest.mark.parametrize("F", [F2, F3, F4, F5, F7, F9])
def test_lula_for_every_irreducible_and_unit(F):
    R = PolyRing(F)
    for d in (2, 3):
        if F.q**d > 400:
            continue
        for P in monic_polys(F, d):
            if not is_irreducible(P):
                continue
            for a in F.units():
                assert companion_lula(P, a)[1], (R.spec(), P, a)


@pytest.mark.parametrize("F", [F3, F5, F7])
def test_lula_negative_control(F):
    R = PolyRing(F)
    for a in F.units():
        lam = a.inverse()
        P = (R.gen() - R.embed(lam)) * (R.gen() + R.one())
        assert lula_det(P, a).is_zero()
        with pytest.raises(ReducibleP):
            companion_lula(P, a)


def test_companion_char_poly():
    P = find_irreducible(F3, 3)
    C = companion_matrix(P)
    M = sympy.Matrix([[int(x.value) for x in row] for row in C])
    x = sympy.symbols("x")
    cp = sympy.Poly(M.charpoly(x).as_expr(), x, modulus=3)
    assert cp == sympy.Poly(list(reversed(_coeffs(P))), x, modulus=3)


def test_flip_unit_f5():
    assert find_flip_unit(F5) == F5(2)


def test_flip_unit_f4_is_generator():
    assert find_flip_unit(F4) == F4.gen()


@pytest.mark.parametrize("q", [2, 3])
def test_flip_unit_too_small(q):
    with pytest.raises(FieldTooSmall):
        find_flip_unit(field_of_order(q))


@pytest.mark.parametrize("q", [4, 5, 7, 8, 9])
def test_flip_unit_system_uniquely_solvable(q):
    F = field_of_order(q)
    a = find_flip_unit(F)
    assert a * a != 1 and a != 1
    for l, m in product(F.elements(), repeat=2):
        sols = [(X, Y) for X, Y in product(F.elements(), repeat=2) if X - a * Y == l and -(a * X) + Y == m]
        assert len(sols) == 1


# ---------------------------------------------------------------------------
# ring automorphisms


def test_affine_squares_in_char_two():
    R = PolyRing(F2)
    alpha = PolyAffine(R, 1, 1)
    assert alpha(parse_element(R, "t^2")) == parse_element(R, "t^2+1")


def test_laurent_flip_negates_exponents():
    L = LaurentRing(F5)
    assert LaurentFlip(L, 1)(parse_element(L, "t^3+2*t^-1")) == parse_element(L, "t^-3+2*t")


def test_gaussian_conjugation():
    sigma = OrderRootMap(GAUSS, (0, -1))
    assert sigma(GAUSS.gen()) == -GAUSS.gen()


def test_affine_rejects_non_unit():
    with pytest.raises(NotAUnit):
        PolyAffine(PolyRing(F5), 0, 1)


def test_order_root_map_rejects_non_root():
    with pytest.raises(RingError):
        OrderRootMap(GAUSS, (1, 1))


@pytest.mark.parametrize(
    "sigma,rank",
    [(OrderRootMap(GAUSS, (0, -1)), 1), (IdentityAuto(GAUSS), 2), (IdentityAuto(CUBIC), 3)],
)
def test_fixed_submodule_rank(sigma, rank):
    assert fixed_submodule_rank(sigma) == rank


def test_conjugation_fixed_rank_sympy():
    M = sympy.Matrix(OrderRootMap(GAUSS, (0, -1)).matrix()) - sympy.eye(2)
    assert 2 - M.rank() == 1


# ---------------------------------------------------------------------------
# properties


def _poly_strategy(F, max_deg=5):
    return st.lists(st.integers(0, F.q - 1), max_size=max_deg + 1).map(lambda cs: PolyRing(F)([F.elements()[c] for c in cs]))


def _laurent_strategy(F):
    L = LaurentRing(F)
    return st.dictionaries(st.integers(-5, 5), st.integers(1, F.q - 1), max_size=5).map(
        lambda d: L.from_coeff_map({e: F.elements()[c] for e, c in d.items()})
    )


def _order_strategy(R):
    return st.tuples(*[st.integers(-9, 9)] * R.deg).map(lambda cs: parse_element(R, "+".join(f"({c})*x^{k}" for k, c in enumerate(cs))))


ELEMENT_STRATEGIES = {
    "F5": st.sampled_from(F5.elements()),
    "F9": st.sampled_from(F9.elements()),
    "Z": st.integers(-50, 50).map(Integers()),
    "Z[i]": _order_strategy(GAUSS),
    "Z[x]/(x^3-2)": _order_strategy(CUBIC),
    "F3[t]": _poly_strategy(F3),
    "F4[t]": _poly_strategy(F4),
    "F5[t,1/t]": _laurent_strategy(F5),
}


@pytest.mark.parametrize("name", sorted(ELEMENT_STRATEGIES))
def test_ring_axioms(name):
    strat = ELEMENT_STRATEGIES[name]

    @settings(max_examples=60, deadline=None)
    @given(strat, strat, strat)
    def check(x, y, z):
        assert (x + y) + z == x + (y + z)
        assert (x * y) * z == x * (y * z)
        assert x * (y + z) == x * y + x * z
        assert x + y == y + x
        assert x - x == x.ring.zero()
        assert x * x.ring.one() == x
        if x.is_unit():
            assert x * x.inverse() == x.ring.one()

    check()


AUTOS = {
    "t->2t+3 on F5[t]": (PolyAffine(PolyRing(F5), 2, 3), _poly_strategy(F5)),
    "t->t+1 on F2[t]": (PolyAffine(PolyRing(F2), 1, 1), _poly_strategy(F2)),
    "t->x t on F4[t]": (PolyAffine(PolyRing(F4), F4.gen(), 0), _poly_strategy(F4)),
    "t->1/t on F5[t,1/t]": (LaurentFlip(LaurentRing(F5), 1), _laurent_strategy(F5)),
    "t->3/t on F5[t,1/t]": (LaurentFlip(LaurentRing(F5), 1, F5(3)), _laurent_strategy(F5)),
    "conjugation on Z[i]": (OrderRootMap(GAUSS, (0, -1)), _order_strategy(GAUSS)),
}


@pytest.mark.parametrize("name", sorted(AUTOS))
def test_ring_auto_homomorphism_and_inverse(name):
    alpha, strat = AUTOS[name]
    inv = alpha.inverse()

    @settings(max_examples=200, deadline=None)
    @given(strat, strat)
    def check(r, s):
        assert alpha(r + s) == alpha(r) + alpha(s)
        assert alpha(r * s) == alpha(r) * alpha(s)
        assert inv(alpha(r)) == r

    check()


@settings(max_examples=200, deadline=None)
@given(_poly_strategy(F7, 8), st.integers(1, 6), st.integers(0, 6))
def test_affine_preserves_degree(h, a, b):
    R = h.ring
    alpha = PolyAffine(R, a, b)
    assert R.degree(alpha(h)) == R.degree(h)


# ---------------------------------------------------------------------------
# parsing


@pytest.mark.parametrize(
    "spec",
    ["fq:5", "fq:4", "fq:2^2:x^2+x+1", "zz", "order:x^2+1", "poly:fq:3", "laurent:fq:5", "poly:order:x^3-2"],
)
def test_parse_ring_round_trip(spec):
    R = parse_ring(spec)
    assert parse_ring(R.spec()) == R


@pytest.mark.parametrize("spec", ["fq:6", "fq:2^2:x^2", "ring:5", "zz:3", "fq:5:x^2+1"])
def test_parse_ring_errors(spec):
    with pytest.raises(RingError):
        parse_ring(spec)


@pytest.mark.parametrize("text", ["t^2 + 3*t", "2*t^-1 + t^3", "(t+1)^2"])
def test_parse_element_round_trip(text):
    L = LaurentRing(F5)
    x = parse_element(L, text)
    assert parse_element(L, str(x)) == x


def test_parse_element_error():
    with pytest.raises(ParseError):
        parse_element(PolyRing(F5), "t^^2")
