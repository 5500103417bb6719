"""Exact arithmetic for the base rings used throughout the package.

Supported rings: prime fields F_p, one-level extensions F_p[x]/(m), the
integers, monogenic orders Z[x]/(m), and one-variable polynomial and Laurent
polynomial rings over any of those.  Ring descriptors are immutable and
hashable; elements are thin :class:`RingElem` wrappers around a canonical
payload (an int, a coefficient tuple or a sorted exponent/coefficient tuple).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterator


class RingError(ValueError):
    pass


class NotPrime(RingError):
    pass


class ReducibleModulus(RingError):
    pass


class ReducibleP(RingError):
    pass


class DescriptorMismatch(RingError):
    pass


class NotAUnit(RingError):
    pass


class FieldTooSmall(RingError):
    pass


class ParseError(RingError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def prime_power(q: int) -> tuple[int, int] | None:
    """Return (p, k) with q = p**k, or None."""
    for p in range(2, q + 1):
        if q % p == 0:
            if not is_prime(p):
                return None
            k, r = 0, q
            while r % p == 0:
                r //= p
                k += 1
            return (p, k) if r == 1 else None
    return None


# ---------------------------------------------------------------------------
# Elements


class RingElem:
    """An element of a ring descriptor.  Immutable."""

    __slots__ = ("ring", "value")

    def __init__(self, ring: Ring, value):
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, value):
        raise AttributeError("RingElem is immutable")

    def _coerce(self, other) -> RingElem:
        if isinstance(other, RingElem):
            if other.ring is not self.ring and other.ring != self.ring:
                raise DescriptorMismatch(f"{self.ring.spec()} vs {other.ring.spec()}")
            return other
        if isinstance(other, int):
            return self.ring(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElem(self.ring, self.ring._add(self.value, other.value))

    __radd__ = __add__

    def __neg__(self):
        return RingElem(self.ring, self.ring._neg(self.value))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElem(self.ring, self.ring._add(self.value, self.ring._neg(other.value)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElem(self.ring, self.ring._mul(self.value, other.value))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result, base = self.ring.one(), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, RingElem):
            return self.value == other.value and (self.ring is other.ring or self.ring == other.ring)
        if isinstance(other, int):
            return self.value == self.ring(other).value
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def is_zero(self) -> bool:
        return self.value == self.ring._zero

    def is_unit(self) -> bool:
        return self.ring._is_unit(self.value)

    def inverse(self) -> RingElem:
        return RingElem(self.ring, self.ring._inv(self.value))

    def __str__(self):
        return self.ring._fmt(self.value)

    def __repr__(self):
        return f"RingElem({self.ring.spec()!r}, {self})"


# ---------------------------------------------------------------------------
# Descriptors


class Ring:
    """Base class for ring descriptors.  Subclasses implement payload ops."""

    is_field = False
    is_finite = False
    _zero = 0
    _one = 1

    def __call__(self, value) -> RingElem:
        if isinstance(value, RingElem):
            if value.ring == self:
                return value
            return self.embed(value)
        if isinstance(value, int):
            return RingElem(self, self._from_int(value))
        if isinstance(value, str):
            return parse_element(self, value)
        raise TypeError(f"cannot coerce {value!r} into {self.spec()}")

    def embed(self, elem: RingElem) -> RingElem:
        raise DescriptorMismatch(f"cannot embed {elem.ring.spec()} into {self.spec()}")

    def zero(self) -> RingElem:
        return RingElem(self, self._zero)

    def one(self) -> RingElem:
        return RingElem(self, self._one)

    def _neg(self, x):
        raise NotImplementedError

    def _is_unit(self, x) -> bool:
        raise NotImplementedError

    def _inv(self, x):
        raise NotImplementedError

    def halve(self, x: RingElem) -> RingElem:
        """Exact x/2, raising NotAUnit when it does not exist in the ring."""
        two = self(2)
        if two.is_unit():
            return x * two.inverse()
        raise NotAUnit(f"2 is not invertible in {self.spec()}")

    def spec(self) -> str:
        raise NotImplementedError

    def variables(self) -> dict[str, RingElem]:
        return {}


@dataclass(frozen=True)
class PrimeField(Ring):
    p: int

    is_field = True
    is_finite = True

    def __post_init__(self):
        if not is_prime(self.p):
            raise NotPrime(f"{self.p} is not prime")

    @property
    def q(self) -> int:
        return self.p

    @property
    def characteristic(self) -> int:
        return self.p

    def _from_int(self, n):
        return n % self.p

    def _add(self, x, y):
        return (x + y) % self.p

    def _neg(self, x):
        return (-x) % self.p

    def _mul(self, x, y):
        return (x * y) % self.p

    def _is_unit(self, x):
        return x != 0

    def _inv(self, x):
        if x == 0:
            raise NotAUnit("0 has no inverse")
        return pow(x, -1, self.p)

    def _fmt(self, x):
        return str(x)

    def elements(self) -> list[RingElem]:
        return [RingElem(self, i) for i in range(self.p)]

    def units(self) -> list[RingElem]:
        return self.elements()[1:]

    def additive_basis(self) -> list[RingElem]:
        return [self.one()]

    def spec(self):
        return f"fq:{self.p}"


@dataclass(frozen=True)
class ExtField(Ring):
    """F_p[x]/(m) with m monic irreducible of degree k >= 2.

    ``modulus`` holds the ascending coefficients of m, leading 1 included.
    Elements are encoded as ints c_0 + c_1 p + ... + c_{k-1} p^{k-1}, which
    is also the canonical enumeration order.
    """

    p: int
    modulus: tuple[int, ...]

    is_field = True
    is_finite = True

    def __post_init__(self):
        if not is_prime(self.p):
            raise NotPrime(f"{self.p} is not prime")
        m = tuple(c % self.p for c in self.modulus)
        object.__setattr__(self, "modulus", m)
        if len(m) < 3 or m[-1] != 1:
            raise RingError("extension modulus must be monic of degree >= 2")
        if not is_irreducible(PolyRing(PrimeField(self.p))(list(m))):
            raise ReducibleModulus(f"{_fmt_int_poly(m, 'x')} is reducible over F_{self.p}")

    @property
    def k(self) -> int:
        return len(self.modulus) - 1

    @property
    def q(self) -> int:
        return self.p**self.k

    @property
    def characteristic(self) -> int:
        return self.p

    def _to_coeffs(self, x: int) -> list[int]:
        out = []
        for _ in range(self.k):
            x, r = divmod(x, self.p)
            out.append(r)
        return out

    def _from_coeffs(self, cs) -> int:
        x = 0
        for c in reversed(cs):
            x = x * self.p + c % self.p
        return x

    def _mul_direct(self, x, y):
        a, b, p, k = self._to_coeffs(x), self._to_coeffs(y), self.p, self.k
        prod = [0] * (2 * k - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    prod[i + j] = (prod[i + j] + ai * bj) % p
        for top in range(2 * k - 2, k - 1, -1):
            c = prod[top]
            if c:
                prod[top] = 0
                for j in range(k):
                    prod[top - k + j] = (prod[top - k + j] - c * self.modulus[j]) % p
        return self._from_coeffs(prod[:k])

    @cached_property
    def _tables(self):
        q = self.q
        add = [[self._from_coeffs([(u + v) for u, v in zip(self._to_coeffs(x), self._to_coeffs(y))])
                for y in range(q)] for x in range(q)]
        mul = [[self._mul_direct(x, y) for y in range(q)] for x in range(q)]
        inv = [0] * q
        for x in range(1, q):
            for y in range(1, q):
                if mul[x][y] == 1:
                    inv[x] = y
                    break
        neg = [self._from_coeffs([-c for c in self._to_coeffs(x)]) for x in range(q)]
        return add, mul, inv, neg

    def _from_int(self, n):
        return n % self.p

    def _add(self, x, y):
        return self._tables[0][x][y]

    def _neg(self, x):
        return self._tables[3][x]

    def _mul(self, x, y):
        return self._tables[1][x][y]

    def _is_unit(self, x):
        return x != 0

    def _inv(self, x):
        if x == 0:
            raise NotAUnit("0 has no inverse")
        return self._tables[2][x]

    def _fmt(self, x):
        return _fmt_int_poly(self._to_coeffs(x), "x")

    def gen(self) -> RingElem:
        return RingElem(self, self.p)

    def elements(self) -> list[RingElem]:
        return [RingElem(self, i) for i in range(self.q)]

    def units(self) -> list[RingElem]:
        return self.elements()[1:]

    def additive_basis(self) -> list[RingElem]:
        return [RingElem(self, self.p**i) for i in range(self.k)]

    def variables(self):
        return {"x": self.gen()}

    def spec(self):
        return f"fq:{self.p}^{self.k}:{_fmt_int_poly(self.modulus, 'x')}"


@dataclass(frozen=True)
class Integers(Ring):
    def _from_int(self, n):
        return n

    def _add(self, x, y):
        return x + y

    def _neg(self, x):
        return -x

    def _mul(self, x, y):
        return x * y

    def _is_unit(self, x):
        return x in (1, -1)

    def _inv(self, x):
        if x not in (1, -1):
            raise NotAUnit(f"{x} is not a unit of Z")
        return x

    def halve(self, x):
        if x.value % 2:
            raise NotAUnit(f"{x} is not divisible by 2 in Z")
        return RingElem(self, x.value // 2)

    def _fmt(self, x):
        return str(x)

    def spec(self):
        return "zz"


@dataclass(frozen=True)
class MonogenicOrder(Ring):
    """Z[x]/(m) for a monic integer polynomial m; payload is a coefficient tuple."""

    minpoly: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(c) for c in self.minpoly)
        object.__setattr__(self, "minpoly", m)
        if len(m) < 2 or m[-1] != 1:
            raise RingError("order minimal polynomial must be monic of degree >= 1")

    @property
    def deg(self) -> int:
        return len(self.minpoly) - 1

    @property
    def _zero(self):
        return (0,) * self.deg

    @property
    def _one(self):
        return (1,) + (0,) * (self.deg - 1)

    def _from_int(self, n):
        return (n,) + (0,) * (self.deg - 1)

    def _add(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def _neg(self, x):
        return tuple(-a for a in x)

    def _reduce(self, coeffs: list[int]) -> tuple[int, ...]:
        d = self.deg
        coeffs = list(coeffs) + [0] * max(0, d - len(coeffs))
        for top in range(len(coeffs) - 1, d - 1, -1):
            c = coeffs[top]
            if c:
                coeffs[top] = 0
                for j in range(d):
                    coeffs[top - d + j] -= c * self.minpoly[j]
        return tuple(coeffs[:d])

    def _mul(self, x, y):
        prod = [0] * (2 * self.deg - 1)
        for i, a in enumerate(x):
            if a:
                for j, b in enumerate(y):
                    prod[i + j] += a * b
        return self._reduce(prod)

    def mult_matrix(self, x) -> list[list[int]]:
        """Integer matrix of multiplication by x in the basis 1, x, ..., x^{d-1}."""
        cols = []
        for i in range(self.deg):
            e = [0] * self.deg
            e[i] = 1
            cols.append(self._mul(x, tuple(e)))
        return [[cols[j][i] for j in range(self.deg)] for i in range(self.deg)]

    def _is_unit(self, x):
        from .linalg import int_det

        return int_det(self.mult_matrix(x)) in (1, -1)

    def _inv(self, x):
        from .linalg import fraction_solve

        m = self.mult_matrix(x)
        sol = fraction_solve(m, list(self._one))
        if sol is None or any(s.denominator != 1 for s in sol):
            raise NotAUnit(f"{self._fmt(x)} is not a unit of {self.spec()}")
        return tuple(int(s) for s in sol)

    def halve(self, x):
        if any(c % 2 for c in x.value):
            raise NotAUnit(f"{x} is not divisible by 2 in {self.spec()}")
        return RingElem(self, tuple(c // 2 for c in x.value))

    def _fmt(self, x):
        return _fmt_int_poly(x, "x")

    def gen(self) -> RingElem:
        if self.deg == 1:
            return RingElem(self, (-self.minpoly[0],))
        return RingElem(self, (0, 1) + (0,) * (self.deg - 2))

    def variables(self):
        return {"x": self.gen()}

    def spec(self):
        return f"order:{_fmt_int_poly(self.minpoly, 'x')}"


_COEFF_RINGS = (PrimeField, ExtField, Integers, MonogenicOrder)


@dataclass(frozen=True)
class PolyRing(Ring):
    """base[t]; payload is the ascending tuple of base payloads, trimmed."""

    base: Ring

    _zero = ()

    def __post_init__(self):
        if not isinstance(self.base, _COEFF_RINGS):
            raise DescriptorMismatch("polynomial base must be a field, Z or a monogenic order")

    @property
    def _one(self):
        return (self.base._one,)

    def _trim(self, cs):
        z = self.base._zero
        n = len(cs)
        while n and cs[n - 1] == z:
            n -= 1
        return tuple(cs[:n])

    def _from_int(self, n):
        return self._trim([self.base._from_int(n)])

    def embed(self, elem):
        if elem.ring == self.base:
            return RingElem(self, self._trim([elem.value]))
        return Ring.embed(self, elem)

    def __call__(self, value):
        if isinstance(value, (list, tuple)):
            return RingElem(self, self._trim([self.base(c).value for c in value]))
        return Ring.__call__(self, value)

    def _add(self, x, y):
        if len(x) < len(y):
            x, y = y, x
        add = self.base._add
        out = list(x)
        for i, c in enumerate(y):
            out[i] = add(out[i], c)
        return self._trim(out)

    def _neg(self, x):
        neg = self.base._neg
        return tuple(neg(c) for c in x)

    def _mul(self, x, y):
        if not x or not y:
            return ()
        add, mul, z = self.base._add, self.base._mul, self.base._zero
        out = [z] * (len(x) + len(y) - 1)
        for i, a in enumerate(x):
            if a != z:
                for j, b in enumerate(y):
                    out[i + j] = add(out[i + j], mul(a, b))
        return self._trim(out)

    def _is_unit(self, x):
        return len(x) == 1 and self.base._is_unit(x[0])

    def _inv(self, x):
        if not self._is_unit(x):
            raise NotAUnit(f"{self._fmt(x)} is not a unit of {self.spec()}")
        return (self.base._inv(x[0]),)

    def halve(self, x):
        return RingElem(self, self._trim([self.base.halve(c).value for c in self.coefficients(x)]))

    def _fmt(self, x):
        terms = [(e, c) for e, c in enumerate(x) if c != self.base._zero]
        return _fmt_terms(reversed(terms), self.base, "t")

    def gen(self) -> RingElem:
        return RingElem(self, (self.base._zero, self.base._one))

    def monomial(self, e: int, c=1) -> RingElem:
        if e < 0:
            raise RingError("negative exponent in a polynomial ring")
        c = self.base(c)
        return RingElem(self, self._trim([self.base._zero] * e + [c.value]))

    def coefficients(self, x: RingElem) -> list[RingElem]:
        return [RingElem(self.base, c) for c in x.value]

    def coeff_map(self, x: RingElem) -> dict[int, RingElem]:
        return {e: RingElem(self.base, c) for e, c in enumerate(x.value) if c != self.base._zero}

    def from_coeff_map(self, cm: dict[int, RingElem]) -> RingElem:
        if not cm:
            return self.zero()
        out = [self.base._zero] * (max(cm) + 1)
        for e, c in cm.items():
            out[e] = self.base(c).value
        return RingElem(self, self._trim(out))

    def degree(self, x: RingElem) -> int:
        return len(x.value) - 1

    def variables(self):
        v = {"t": self.gen()}
        for name, g in self.base.variables().items():
            v[name] = self.embed(g)
        return v

    def spec(self):
        return f"poly:{self.base.spec()}"


@dataclass(frozen=True)
class LaurentRing(Ring):
    """base[t, t^-1]; payload is a sorted tuple of (exponent, base payload)."""

    base: Ring

    _zero = ()

    def __post_init__(self):
        if not isinstance(self.base, _COEFF_RINGS):
            raise DescriptorMismatch("Laurent base must be a field, Z or a monogenic order")

    @property
    def _one(self):
        return ((0, self.base._one),)

    def _from_int(self, n):
        c = self.base._from_int(n)
        return () if c == self.base._zero else ((0, c),)

    def embed(self, elem):
        if elem.ring == self.base:
            return RingElem(self, () if elem.value == self.base._zero else ((0, elem.value),))
        return Ring.embed(self, elem)

    def _from_dict(self, d: dict):
        z = self.base._zero
        return tuple(sorted((e, c) for e, c in d.items() if c != z))

    def _add(self, x, y):
        add = self.base._add
        d = dict(x)
        for e, c in y:
            d[e] = add(d[e], c) if e in d else c
        return self._from_dict(d)

    def _neg(self, x):
        neg = self.base._neg
        return tuple((e, neg(c)) for e, c in x)

    def _mul(self, x, y):
        add, mul = self.base._add, self.base._mul
        d: dict = {}
        for e1, c1 in x:
            for e2, c2 in y:
                v = mul(c1, c2)
                e = e1 + e2
                d[e] = add(d[e], v) if e in d else v
        return self._from_dict(d)

    def _is_unit(self, x):
        return len(x) == 1 and self.base._is_unit(x[0][1])

    def _inv(self, x):
        if not self._is_unit(x):
            raise NotAUnit(f"{self._fmt(x)} is not a unit of {self.spec()}")
        e, c = x[0]
        return ((-e, self.base._inv(c)),)

    def halve(self, x):
        return self.from_coeff_map({e: self.base.halve(c) for e, c in self.coeff_map(x).items()})

    def _fmt(self, x):
        return _fmt_terms(reversed(x), self.base, "t")

    def gen(self) -> RingElem:
        return RingElem(self, ((1, self.base._one),))

    def monomial(self, e: int, c=1) -> RingElem:
        c = self.base(c)
        return RingElem(self, () if c.is_zero() else ((e, c.value),))

    def coeff_map(self, x: RingElem) -> dict[int, RingElem]:
        return {e: RingElem(self.base, c) for e, c in x.value}

    def from_coeff_map(self, cm: dict[int, RingElem]) -> RingElem:
        return RingElem(self, self._from_dict({e: self.base(c).value for e, c in cm.items()}))

    def support(self, x: RingElem) -> list[int]:
        return [e for e, _ in x.value]

    def variables(self):
        v = {"t": self.gen()}
        for name, g in self.base.variables().items():
            v[name] = self.embed(g)
        return v

    def spec(self):
        return f"laurent:{self.base.spec()}"


# ---------------------------------------------------------------------------
# Formatting helpers


def _fmt_int_poly(cs, var: str) -> str:
    terms = [(e, c) for e, c in enumerate(cs) if c]
    return _fmt_terms(reversed(terms), Integers(), var, raw=True)


def _fmt_terms(terms, base, var, raw=False) -> str:
    parts = []
    for e, c in terms:
        cstr = str(c) if raw else base._fmt(c)
        simple = re.fullmatch(r"-?\d+", cstr) is not None
        if e == 0:
            mono = cstr if simple else f"({cstr})"
            if not parts and not simple:
                mono = cstr
        else:
            xe = var if e == 1 else f"{var}^{e}"
            if cstr == "1":
                mono = xe
            elif cstr == "-1":
                mono = f"-{xe}"
            elif simple:
                mono = f"{cstr}*{xe}"
            else:
                mono = f"({cstr})*{xe}"
        parts.append(mono)
    if not parts:
        return "0"
    out = parts[0]
    for m in parts[1:]:
        out += m if m.startswith("-") else "+" + m
    return out


# ---------------------------------------------------------------------------
# Finite-field polynomial utilities


def poly_divmod(f: RingElem, g: RingElem) -> tuple[RingElem, RingElem]:
    """Division with remainder in F[t] for a field F."""
    ring = f.ring
    if not isinstance(ring, PolyRing) or not ring.base.is_field:
        raise RingError("poly_divmod needs a polynomial ring over a field")
    if g.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    base = ring.base
    r = list(f.value)
    gv = g.value
    dg = len(gv) - 1
    lead_inv = base._inv(gv[-1])
    q = [base._zero] * max(0, len(r) - dg)
    for top in range(len(r) - 1, dg - 1, -1):
        c = r[top]
        if c == base._zero:
            continue
        factor = base._mul(c, lead_inv)
        q[top - dg] = factor
        for j, gj in enumerate(gv):
            r[top - dg + j] = base._add(r[top - dg + j], base._neg(base._mul(factor, gj)))
    return RingElem(ring, ring._trim(q)), RingElem(ring, ring._trim(r))


def monic_polys(field: Ring, d: int) -> Iterator[RingElem]:
    """All monic degree-d polynomials, in canonical order.

    The order compares coefficient tuples from the leading coefficient down:
    (1, a_{d-1}, ..., a_0), each coefficient in the field's canonical order.
    """
    ring = PolyRing(field)
    elems = field.elements()
    for cs in product(elems, repeat=d):
        # cs = (a_{d-1}, ..., a_0)
        yield ring(list(reversed(cs)) + [field.one()])


def is_irreducible(f: RingElem) -> bool:
    """Irreducibility over a finite field by trial division."""
    ring = f.ring
    d = ring.degree(f)
    if d < 1:
        return False
    for k in range(1, d // 2 + 1):
        for g in monic_polys(ring.base, k):
            if poly_divmod(f, g)[1].is_zero():
                return False
    return True


def make_finite_field(p: int, m=None) -> Ring:
    """F_p, or F_p[x]/(m) for a monic irreducible m of degree >= 2.

    ``m`` may be an ascending coefficient list or polynomial text in x.
    """
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if m is None:
        return PrimeField(p)
    if isinstance(m, str):
        m = PolyRing(PrimeField(p)).coefficients(parse_element(PolyRing(PrimeField(p)), m, var="x"))
        m = [c.value for c in m]
    elif isinstance(m, RingElem):
        m = [c.value for c in m.ring.coefficients(m)]
    m = [int(c) % p for c in m]
    while m and m[-1] == 0:
        m.pop()
    if len(m) < 3:
        raise RingError("modulus must have degree >= 2")
    if m[-1] != 1:
        raise RingError("modulus must be monic")
    return ExtField(p, tuple(m))


def field_of_order(q: int) -> Ring:
    pk = prime_power(q)
    if pk is None:
        raise NotPrime(f"{q} is not a prime power")
    p, k = pk
    if k == 1:
        return PrimeField(p)
    m = find_irreducible(PrimeField(p), k)
    return ExtField(p, tuple(c.value for c in m.ring.coefficients(m)))


def find_irreducible(field: Ring, d: int) -> RingElem:
    """Smallest monic irreducible of degree d in the order of :func:`monic_polys`."""
    if d < 2:
        raise RingError("degree must be at least 2")
    for f in monic_polys(field, d):
        if is_irreducible(f):
            return f
    raise AssertionError("unreachable: irreducibles exist in every degree")


def companion_matrix(P: RingElem) -> list[list[RingElem]]:
    """Companion matrix: ones on the subdiagonal, last column -a_0..-a_{d-1}."""
    ring = P.ring
    cs = ring.coefficients(P)
    d = len(cs) - 1
    if d < 1 or cs[-1] != 1:
        raise RingError("companion matrix needs a monic polynomial of degree >= 1")
    F = ring.base
    C = [[F.zero() for _ in range(d)] for _ in range(d)]
    for i in range(d - 1):
        C[i + 1][i] = F.one()
    for i in range(d):
        C[i][d - 1] = -cs[i]
    return C


def companion_lula(P: RingElem, a) -> tuple[list[list[RingElem]], bool]:
    """Return (C_P, det(I - a C_P) != 0) for an irreducible monic P."""
    from .linalg import det, identity, mat_sub, mat_scale

    if not is_irreducible(P):
        raise ReducibleP(f"{P} is reducible")
    F = P.ring.base
    a = F(a)
    C = companion_matrix(P)
    M = mat_sub(identity(F, len(C)), mat_scale(a, C))
    return C, not det(M).is_zero()


def find_flip_unit(field: Ring) -> RingElem:
    """First nonzero a (canonical order) with 1 - a^2 != 0."""
    if not field.is_field or not field.is_finite:
        raise RingError("find_flip_unit needs a finite field")
    if field.q <= 3:
        raise FieldTooSmall(f"every unit of F_{field.q} squares to 1")
    for a in field.units():
        if not (1 - a * a).is_zero():
            return a
    raise AssertionError("unreachable for q >= 4")


# ---------------------------------------------------------------------------
# Ring automorphisms


class RingAuto:
    """Base class for ring automorphisms; instances are callables on RingElem."""

    ring: Ring

    def _check(self, r: RingElem):
        if r.ring != self.ring:
            raise DescriptorMismatch(f"automorphism of {self.ring.spec()} applied to {r.ring.spec()}")

    def __call__(self, r: RingElem) -> RingElem:
        self._check(r)
        return self._apply(r)

    def inverse(self) -> RingAuto:
        raise NotImplementedError

    def is_identity(self) -> bool:
        return False


@dataclass(frozen=True)
class IdentityAuto(RingAuto):
    ring: Ring

    def _apply(self, r):
        return r

    def inverse(self):
        return self

    def is_identity(self):
        return True

    def spec(self):
        return "id"


@dataclass(frozen=True)
class PolyAffine(RingAuto):
    """t -> a t + b on base[t], a a unit of the base."""

    ring: PolyRing
    a: RingElem
    b: RingElem

    def __post_init__(self):
        if not isinstance(self.ring, PolyRing):
            raise DescriptorMismatch("PolyAffine acts on polynomial rings")
        object.__setattr__(self, "a", self.ring.base(self.a))
        object.__setattr__(self, "b", self.ring.base(self.b))
        if not self.a.is_unit():
            raise NotAUnit(f"{self.a} is not a unit of {self.ring.base.spec()}")

    @cached_property
    def _image_of_t(self) -> RingElem:
        R = self.ring
        return R.embed(self.a) * R.gen() + R.embed(self.b)

    def _apply(self, r):
        # Horner in the image of t
        R = self.ring
        out = R.zero()
        x = self._image_of_t
        for c in reversed(R.coefficients(r)):
            out = out * x + R.embed(c)
        return out

    def inverse(self):
        ainv = self.a.inverse()
        return PolyAffine(self.ring, ainv, -(ainv * self.b))

    def is_identity(self):
        return self.a == 1 and self.b.is_zero()

    def spec(self):
        return f"ring:a={self.a},b={self.b}"


@dataclass(frozen=True)
class LaurentFlip(RingAuto):
    """t -> c t^(+-1) on base[t, t^-1] (eps = 1 inverts t); c a base unit, default 1."""

    ring: LaurentRing
    eps: int
    c: RingElem | None = None

    def __post_init__(self):
        if not isinstance(self.ring, LaurentRing):
            raise DescriptorMismatch("LaurentFlip acts on Laurent rings")
        if self.eps not in (0, 1):
            raise RingError("eps must be 0 or 1")
        c = self.ring.base.one() if self.c is None else self.ring.base(self.c)
        if not c.is_unit():
            raise NotAUnit(f"{c} is not a unit of {self.ring.base.spec()}")
        object.__setattr__(self, "c", c)

    def _apply(self, r):
        sign = -1 if self.eps else 1
        R = self.ring
        return R.from_coeff_map({sign * e: v * self.c**e for e, v in R.coeff_map(r).items()})

    def inverse(self):
        if self.eps:
            # t -> c/t is inverted by t -> c/t
            return self
        return LaurentFlip(self.ring, 0, self.c.inverse())

    def is_identity(self):
        return self.eps == 0 and self.c == 1

    def spec(self):
        return f"ring:eps={self.eps}" + ("" if self.c == 1 else f",c={self.c}")


@dataclass(frozen=True)
class OrderRootMap(RingAuto):
    """x -> sigma(x) on Z[x]/(m); ``image`` is the coefficient vector of sigma(x)."""

    ring: MonogenicOrder
    image: tuple[int, ...]

    def __post_init__(self):
        from .linalg import int_det

        if not isinstance(self.ring, MonogenicOrder):
            raise DescriptorMismatch("OrderRootMap acts on monogenic orders")
        img = tuple(int(c) for c in self.image)
        if len(img) != self.ring.deg:
            raise RingError("image vector has the wrong length")
        object.__setattr__(self, "image", img)
        R = self.ring
        s = RingElem(R, img)
        val = R.zero()
        for c in reversed(R.minpoly):
            val = val * s + c
        if not val.is_zero():
            raise RingError(f"{s} is not a root of {_fmt_int_poly(R.minpoly, 'x')}")
        if int_det(self.matrix()) not in (1, -1):
            raise RingError("induced Z-linear map is not invertible over Z")

    def matrix(self) -> list[list[int]]:
        """Integer matrix (columns = images of 1, x, ..., x^{d-1})."""
        R = self.ring
        s = RingElem(R, self.image)
        cols, cur = [], R.one()
        for _ in range(R.deg):
            cols.append(cur.value)
            cur = cur * s
        return [[cols[j][i] for j in range(R.deg)] for i in range(R.deg)]

    def _apply(self, r):
        M = self.matrix()
        d = self.ring.deg
        return RingElem(self.ring, tuple(sum(M[i][j] * r.value[j] for j in range(d)) for i in range(d)))

    def inverse(self):
        from .linalg import fraction_solve

        e1 = [0] * self.ring.deg
        if self.ring.deg > 1:
            e1[1] = 1
        else:
            e1 = list(self.ring.gen().value)
        sol = fraction_solve(self.matrix(), e1)
        return OrderRootMap(self.ring, tuple(int(s) for s in sol))

    def is_identity(self):
        return self.image == self.ring.gen().value

    def spec(self):
        return f"ring:root={_fmt_int_poly(self.image, 'x')}"


def ring_auto_apply(alpha: RingAuto, r: RingElem) -> RingElem:
    return alpha(r)


def fixed_submodule_rank(sigma: RingAuto) -> int:
    """Rank of ker(sigma - id) on Z^deg(m) for an automorphism of a monogenic order."""
    from .linalg import int_rank

    ring = sigma.ring
    if not isinstance(ring, MonogenicOrder):
        raise RingError("fixed_submodule_rank needs a monogenic order")
    d = ring.deg
    if isinstance(sigma, IdentityAuto):
        return d
    M = sigma.matrix()
    for i in range(d):
        M[i][i] -= 1
    return d - int_rank(M)


def order_auto_matrix(sigma: RingAuto) -> list[list[int]]:
    d = sigma.ring.deg
    if isinstance(sigma, IdentityAuto):
        return [[int(i == j) for j in range(d)] for i in range(d)]
    return sigma.matrix()


# ---------------------------------------------------------------------------
# Text forms


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_]\w*)|(\S))")


class _ExprParser:
    """Recursive-descent evaluator for + - * ^ ( ) over ring elements."""

    def __init__(self, text: str, ring: Ring, variables: dict[str, RingElem]):
        self.tokens = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                break
            num, ident, sym = m.groups()
            if num is not None:
                self.tokens.append(("num", int(num)))
            elif ident is not None:
                self.tokens.append(("id", ident))
            else:
                self.tokens.append(("sym", sym))
            pos = m.end()
        self.i = 0
        self.ring = ring
        self.vars = variables

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, sym):
        tok = self.take()
        if tok != ("sym", sym):
            raise ParseError(f"expected {sym!r}, got {tok[1]!r}")

    def parse(self) -> RingElem:
        if not self.tokens:
            raise ParseError("empty expression")
        val = self.expr()
        if self.i != len(self.tokens):
            raise ParseError(f"unexpected token {self.peek()[1]!r}")
        return val

    def expr(self):
        kind, v = self.peek()
        if (kind, v) == ("sym", "-"):
            self.take()
            val = -self.term()
        else:
            if (kind, v) == ("sym", "+"):
                self.take()
            val = self.term()
        while True:
            kind, v = self.peek()
            if (kind, v) == ("sym", "+"):
                self.take()
                val = val + self.term()
            elif (kind, v) == ("sym", "-"):
                self.take()
                val = val - self.term()
            else:
                return val

    def term(self):
        val = self.power()
        while True:
            kind, v = self.peek()
            if (kind, v) == ("sym", "*"):
                self.take()
                val = val * self.power()
            elif kind in ("num", "id") or (kind, v) == ("sym", "("):
                val = val * self.power()
            else:
                return val

    def power(self):
        base = self.atom()
        if self.peek() == ("sym", "^"):
            self.take()
            sign = 1
            if self.peek() == ("sym", "-"):
                self.take()
                sign = -1
            elif self.peek() == ("sym", "("):
                self.take()
                if self.peek() == ("sym", "-"):
                    self.take()
                    sign = -1
                kind, n = self.take()
                if kind != "num":
                    raise ParseError("exponent must be an integer")
                self.expect(")")
                return base ** (sign * n)
            kind, n = self.take()
            if kind != "num":
                raise ParseError("exponent must be an integer")
            return base ** (sign * n)
        return base

    def atom(self):
        kind, v = self.take()
        if kind == "num":
            return self.ring(v)
        if kind == "id":
            if v not in self.vars:
                raise ParseError(f"unknown variable {v!r} for {self.ring.spec()}")
            return self.vars[v]
        if (kind, v) == ("sym", "("):
            val = self.expr()
            self.expect(")")
            return val
        raise ParseError(f"unexpected token {v!r}")


def parse_element(ring: Ring, text: str, var: str | None = None) -> RingElem:
    """Evaluate polynomial text (e.g. ``t^-1+2*t``, ``(x+1)*t^2``) in ``ring``."""
    variables = ring.variables()
    if var is not None and isinstance(ring, (PolyRing, LaurentRing)):
        variables = dict(variables)
        variables[var] = ring.gen()
    return _ExprParser(text, ring, variables).parse()


def _parse_int_poly(text: str) -> tuple[int, ...]:
    R = PolyRing(Integers())
    f = parse_element(R, text, var="x")
    return tuple(c.value for c in R.coefficients(f))


def parse_ring(spec: str) -> Ring:
    """Parse ``fq:5``, ``fq:2^2:x^2+x+1``, ``fq:4``, ``zz``, ``order:x^2+1``,
    ``poly:<spec>`` and ``laurent:<spec>``."""
    spec = spec.strip()
    head, _, rest = spec.partition(":")
    head = head.lower()
    if head == "poly":
        return PolyRing(parse_ring(rest))
    if head == "laurent":
        return LaurentRing(parse_ring(rest))
    if head in ("zz", "z", "int"):
        if rest:
            raise ParseError(f"unexpected parameters in {spec!r}")
        return Integers()
    if head == "order":
        return MonogenicOrder(_parse_int_poly(rest))
    if head == "fq":
        qpart, _, mod = rest.partition(":")
        if "^" in qpart:
            p_s, k_s = qpart.split("^", 1)
            p, k = int(p_s), int(k_s)
        else:
            pk = prime_power(int(qpart))
            if pk is None:
                raise NotPrime(f"{qpart} is not a prime power")
            p, k = pk
        if k == 1:
            if mod:
                raise ParseError("prime fields take no modulus")
            return PrimeField(p)
        if not mod:
            return field_of_order(p**k)
        m = [c % p for c in _parse_int_poly(mod)]
        if len(m) - 1 != k:
            raise ParseError(f"modulus degree {len(m) - 1} does not match q = {p}^{k}")
        return make_finite_field(p, m)
    raise ParseError(f"unknown ring spec {spec!r}")


def enumerate_polys(ring: PolyRing, max_deg: int) -> list[RingElem]:
    """All polynomials of degree <= max_deg over a finite base, ordered by coefficient index."""
    elems = ring.base.elements()
    out = []
    for cs in product(elems, repeat=max_deg + 1):
        out.append(ring(list(reversed(cs))))
    return out


def enumerate_laurent(ring: LaurentRing, lo: int, hi: int) -> list[RingElem]:
    elems = ring.base.elements()
    out = []
    for cs in product(elems, repeat=hi - lo + 1):
        out.append(ring.from_coeff_map({lo + i: c for i, c in enumerate(reversed(cs))}))
    return out


def as_fraction_matrix(M) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in M]
