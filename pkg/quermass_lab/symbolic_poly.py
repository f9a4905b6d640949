"""
Exact integer polynomials for the generating-function identities behind the
reverse quermassintegral inequalities.

A linear combination sum_i c_i W_i is encoded as the polynomial sum_i c_i x^i.
Under that encoding the inner-parallel Steiner formula W_q(K - B) is
x^q (1-x)^{d-q}, a consecutive deficit W_l - 2W_{l+1} + W_{l+2} is
x^l (1-x)^2, and every identity below is a polynomial identity over ZZ.
"""

import logging
from typing import Iterable, List, Tuple

import sympy as sp
from pydantic import BaseModel, ConfigDict, Field
from sympy import Poly, Rational, ZZ

from quermass_lab.errors import QuermassError, RejectedInputError

logger = logging.getLogger(__name__)

x = sp.Symbol("x")


class IntPolynomial:
    """Univariate polynomial with arbitrary-precision integer coefficients.

    Thin value wrapper around a sympy Poly over ZZ; coefficients are indexed
    by degree with trailing zeros normalized away.
    """

    __slots__ = ("_poly",)

    def __init__(self, coeffs: Iterable[int] = ()):
        coeffs = [int(c) for c in coeffs]
        self._poly = Poly(list(reversed(coeffs)) or [0], x, domain=ZZ)

    @classmethod
    def _wrap(cls, poly: Poly) -> "IntPolynomial":
        out = cls.__new__(cls)
        out._poly = poly.set_domain(ZZ)
        return out

    @classmethod
    def monomial(cls, degree: int, coeff: int = 1) -> "IntPolynomial":
        return cls([0] * degree + [coeff])

    @classmethod
    def binomial_expand(cls, a: int, b: int, m: int) -> "IntPolynomial":
        """(a + b x)^m"""
        if m < 0:
            raise RejectedInputError("exponent must be nonnegative", field="m")
        return cls([a, b]) ** m

    @property
    def coeffs(self) -> Tuple[int, ...]:
        if self._poly.is_zero:
            return ()
        return tuple(int(c) for c in reversed(self._poly.all_coeffs()))

    @property
    def degree(self) -> int:
        return -1 if self._poly.is_zero else int(self._poly.degree())

    def coefficient(self, k: int) -> int:
        return int(self._poly.coeff_monomial(x ** k)) if k >= 0 else 0

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        return IntPolynomial._wrap(self._poly + other._poly)

    def __sub__(self, other: "IntPolynomial") -> "IntPolynomial":
        return IntPolynomial._wrap(self._poly - other._poly)

    def __neg__(self) -> "IntPolynomial":
        return IntPolynomial._wrap(-self._poly)

    def __mul__(self, other) -> "IntPolynomial":
        if isinstance(other, int):
            return IntPolynomial._wrap(self._poly * other)
        return IntPolynomial._wrap(self._poly * other._poly)

    __rmul__ = __mul__

    def __pow__(self, m: int) -> "IntPolynomial":
        if m < 0:
            raise RejectedInputError("exponent must be nonnegative", field="m")
        return IntPolynomial._wrap(self._poly ** m)

    def __eq__(self, other) -> bool:
        if isinstance(other, IntPolynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, (list, tuple)):
            return self.coeffs == IntPolynomial(other).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __call__(self, value):
        return self._poly.eval(value)

    def __repr__(self) -> str:
        return f"IntPolynomial({list(self.coeffs)})"


ONE_MINUS_X = IntPolynomial([1, -1])


def poly_arith(op: str, *args) -> IntPolynomial:
    """Dispatch 'add' | 'multiply' | 'power' | 'binomial_expand'"""
    if op == "add":
        a, b = args
        return a + b
    if op == "multiply":
        a, b = args
        return a * b
    if op == "power":
        a, m = args
        return a ** m
    if op == "binomial_expand":
        a, b, m = args
        return IntPolynomial.binomial_expand(a, b, m)
    raise RejectedInputError(f"unknown polynomial operation {op!r}", field="op")


# ---------------------------------------------------------------------------
# inner parallel bodies

def inner_parallel_coefficients(d: int, q: int) -> IntPolynomial:
    """x^q (1-x)^{d-q}: generating polynomial of W_q(K - B)"""
    if not 0 <= q <= d:
        raise RejectedInputError(f"q must lie in [0, {d}]", field="q")
    return IntPolynomial.monomial(q) * ONE_MINUS_X ** (d - q)


def verify_collapse_identity(d: int, m: int) -> bool:
    """sum_{q=0}^{m} C(m, q) x^q (1-x)^{d-q} == (1-x)^{d-m}"""
    if not 0 <= m <= d:
        raise RejectedInputError(f"m must lie in [0, {d}]", field="m")
    total = IntPolynomial()
    for q in range(m + 1):
        total = total + int(sp.binomial(m, q)) * inner_parallel_coefficients(d, q)
    return total == ONE_MINUS_X ** (d - m)


def verify_generating_identity(n: int) -> bool:
    """sum_{q=0}^{n-2} C(n-2, q) x^q (1-x)^{n+1-q} == (1-x)^3.

    Encodes R = sum_q C(n-2, q) W_q(K - B) = W_0 - 3W_1 + 3W_2 - W_3 in R^{n+1}.
    """
    if n < 2:
        raise RejectedInputError("n must be at least 2", field="n")
    total = IntPolynomial()
    for q in range(n - 1):
        total = total + int(sp.binomial(n - 2, q)) * inner_parallel_coefficients(n + 1, q)
    ok = total == [1, -3, 3, -1]
    logger.debug("generating identity n=%d: %s", n, ok)
    return ok


# ---------------------------------------------------------------------------
# triples from consecutive deficits

def triple_polynomial(i: int, j: int, k: int) -> IntPolynomial:
    """(k-j) x^i + (i-k) x^j + (j-i) x^k"""
    return (IntPolynomial.monomial(i, k - j) + IntPolynomial.monomial(j, i - k)
            + IntPolynomial.monomial(k, j - i))


def deficit_polynomial(l: int) -> IntPolynomial:
    """x^l (1-x)^2: generating polynomial of W_l - 2W_{l+1} + W_{l+2}"""
    return IntPolynomial.monomial(l) * ONE_MINUS_X ** 2


class TripleCertificate(BaseModel):
    """Nonnegative multipliers m_l with target = sum_l m_l x^l (1-x)^2"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    i: int
    j: int
    k: int
    d: int
    first_index: int = Field(description="l of the first multiplier")
    multipliers: Tuple[Rational, ...] = Field(description="m_l for l = first_index, first_index+1, ...")

    def reexpand(self) -> IntPolynomial:
        total = sp.Integer(0)
        for offset, m in enumerate(self.multipliers):
            total += m * x ** (self.first_index + offset) * (1 - x) ** 2
        poly = Poly(sp.expand(total), x, domain=sp.QQ)
        if any(not c.is_integer for c in poly.all_coeffs()):
            raise QuermassError("certificate re-expansion has non-integer coefficients")
        return IntPolynomial._wrap(Poly(poly.as_expr(), x, domain=ZZ))

    def verify(self) -> bool:
        return (all(m >= 0 for m in self.multipliers)
                and self.reexpand() == triple_polynomial(self.i, self.j, self.k))


def triple_from_consecutive(i: int, j: int, k: int, d: int) -> TripleCertificate:
    """Certificate that the (i, j, k) combination is a nonnegative sum of consecutive deficits.

    The multipliers solve the triangular system target = sum_l m_l x^l (1-x)^2
    in the monomial basis, i.e. the exact quotient target / (1-x)^2 shifted by x^i.
    """
    if not 0 <= i < j < k <= d:
        raise RejectedInputError(f"need 0 <= i < j < k <= d, got ({i}, {j}, {k}) with d={d}", field="ijk")

    target = triple_polynomial(i, j, k)
    shifted = Poly(sp.expand(target._poly.as_expr() / x ** i), x, domain=sp.QQ)
    quotient, remainder = sp.div(shifted, Poly((1 - x) ** 2, x, domain=sp.QQ))
    if not remainder.is_zero:
        raise QuermassError(f"triple ({i}, {j}, {k}) is not divisible by (1-x)^2")

    multipliers = tuple(Rational(c) for c in reversed(quotient.all_coeffs()))
    cert = TripleCertificate(i=i, j=j, k=k, d=d, first_index=i, multipliers=multipliers)
    if not cert.verify():
        raise QuermassError(f"no nonnegative consecutive-deficit certificate for ({i}, {j}, {k})")
    return cert


# ---------------------------------------------------------------------------
# Bokowski-Heil coefficients

def bokowski_heil_coefficients(i: int, j: int, k: int) -> Tuple[int, int, int]:
    """(c_ijk, c_jki, c_kij) with c_pqr = (r - q)(p + 1)"""

    def c(p: int, q: int, r: int) -> int:
        return (r - q) * (p + 1)

    return c(i, j, k), c(j, k, i), c(k, i, j)


def verify_bokowski_heil_identity(d_max: int) -> bool:
    """c_ijk + c_jki + c_kij == 0 for every 0 <= i < j < k <= d, d <= d_max"""
    for k in range(2, d_max + 1):
        for j in range(1, k):
            for i in range(j):
                if sum(bokowski_heil_coefficients(i, j, k)) != 0:
                    return False
    return True


# ---------------------------------------------------------------------------
# suite

class IdentityCheck(BaseModel):
    name: str
    parameters: str
    passed: bool


class SymbolicSuiteResult(BaseModel):
    """Outcome of every exact identity check"""
    n_max: int
    checks: List[IdentityCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[IdentityCheck]:
        return [c for c in self.checks if not c.passed]


def run_symbolic_suite(n_max: int = 64, d_max_collapse: int = 10, d_max_triples: int = 8) -> SymbolicSuiteResult:
    """Generating identity for 2 <= n <= n_max, collapse identities, triple certificates, B-H coefficients"""
    if n_max < 2:
        raise RejectedInputError("n_max must be at least 2", field="n_max")
    result = SymbolicSuiteResult(n_max=n_max)

    for n in range(2, n_max + 1):
        result.checks.append(IdentityCheck(name="generating_identity", parameters=f"n={n}",
                                           passed=verify_generating_identity(n)))

    for d in range(2, d_max_collapse + 1):
        for m in range(0, d - 2):
            result.checks.append(IdentityCheck(name="collapse_identity", parameters=f"d={d},m={m}",
                                               passed=verify_collapse_identity(d, m)))

    for d in range(2, d_max_triples + 1):
        for k in range(2, d + 1):
            for j in range(1, k):
                for i in range(j):
                    try:
                        ok = triple_from_consecutive(i, j, k, d).verify()
                    except QuermassError:
                        ok = False
                    result.checks.append(IdentityCheck(name="triple_certificate",
                                                       parameters=f"d={d},ijk=({i},{j},{k})", passed=ok))

    result.checks.append(IdentityCheck(name="bokowski_heil_coefficients", parameters=f"d<={d_max_triples}",
                                       passed=verify_bokowski_heil_identity(d_max_triples)))
    logger.info("symbolic suite: %d checks, %d failed", len(result.checks), len(result.failures))
    return result
