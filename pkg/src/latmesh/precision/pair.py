"""The exponent pair (a, b) and every constant derived from it."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

from latmesh.errors import ValidationError
from latmesh.precision.ball import PrecisionContext, RealBall
from latmesh.precision.exact import DecimalReal, QuadraticSurd, parse_exact, to_ball
from latmesh.precision.zeta import zeta_real


class PairKind(enum.Enum):
    INTEGER_COPRIME = "IntegerCoprime"
    QUADRATIC_SURD = "QuadraticSurd"
    DECIMAL = "Decimal"


def exact_pow_ball(base, expo, prec: int) -> RealBall:
    """base**expo for exact base > 0 and exact exponent, as a ball."""
    bb = to_ball(base, prec)
    if isinstance(expo, QuadraticSurd) and expo.is_rational():
        expo = expo.p
    if isinstance(expo, DecimalReal):
        expo = expo.value
    if isinstance(expo, (int, Fraction)):
        return bb.rational_pow(Fraction(expo))
    return (to_ball(expo, prec) * bb.log()).exp()


@dataclass(frozen=True)
class ExponentPair:
    """Exponents 1 <= a < b of the region h^a r^b <= x.

    Integer pairs must be coprime; quadratic-surd pairs must have an
    irrational ratio (certified exactly); decimal pairs carry a user
    assertion that a/b is irrational.
    """

    a: object
    b: object
    kind: PairKind
    ctx: PrecisionContext = field(default_factory=PrecisionContext, compare=False)
    irrational_asserted: bool = False

    def __post_init__(self):
        a, b = self.a, self.b
        if not a >= 1:
            raise ValidationError("a must be >= 1")
        if a == b:
            raise ValidationError("a = b is the classical divisor problem and is rejected")
        if not a < b:
            raise ValidationError("need a < b")
        if self.kind is PairKind.INTEGER_COPRIME:
            if not (isinstance(a, int) and isinstance(b, int)):
                raise ValidationError("IntegerCoprime needs integer exponents")
            if math.gcd(a, b) != 1:
                raise ValidationError(f"gcd({a}, {b}) != 1; reduce the ratio first")
        elif self.kind is PairKind.QUADRATIC_SURD:
            ratio = QuadraticSurd(0) + a
            ratio = ratio / b
            if ratio.is_rational():
                raise ValidationError("a/b is rational; enter the reduced integer pair instead")
        elif self.kind is PairKind.DECIMAL:
            if not self.irrational_asserted:
                raise ValidationError("Decimal pairs need an explicit irrationality assertion")

    # construction ---------------------------------------------------------
    @classmethod
    def integer(cls, a: int, b: int, ctx: PrecisionContext | None = None) -> "ExponentPair":
        return cls(int(a), int(b), PairKind.INTEGER_COPRIME, ctx or PrecisionContext())

    @classmethod
    def parse(
        cls,
        a: str,
        b: str,
        ctx: PrecisionContext | None = None,
        assert_irrational: bool = False,
    ) -> "ExponentPair":
        """Build a pair from text such as '1', '2', 'sqrt(2)', '1.41421356'."""
        ea, eb = parse_exact(str(a)), parse_exact(str(b))
        ctx = ctx or PrecisionContext()
        if isinstance(ea, DecimalReal) or isinstance(eb, DecimalReal):
            return cls(ea, eb, PairKind.DECIMAL, ctx, irrational_asserted=assert_irrational)
        if isinstance(ea, QuadraticSurd) or isinstance(eb, QuadraticSurd):
            if isinstance(ea, Fraction) or isinstance(eb, Fraction):
                ea, eb = QuadraticSurd(0) + ea, QuadraticSurd(0) + eb
            if isinstance(ea, int):
                ea = QuadraticSurd(ea)
            if isinstance(eb, int):
                eb = QuadraticSurd(eb)
            return cls(ea, eb, PairKind.QUADRATIC_SURD, ctx)
        if isinstance(ea, int) and isinstance(eb, int):
            return cls(ea, eb, PairKind.INTEGER_COPRIME, ctx)
        raise ValidationError("rational non-integer exponents: reduce to a coprime integer pair")

    # identity ---------------------------------------------------------------
    @property
    def is_integer(self) -> bool:
        return self.kind is PairKind.INTEGER_COPRIME

    @property
    def label(self) -> str:
        return f"({self.a},{self.b})"

    @property
    def key(self) -> tuple:
        return (self.kind.value, str(self.a), str(self.b))

    def with_ctx(self, ctx: PrecisionContext) -> "ExponentPair":
        return ExponentPair(self.a, self.b, self.kind, ctx, self.irrational_asserted)

    def provenance(self) -> list[str]:
        if self.kind is PairKind.DECIMAL:
            return ["a/b irrationality is user-asserted; results are conditional on it"]
        return []

    # exact derived quantities (ints/Fractions/surds, or Fractions for decimals) -
    def _ex(self, x):
        return x.value if isinstance(x, DecimalReal) else x

    @cached_property
    def sum_ab(self):
        return self._ex(self.a) + self._ex(self.b)

    @cached_property
    def theta_exact(self):
        return _simplify(Fraction(1) / self.sum_ab if not isinstance(self.sum_ab, QuadraticSurd) else 1 / self.sum_ab)

    def _ratio(self, num, den):
        num, den = self._ex(num), self._ex(den)
        if isinstance(num, QuadraticSurd) or isinstance(den, QuadraticSurd):
            return _simplify((QuadraticSurd(0) + num) / den)
        return Fraction(num) / Fraction(den)

    @cached_property
    def e_h_exact(self):
        a, b = self._ex(self.a), self._ex(self.b)
        return self._ratio(a + 2 * b, 2 * (a + b))

    @cached_property
    def e_r_exact(self):
        a, b = self._ex(self.a), self._ex(self.b)
        return self._ratio(2 * a + b, 2 * (a + b))

    @cached_property
    def inv_a(self):
        return self._ratio(1, self.a)

    @cached_property
    def inv_b(self):
        return self._ratio(1, self.b)

    @cached_property
    def b_over_a(self):
        return self._ratio(self.b, self.a)

    @cached_property
    def a_over_b(self):
        return self._ratio(self.a, self.b)

    def exponent(self, which: str):
        """Exact exponent by name, used by kernels needing floats."""
        return {
            "a": self._ex(self.a),
            "b": self._ex(self.b),
            "theta": self.theta_exact,
            "e_h": self.e_h_exact,
            "e_r": self.e_r_exact,
            "inv_a": self.inv_a,
            "inv_b": self.inv_b,
        }[which]

    # balls ------------------------------------------------------------------
    def ball_of(self, x, prec: int | None = None) -> RealBall:
        return to_ball(x, prec or self.ctx.bits)

    def theta(self, prec: int | None = None) -> RealBall:
        return self.ball_of(self.theta_exact, prec)

    def e_h(self, prec: int | None = None) -> RealBall:
        return self.ball_of(self.e_h_exact, prec)

    def e_r(self, prec: int | None = None) -> RealBall:
        return self.ball_of(self.e_r_exact, prec)

    def c1(self, prec: int | None = None) -> RealBall:
        prec = prec or self.ctx.bits
        return _c1(self.key, self._ex(self.a), self._ex(self.b), prec)

    def c2(self, prec: int | None = None) -> RealBall:
        prec = prec or self.ctx.bits
        return _c2(self.key, self._ex(self.a), self._ex(self.b), prec)

    def zeta_b_over_a(self, prec: int | None = None) -> RealBall:
        prec = prec or self.ctx.bits
        return _zeta_cached(self.b_over_a, prec, self.ctx.max_bits)

    def zeta_a_over_b(self, prec: int | None = None) -> RealBall:
        prec = prec or self.ctx.bits
        return _zeta_cached(self.a_over_b, prec, self.ctx.max_bits)

    def mean_square_coefficient(self, prec: int | None = None) -> RealBall:
        """a^(b/(a+b)) b^(a/(a+b)) / (2 pi^2 (a+b)) = c1^2 / (2 pi^2)."""
        prec = prec or self.ctx.bits
        c1 = self.c1(prec)
        return c1 * c1 / (2 * RealBall.pi(prec) * RealBall.pi(prec))

    def power(self, base, which: str, prec: int | None = None) -> RealBall:
        """base ** exponent(which) as a ball (exact when rational)."""
        return exact_pow_ball(base, self.exponent(which), prec or self.ctx.bits)

    def lattice_value(self, h: int, r: int, prec: int | None = None) -> RealBall:
        """h^a r^b; exact for integer pairs, and whenever both powers are rational."""
        prec = prec or self.ctx.bits
        exact = self.lattice_value_exact(h, r)
        if exact is not None:
            return RealBall.exact_value(exact, prec)
        return self.power(h, "a", prec) * self.power(r, "b", prec)

    def lattice_value_exact(self, h: int, r: int):
        """Exact rational value of h^a r^b when it is provably rational, else None."""
        if self.is_integer:
            return h**self.a * r**self.b
        ha = rational_power(h, self._ex(self.a))
        rb = rational_power(r, self._ex(self.b))
        if ha is None or rb is None:
            return None
        return ha * rb

    def main_term(self, x, prec: int | None = None) -> RealBall:
        """zeta(b/a) x^(1/a) + zeta(a/b) x^(1/b)."""
        prec = prec or self.ctx.bits
        return self.zeta_b_over_a(prec) * self.power(x, "inv_a", prec) + self.zeta_a_over_b(
            prec
        ) * self.power(x, "inv_b", prec)

    def floats(self) -> dict:
        """Double-precision copies of the exponents and constants for kernels."""
        return _floats(self.key, self._ex(self.a), self._ex(self.b))


def _simplify(x):
    if isinstance(x, QuadraticSurd) and x.is_rational():
        return x.p
    return x


def rational_power(base: int, expo):
    """base**expo when provably rational (base 1, or rational exponent with exact root)."""
    if base == 1:
        return Fraction(1)
    if isinstance(expo, QuadraticSurd):
        if not expo.is_rational():
            return None
        expo = expo.p
    expo = Fraction(expo)
    if expo.denominator == 1:
        return Fraction(base) ** expo.numerator
    from latmesh.precision.introot import is_perfect_power

    root = is_perfect_power(base, expo.denominator)
    if root is None:
        return None
    return Fraction(root) ** expo.numerator


@lru_cache(maxsize=256)
def _zeta_cached(s, prec: int, max_bits: int) -> RealBall:
    return zeta_real(s, PrecisionContext(prec, max(max_bits, prec)))


@lru_cache(maxsize=256)
def _c1(key, a, b, prec: int) -> RealBall:
    p = prec + 20
    s = a + b
    e1 = _simplify((QuadraticSurd(0) + b) / (2 * s)) if isinstance(s, QuadraticSurd) else Fraction(b) / (2 * s)
    e2 = _simplify((QuadraticSurd(0) + a) / (2 * s)) if isinstance(s, QuadraticSurd) else Fraction(a) / (2 * s)
    v = exact_pow_ball(a, e1, p) * exact_pow_ball(b, e2, p) / to_ball(s, p).sqrt()
    return v.with_prec(prec)


@lru_cache(maxsize=256)
def _c2(key, a, b, prec: int) -> RealBall:
    p = prec + 20
    s = a + b
    if isinstance(s, QuadraticSurd):
        r1 = _simplify((QuadraticSurd(0) + a) / b)
        r2 = _simplify((QuadraticSurd(0) + b) / a)
        e1 = _simplify((QuadraticSurd(0) + b) / s)
        e2 = _simplify((QuadraticSurd(0) + a) / s)
    else:
        r1, r2 = Fraction(a) / Fraction(b), Fraction(b) / Fraction(a)
        e1, e2 = Fraction(b) / s, Fraction(a) / s
    v = exact_pow_ball(r1, e1, p) + exact_pow_ball(r2, e2, p)
    return v.with_prec(prec)


@lru_cache(maxsize=256)
def _floats(key, a, b) -> dict:
    af, bf = float(a), float(b)
    s = af + bf
    pair_prec = 80
    c1 = float(_c1(key, a, b, pair_prec))
    c2 = float(_c2(key, a, b, pair_prec))
    return {
        "a": af,
        "b": bf,
        "theta": 1.0 / s,
        "e_h": (af + 2 * bf) / (2 * s),
        "e_r": (2 * af + bf) / (2 * s),
        "inv_a": 1.0 / af,
        "inv_b": 1.0 / bf,
        "c1": c1,
        "c2": c2,
    }
