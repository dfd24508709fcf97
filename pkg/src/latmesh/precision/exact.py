"""Exact real parameters: rationals, quadratic surds p + q*sqrt(d), decimals.

Quadratic surds stay exact under + - * / so irrationality of a/b can be
certified (q != 0) and floors, signs and comparisons are decided by integer
arithmetic.  A :class:`DecimalReal` is a finite decimal that the user asserts
approximates an irrational number to the stated number of digits.
"""

from __future__ import annotations

import ast
import math
import re
from fractions import Fraction
from numbers import Rational

from mpmath import libmp as L

from latmesh.errors import ValidationError
from latmesh.precision.ball import RealBall


def _squarefree_split(d: int) -> tuple[int, int]:
    """Write d = k**2 * m with m squarefree; return (k, m)."""
    k, m = 1, d
    f = 2
    while f * f <= m:
        while m % (f * f) == 0:
            m //= f * f
            k *= f
        f += 1
    return k, m


class QuadraticSurd:
    """The number p + q*sqrt(d) with rational p, q and squarefree d > 1."""

    __slots__ = ("p", "q", "d")

    def __init__(self, p=0, q=0, d: int = 2):
        p, q, d = Fraction(p), Fraction(q), int(d)
        if d < 0:
            raise ValidationError("negative radicand")
        if q != 0:
            k, m = _squarefree_split(d)
            q *= k
            d = m
            if d == 1:
                p, q = p + q, Fraction(0)
        if q == 0:
            d = 1
        self.p, self.q, self.d = p, q, d

    @classmethod
    def sqrt(cls, n) -> "QuadraticSurd":
        n = Fraction(n)
        if n < 0:
            raise ValidationError("sqrt of a negative number")
        # sqrt(u/v) = sqrt(u*v)/v
        return cls(0, Fraction(1, n.denominator), n.numerator * n.denominator)

    # structure --------------------------------------------------------------
    def is_rational(self) -> bool:
        return self.q == 0

    def as_fraction(self) -> Fraction:
        if self.q != 0:
            raise ValidationError(f"{self} is irrational")
        return self.p

    def _lift(self, other) -> "QuadraticSurd":
        if isinstance(other, QuadraticSurd):
            o = other
        elif isinstance(other, (int, Rational)):
            o = QuadraticSurd(other)
        elif isinstance(other, DecimalReal):
            o = QuadraticSurd(other.value)
        else:
            return NotImplemented
        if self.q != 0 and o.q != 0 and self.d != o.d:
            raise ValidationError(f"mixed radicands sqrt({self.d}) and sqrt({o.d})")
        return o

    def _d(self, o: "QuadraticSurd") -> int:
        return self.d if self.q != 0 else o.d

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QuadraticSurd(self.p + o.p, self.q + o.q, self._d(o))

    __radd__ = __add__

    def __neg__(self):
        return QuadraticSurd(-self.p, -self.q, self.d)

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        d = self._d(o)
        return QuadraticSurd(self.p * o.p + self.q * o.q * d, self.p * o.q + self.q * o.p, d)

    __rmul__ = __mul__

    def conjugate(self) -> "QuadraticSurd":
        return QuadraticSurd(self.p, -self.q, self.d)

    def norm(self) -> Fraction:
        return self.p * self.p - self.q * self.q * self.d

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero surd")
        num = self * o.conjugate()
        return QuadraticSurd(num.p / n, num.q / n, self._d(o))

    def __rtruediv__(self, other):
        return self._lift(other) / self

    # order ------------------------------------------------------------------
    def sign(self) -> int:
        """Exact sign of p + q*sqrt(d)."""
        sp = (self.p > 0) - (self.p < 0)
        sq = (self.q > 0) - (self.q < 0)
        if sq == 0:
            return sp
        if sp == 0 or sp == sq:
            return sq
        # opposite signs: compare p^2 with q^2 d
        diff = self.p * self.p - self.q * self.q * self.d
        return sp if diff > 0 else sq

    def _cmp(self, other) -> int:
        return (self - other).sign()

    def __eq__(self, other):
        try:
            o = self._lift(other)
        except ValidationError:
            return False
        if o is NotImplemented:
            return NotImplemented
        return self.p == o.p and self.q == o.q and (self.q == 0 or self.d == o.d)

    def __hash__(self):
        return hash((self.p, self.q, self.d))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def floor(self) -> int:
        if self.q == 0:
            return math.floor(self.p)
        guess = math.floor(float(self.p) + float(self.q) * math.sqrt(self.d))
        n = guess - 2
        while (self - (n + 1)).sign() >= 0:
            n += 1
        while (self - n).sign() < 0:
            n -= 1
        return n

    def __float__(self) -> float:
        return float(self.ball(80))

    # conversion -------------------------------------------------------------
    def ball(self, prec: int = 192) -> RealBall:
        if self.q == 0:
            return RealBall.exact_value(self.p, prec)
        k = prec + 16
        s = math.isqrt(self.d << (2 * k))
        lo_sqrt = Fraction(s, 1 << k)
        hi_sqrt = Fraction(s + 1, 1 << k)
        a = self.p + self.q * lo_sqrt
        b = self.p + self.q * hi_sqrt
        lo, hi = (a, b) if a <= b else (b, a)
        lo_m = L.from_rational(lo.numerator, lo.denominator, prec + 16, "f")
        hi_m = L.from_rational(hi.numerator, hi.denominator, prec + 16, "c")
        return RealBall.from_interval(lo_m, hi_m, prec)

    def __repr__(self):
        return f"QuadraticSurd({self})"

    def __str__(self):
        if self.q == 0:
            return str(self.p)
        parts = []
        if self.p != 0:
            parts.append(str(self.p))
        coeff = "" if self.q == 1 else ("-" if self.q == -1 else f"{self.q}*")
        term = f"{coeff}sqrt({self.d})"
        if parts and not term.startswith("-"):
            term = "+" + term
        parts.append(term)
        return "".join(parts)


class DecimalReal:
    """A finite decimal standing in for a user-asserted irrational number.

    ``value`` is used verbatim in all computations; ``digits`` states how many
    fractional digits are trusted, so the represented irrational lies in
    [value - 10**-digits, value + 10**-digits].
    """

    __slots__ = ("value", "digits", "text")

    def __init__(self, text: str, digits: int | None = None):
        text = text.strip()
        if not re.fullmatch(r"[+-]?\d+(\.\d+)?", text):
            raise ValidationError(f"not a decimal literal: {text!r}")
        self.text = text
        self.value = Fraction(text)
        stated = len(text.split(".")[1]) if "." in text else 0
        self.digits = stated if digits is None else int(digits)

    def interval(self) -> tuple[Fraction, Fraction]:
        eps = Fraction(1, 10**self.digits)
        return self.value - eps, self.value + eps

    def ball(self, prec: int = 192) -> RealBall:
        return RealBall.exact_value(self.value, prec)

    def _val(self, other):
        if isinstance(other, DecimalReal):
            return other.value
        return other

    def __add__(self, other):
        return self.value + self._val(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.value - self._val(other)

    def __rsub__(self, other):
        return self._val(other) - self.value

    def __mul__(self, other):
        return self.value * self._val(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.value / self._val(other)

    def __rtruediv__(self, other):
        return self._val(other) / self.value

    def __neg__(self):
        return -self.value

    def __lt__(self, other):
        return self.value < self._val(other)

    def __le__(self, other):
        return self.value <= self._val(other)

    def __gt__(self, other):
        return self.value > self._val(other)

    def __ge__(self, other):
        return self.value >= self._val(other)

    def __eq__(self, other):
        return self.value == self._val(other)

    def __hash__(self):
        return hash(self.value)

    def __float__(self):
        return float(self.value)

    def __str__(self):
        return self.text

    def __repr__(self):
        return f"DecimalReal({self.text!r}, digits={self.digits})"


ExactReal = int | Fraction | QuadraticSurd | DecimalReal


def to_ball(x, prec: int) -> RealBall:
    """Ball enclosure of any exact real, an existing ball, or a callable prec -> ball."""
    if isinstance(x, RealBall):
        return x
    if callable(x) and not isinstance(x, (int, Fraction)):
        return x(prec)
    if hasattr(x, "ball"):
        return x.ball(prec)
    return RealBall.exact_value(x, prec)


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return Fraction(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        lhs, rhs = _eval_node(node.left), _eval_node(node.right)
        if isinstance(node.op, ast.Add):
            return lhs + rhs
        if isinstance(node.op, ast.Sub):
            return lhs - rhs
        if isinstance(node.op, ast.Mult):
            return lhs * rhs
        if isinstance(node.op, ast.Div):
            return lhs / rhs
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt":
        if len(node.args) != 1:
            raise ValidationError("sqrt takes one argument")
        arg = _eval_node(node.args[0])
        if isinstance(arg, QuadraticSurd):
            arg = arg.as_fraction()
        return QuadraticSurd.sqrt(arg)
    if isinstance(node, ast.Name):
        m = re.fullmatch(r"sqrt(\d+)", node.id)
        if m:
            return QuadraticSurd.sqrt(int(m.group(1)))
    raise ValidationError(f"unsupported expression element {ast.dump(node)}")


def parse_exact(text: str, decimal_digits: int | None = None):
    """Parse '2', '3/2', 'sqrt(2)', 'sqrt2', '(1+sqrt(5))/2' or a decimal literal.

    Decimal literals become :class:`DecimalReal`; everything else evaluates to
    an int, Fraction or :class:`QuadraticSurd`.
    """
    text = str(text).strip()
    if re.fullmatch(r"[+-]?\d+\.\d+", text):
        return DecimalReal(text, decimal_digits)
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"cannot parse {text!r}") from exc
    value = _eval_node(tree)
    if isinstance(value, QuadraticSurd) and value.is_rational():
        value = value.p
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    return value
