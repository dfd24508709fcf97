"""Midpoint-radius real balls on top of mpmath's raw ``libmp`` layer.

A :class:`RealBall` stores a midpoint rounded to the working precision and an
upward-rounded radius.  Every operation returns a ball that contains the
exact result for every choice of inputs inside the argument balls.  Balls
created from exact rationals also remember that rational in ``exact`` so
callers can decide integer boundaries without relying on the midpoint.

No global mpmath context is touched; all calls pass precision and rounding
explicitly, which keeps the module safe to use from several threads.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from mpmath import libmp as L
from mpmath import mpf

from latmesh.errors import ValidationError
from latmesh.precision.introot import is_perfect_power

_RP = 64  # precision of radius arithmetic
_FZERO = L.fzero
_FONE = L.fone

DEFAULT_BITS = 192
DEFAULT_MAX_BITS = 4096


def default_max_bits() -> int:
    env = os.environ.get("LATMESH_MAX_BITS")
    return int(env) if env else DEFAULT_MAX_BITS


class _EscalationCounter:
    """Process-wide count of precision escalations (reported by the CLI)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._n = 0

    def bump(self) -> None:
        with self._lock:
            self._n += 1

    def read(self) -> int:
        return self._n

    def reset(self) -> None:
        with self._lock:
            self._n = 0


ESCALATIONS = _EscalationCounter()


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision plus the escalation ladder used on near-ties."""

    bits: int = DEFAULT_BITS
    max_bits: int = 0
    escalation_factor: int = 2

    def __post_init__(self):
        if self.max_bits == 0:
            object.__setattr__(self, "max_bits", max(default_max_bits(), self.bits))
        if self.bits < 16:
            raise ValidationError("precision below 16 bits")
        if self.bits > self.max_bits:
            raise ValidationError(f"bits={self.bits} exceeds max_bits={self.max_bits}")
        if self.escalation_factor < 2:
            raise ValidationError("escalation_factor must be >= 2")

    def ladder(self):
        """Yield the precisions tried in order: bits, bits*f, ... capped at max_bits."""
        p = self.bits
        while True:
            yield p
            if p >= self.max_bits:
                return
            p = min(p * self.escalation_factor, self.max_bits)
            ESCALATIONS.bump()

    def with_bits(self, bits: int) -> "PrecisionContext":
        return PrecisionContext(bits, max(self.max_bits, bits), self.escalation_factor)


def _mag_up(x) -> tuple:
    """|x| rounded up to radius precision."""
    return L.mpf_pos(L.mpf_abs(x), _RP, "u")


def _radd(*xs) -> tuple:
    s = _FZERO
    for x in xs:
        s = L.mpf_add(s, x, _RP, "u")
    return s


def _rmul(x, y) -> tuple:
    return L.mpf_mul(x, y, _RP, "u")


def _max_mag(x, y) -> tuple:
    a, b = _mag_up(x), _mag_up(y)
    return a if L.mpf_cmp(a, b) >= 0 else b


def _ulp_err(m, prec: int) -> tuple:
    """Upper bound on |exact - m| when m is a round-to-nearest result at prec."""
    if m == _FZERO:
        return _FZERO
    return L.mpf_shift(_mag_up(m), 1 - prec)


def _to_mpf(x, prec: int):
    """Convert an exact scalar to (mpf rounded to nearest, rounding error, Fraction|None)."""
    if isinstance(x, bool):
        x = int(x)
    if isinstance(x, int):
        return L.from_int(x), _FZERO, Fraction(x)
    if isinstance(x, Rational):
        q = Fraction(x)
        if q.denominator & (q.denominator - 1) == 0 and abs(q.numerator).bit_length() <= prec:
            m = L.from_rational(q.numerator, q.denominator, prec, "n")
            return m, _FZERO, q
        m = L.from_rational(q.numerator, q.denominator, prec, "n")
        return m, _ulp_err(m, prec), q
    if isinstance(x, float):
        m = L.from_float(x)
        return m, _FZERO, Fraction(x)
    if isinstance(x, mpf):
        return x._mpf_, _FZERO, None
    if isinstance(x, str):
        return _to_mpf(Fraction(x), prec)
    raise TypeError(f"cannot convert {type(x).__name__} to RealBall")


class RealBall:
    """Closed ball [mid - rad, mid + rad] at binary precision ``prec``."""

    __slots__ = ("_mid", "_rad", "prec", "exact")

    def __init__(self, mid=0, rad=0, prec: int = DEFAULT_BITS, exact: Fraction | None = None):
        if isinstance(mid, tuple):
            m, e = mid, _FZERO
        else:
            m, e, ex = _to_mpf(mid, prec)
            if exact is None and rad == 0:
                exact = ex
        if isinstance(rad, tuple):
            r = rad
        else:
            r, re, _ = _to_mpf(rad, _RP)
            r = _radd(L.mpf_abs(r), re)
        if L.mpf_sign(r) < 0:
            raise ValidationError("negative radius")
        self._mid = m
        self._rad = _radd(r, e)
        self.prec = prec
        self.exact = exact

    # construction -----------------------------------------------------------
    @classmethod
    def _raw(cls, mid, rad, prec, exact=None) -> "RealBall":
        b = cls.__new__(cls)
        b._mid = mid
        b._rad = rad
        b.prec = prec
        b.exact = exact
        return b

    @classmethod
    def exact_value(cls, x, prec: int = DEFAULT_BITS) -> "RealBall":
        """Ball for an exact int / Fraction / decimal string."""
        m, e, ex = _to_mpf(x, prec)
        return cls._raw(m, e, prec, ex)

    @classmethod
    def from_interval(cls, lo, hi, prec: int) -> "RealBall":
        """Smallest convenient ball containing the raw mpf interval [lo, hi]."""
        if L.mpf_lt(hi, lo):
            lo, hi = hi, lo
        mid = L.mpf_shift(L.mpf_add(lo, hi, prec, "n"), -1)
        r1 = L.mpf_sub(hi, mid, _RP, "u")
        r2 = L.mpf_sub(mid, lo, _RP, "u")
        return cls._raw(mid, _max_mag(r1, r2), prec)

    @classmethod
    def pi(cls, prec: int = DEFAULT_BITS) -> "RealBall":
        m = L.mpf_pi(prec, "n")
        return cls._raw(m, _ulp_err(m, prec), prec)

    # accessors --------------------------------------------------------------
    @property
    def mid(self) -> mpf:
        return mpf(self._mid)

    @property
    def rad(self) -> mpf:
        return mpf(self._rad)

    def lower(self) -> tuple:
        return L.mpf_sub(self._mid, self._rad, self.prec + 8, "f")

    def upper(self) -> tuple:
        return L.mpf_add(self._mid, self._rad, self.prec + 8, "c")

    def __float__(self) -> float:
        return L.to_float(self._mid)

    def rad_float(self) -> float:
        return L.to_float(self._rad, rnd="u")

    def is_exact(self) -> bool:
        return self._rad == _FZERO

    def rel_accuracy_bits(self) -> float:
        """-log2(rad/|mid|); inf for exact balls."""
        if self._rad == _FZERO:
            return float("inf")
        if self._mid == _FZERO:
            return float("-inf")
        import math

        return math.log2(abs(L.to_float(self._mid))) - math.log2(L.to_float(self._rad))

    def __repr__(self) -> str:
        digits = max(6, min(40, int(self.prec * 0.30103)))
        return f"RealBall({L.to_str(self._mid, digits)} +/- {L.to_str(self._rad, 3)})"

    def to_str(self, digits: int = 20) -> str:
        return L.to_str(self._mid, digits)

    # comparisons ------------------------------------------------------------
    def contains(self, x) -> bool:
        if isinstance(x, RealBall):
            return L.mpf_le(self.lower(), x.lower()) and L.mpf_le(x.upper(), self.upper())
        if isinstance(x, mpf):
            return L.mpf_le(self.lower(), x._mpf_) and L.mpf_le(x._mpf_, self.upper())
        if hasattr(x, "ball"):
            return self.contains(x.ball(self.prec + 64))
        q = Fraction(x)
        lo = Fraction(*L.to_rational(self.lower()))
        hi = Fraction(*L.to_rational(self.upper()))
        return lo <= q <= hi

    def overlaps(self, other: "RealBall") -> bool:
        d = L.mpf_abs(L.mpf_sub(self._mid, other._mid))
        return L.mpf_le(d, _radd(self._rad, other._rad))

    def certainly_positive(self) -> bool:
        return L.mpf_sign(self.lower()) > 0

    def certainly_negative(self) -> bool:
        return L.mpf_sign(self.upper()) < 0

    def certainly_nonzero(self) -> bool:
        return self.certainly_positive() or self.certainly_negative()

    def certainly_lt(self, other) -> bool:
        return (other - self).certainly_positive()

    def certainly_le(self, other) -> bool:
        d = other - self
        if d.exact is not None:
            return d.exact >= 0
        return L.mpf_sign(d.lower()) >= 0

    def sign(self) -> int | None:
        """+1/-1/0 when decided, None when the ball straddles zero."""
        if self.exact is not None:
            return (self.exact > 0) - (self.exact < 0)
        if self.certainly_positive():
            return 1
        if self.certainly_negative():
            return -1
        return None

    # arithmetic ---------------------------------------------------------------
    def _coerce(self, other) -> "RealBall":
        if isinstance(other, RealBall):
            return other
        return RealBall.exact_value(other, self.prec)

    def __neg__(self) -> "RealBall":
        ex = -self.exact if self.exact is not None else None
        return RealBall._raw(L.mpf_neg(self._mid), self._rad, self.prec, ex)

    def __pos__(self) -> "RealBall":
        return self

    def __abs__(self) -> "RealBall":
        if L.mpf_sign(self.lower()) >= 0:
            return self
        if L.mpf_sign(self.upper()) <= 0:
            return -self
        # straddles zero: [0, max(|lo|, |hi|)]
        return RealBall.from_interval(_FZERO, _max_mag(self.lower(), self.upper()), self.prec)

    def _finish(self, exact_mid, approx_mid, prop_rad, prec, ex):
        if exact_mid is not None:
            mid = L.mpf_pos(exact_mid, prec, "n")
            err = _mag_up(L.mpf_sub(exact_mid, mid))
        else:
            mid = approx_mid
            err = _ulp_err(mid, prec)
        return RealBall._raw(mid, _radd(prop_rad, err), prec, ex)

    def __add__(self, other) -> "RealBall":
        o = self._coerce(other)
        prec = max(self.prec, o.prec)
        ex = self.exact + o.exact if self.exact is not None and o.exact is not None else None
        if self._rad == _FZERO and o._rad == _FZERO:
            return self._finish(L.mpf_add(self._mid, o._mid), None, _FZERO, prec, ex)
        mid = L.mpf_add(self._mid, o._mid, prec, "n")
        return self._finish(None, mid, _radd(self._rad, o._rad), prec, ex)

    __radd__ = __add__

    def __sub__(self, other) -> "RealBall":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "RealBall":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "RealBall":
        o = self._coerce(other)
        prec = max(self.prec, o.prec)
        ex = self.exact * o.exact if self.exact is not None and o.exact is not None else None
        if self._rad == _FZERO and o._rad == _FZERO:
            return self._finish(L.mpf_mul(self._mid, o._mid), None, _FZERO, prec, ex)
        mid = L.mpf_mul(self._mid, o._mid, prec, "n")
        prop = _radd(
            _rmul(_mag_up(self._mid), o._rad),
            _rmul(_mag_up(o._mid), self._rad),
            _rmul(self._rad, o._rad),
        )
        return self._finish(None, mid, prop, prec, ex)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RealBall":
        o = self._coerce(other)
        prec = max(self.prec, o.prec)
        if not o.certainly_nonzero() and not (o.exact is not None and o.exact != 0):
            raise ZeroDivisionError("division by a ball containing zero")
        ex = self.exact / o.exact if self.exact is not None and o.exact is not None else None
        mid = L.mpf_div(self._mid, o._mid, prec, "n")
        if self._rad == _FZERO and o._rad == _FZERO:
            return self._finish(None, mid, _FZERO, prec, ex)
        # |x/y - m1/m2| <= (r1 + |m1/m2| r2) / (|m2| - r2)
        num = _radd(self._rad, _rmul(_mag_up(mid), o._rad))
        den = L.mpf_sub(L.mpf_abs(o._mid), o._rad, _RP, "d")
        prop = L.mpf_div(num, den, _RP, "u")
        return self._finish(None, mid, prop, prec, ex)

    def __rtruediv__(self, other) -> "RealBall":
        return self._coerce(other) / self

    def __pow__(self, e) -> "RealBall":
        if isinstance(e, bool):
            e = int(e)
        if isinstance(e, int):
            return self._int_pow(e)
        if isinstance(e, Rational):
            return self.rational_pow(Fraction(e))
        if isinstance(e, RealBall):
            if e.exact is not None:
                return self.rational_pow(e.exact)
            return (e * self.log()).exp()
        raise TypeError(f"unsupported exponent type {type(e).__name__}")

    def __rpow__(self, base) -> "RealBall":
        return self._coerce(base) ** self

    def _int_pow(self, n: int) -> "RealBall":
        if n < 0:
            return RealBall.exact_value(1, self.prec) / self._int_pow(-n)
        result = RealBall.exact_value(1, self.prec)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def rational_pow(self, e: Fraction) -> "RealBall":
        """self**e for rational e; exact when base and result are rational."""
        e = Fraction(e)
        if e.denominator == 1:
            return self._int_pow(e.numerator)
        if self.exact is not None:
            q = self.exact
            if q < 0:
                raise ValidationError("fractional power of a negative number")
            if q == 0:
                return RealBall.exact_value(0, self.prec)
            k = e.denominator
            num_root = is_perfect_power(q.numerator, k)
            den_root = is_perfect_power(q.denominator, k)
            if num_root is not None and den_root is not None:
                root = Fraction(num_root, den_root)
                return RealBall.exact_value(root, self.prec)._int_pow(e.numerator)
        base = self
        if e.denominator == 2:
            r = base.sqrt()
            return r._int_pow(e.numerator)
        return (self.log() * RealBall.exact_value(e, self.prec)).exp()

    # elementary functions ---------------------------------------------------
    def _monotone(self, f, lo_domain=None) -> "RealBall":
        """Apply an increasing raw function using directed rounding at the endpoints."""
        p = self.prec
        if self._rad == _FZERO:
            lo_in = hi_in = self._mid
        else:
            lo_in, hi_in = self.lower(), self.upper()
        if lo_domain is not None and L.mpf_lt(lo_in, lo_domain):
            raise ValidationError("ball leaves the function domain")
        lo = f(lo_in, p + 10, "f")
        hi = f(hi_in, p + 10, "c")
        # slack of a few ulps guards against imperfect directed rounding
        slack_lo = L.mpf_shift(_mag_up(lo), -p - 4)
        slack_hi = L.mpf_shift(_mag_up(hi), -p - 4)
        lo = L.mpf_sub(lo, slack_lo, p + 12, "f")
        hi = L.mpf_add(hi, slack_hi, p + 12, "c")
        return RealBall.from_interval(lo, hi, p)

    def sqrt(self) -> "RealBall":
        if self.exact is not None:
            if self.exact < 0:
                raise ValidationError("sqrt of a negative number")
            n = is_perfect_power(self.exact.numerator, 2)
            d = is_perfect_power(self.exact.denominator, 2)
            if n is not None and d is not None:
                return RealBall.exact_value(Fraction(n, d), self.prec)
        if L.mpf_sign(self.lower()) < 0:
            if L.mpf_sign(self.upper()) < 0:
                raise ValidationError("sqrt of a negative ball")
            clipped = RealBall.from_interval(_FZERO, self.upper(), self.prec)
            return clipped.sqrt()
        return self._monotone(L.mpf_sqrt)

    def exp(self) -> "RealBall":
        if self.exact == 0:
            return RealBall.exact_value(1, self.prec)
        return self._monotone(L.mpf_exp)

    def log(self) -> "RealBall":
        if self.exact == 1:
            return RealBall.exact_value(0, self.prec)
        if not self.certainly_positive():
            raise ValidationError("log of a ball that is not certainly positive")
        return self._monotone(L.mpf_log)

    def cos(self) -> "RealBall":
        if self.exact == 0:
            return RealBall.exact_value(1, self.prec)
        p = self.prec
        m = L.mpf_cos(self._mid, p, "n")
        err = L.mpf_shift(_FONE, 2 - p)
        return RealBall._raw(m, _radd(self._rad, err), p)

    def sin(self) -> "RealBall":
        if self.exact == 0:
            return RealBall.exact_value(0, self.prec)
        p = self.prec
        m = L.mpf_sin(self._mid, p, "n")
        err = L.mpf_shift(_FONE, 2 - p)
        return RealBall._raw(m, _radd(self._rad, err), p)

    def floor_if_certain(self) -> int | None:
        """floor(value) when the whole ball lies in one [n, n+1), else None."""
        if self.exact is not None:
            return self.exact.numerator // self.exact.denominator
        lo = L.mpf_floor(self.lower())
        hi = L.mpf_floor(self.upper())
        if lo == hi and L.mpf_lt(self.upper(), L.mpf_add(lo, _FONE)):
            return int(L.to_int(lo))
        return None

    def with_prec(self, prec: int) -> "RealBall":
        return RealBall._raw(self._mid, self._rad, prec, self.exact)

    def union(self, other: "RealBall") -> "RealBall":
        lo = self.lower() if L.mpf_le(self.lower(), other.lower()) else other.lower()
        hi = self.upper() if L.mpf_le(other.upper(), self.upper()) else other.upper()
        return RealBall.from_interval(lo, hi, max(self.prec, other.prec))

    def intersection(self, other: "RealBall") -> "RealBall | None":
        lo = self.lower() if L.mpf_le(other.lower(), self.lower()) else other.lower()
        hi = self.upper() if L.mpf_le(self.upper(), other.upper()) else other.upper()
        if L.mpf_lt(hi, lo):
            return None
        return RealBall.from_interval(lo, hi, max(self.prec, other.prec))


def ball(x, prec: int = DEFAULT_BITS) -> RealBall:
    """Coerce ints, Fractions, decimal strings, floats or exact reals to a ball."""
    if isinstance(x, RealBall):
        return x
    if hasattr(x, "ball"):
        return x.ball(prec)
    return RealBall.exact_value(x, prec)


def ball_sum(terms, prec: int) -> RealBall:
    """Sum of balls; midpoints accumulated exactly then rounded once.

    The result does not depend on the order of ``terms``.
    """
    acc_mid = _FZERO
    acc_rad = _FZERO
    exact = Fraction(0)
    for t in terms:
        acc_mid = L.mpf_add(acc_mid, t._mid)
        acc_rad = _radd(acc_rad, t._rad)
        if exact is not None:
            exact = exact + t.exact if t.exact is not None else None
    mid = L.mpf_pos(acc_mid, prec, "n")
    err = _mag_up(L.mpf_sub(acc_mid, mid))
    return RealBall._raw(mid, _radd(acc_rad, err), prec, exact)
