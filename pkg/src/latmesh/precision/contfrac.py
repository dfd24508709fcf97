"""Continued-fraction convergents of quadratic surds and certified decimals."""

from __future__ import annotations

from fractions import Fraction

from latmesh.errors import PrecisionExhausted, ValidationError
from latmesh.precision.exact import DecimalReal, QuadraticSurd


def _surd_quotients(alpha: QuadraticSurd, count: int) -> list[int]:
    quotients = []
    x = alpha
    for _ in range(count):
        a = x.floor()
        quotients.append(a)
        x = 1 / (x - a)
    return quotients


def _rational_quotients(q: Fraction):
    while True:
        a = q.numerator // q.denominator
        yield a
        rest = q - a
        if rest == 0:
            return
        q = 1 / rest


def _decimal_quotients(alpha: DecimalReal, count: int) -> list[int]:
    lo, hi = alpha.interval()
    out = []
    for a_lo, a_hi in zip(_rational_quotients(lo), _rational_quotients(hi)):
        if a_lo != a_hi:
            break
        out.append(a_lo)
        if len(out) == count:
            return out
    raise PrecisionExhausted(
        f"{alpha.digits} stated digits certify only {len(out)} partial quotients, {count} requested"
    )


def partial_quotients(alpha, count: int) -> list[int]:
    if count < 1:
        raise ValidationError("count must be positive")
    if isinstance(alpha, QuadraticSurd):
        if alpha.is_rational():
            raise ValidationError("alpha must be irrational")
        return _surd_quotients(alpha, count)
    if isinstance(alpha, DecimalReal):
        return _decimal_quotients(alpha, count)
    raise ValidationError(f"unsupported irrational description {type(alpha).__name__}")


def cf_convergents(alpha, count: int) -> list[tuple[int, int]]:
    """First ``count`` convergents p/q of alpha, in lowest terms with q increasing."""
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    out = []
    for a in partial_quotients(alpha, count):
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def convergent_denominators(alpha, limit: int) -> list[int]:
    """All convergent denominators q <= limit (partial quotients fetched lazily)."""
    dens = []
    count = 4
    while True:
        conv = cf_convergents(alpha, count)
        dens = [q for _, q in conv if q <= limit]
        if conv[-1][1] > limit:
            return sorted(set(dens))
        count *= 2
