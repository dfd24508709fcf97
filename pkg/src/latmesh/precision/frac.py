"""Certified floor, fractional part, sawtooth psi and distance to the nearest integer."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from mpmath import libmp as L

from latmesh.errors import AmbiguousFloor
from latmesh.precision.ball import PrecisionContext, RealBall
from latmesh.precision.exact import DecimalReal, QuadraticSurd, to_ball

_HALF = Fraction(1, 2)


@dataclass(frozen=True)
class FracDecomposition:
    floor_part: int
    frac_part: RealBall  # {t}
    psi: RealBall  # {t} - 1/2
    dist: RealBall  # ||t||


def _dist(frac: RealBall) -> RealBall:
    if frac.exact is not None:
        return RealBall.exact_value(min(frac.exact, 1 - frac.exact), frac.prec)
    if frac.certainly_le(_HALF):
        return frac
    other = 1 - frac
    if other.certainly_le(_HALF):
        return other
    # frac straddles 1/2: min(f, 1-f) lies in [min(lo, 1-hi), 1/2]
    lo = frac.lower()
    lo2 = L.mpf_sub(L.fone, frac.upper(), frac.prec + 8, "f")
    low = lo if L.mpf_le(lo, lo2) else lo2
    return RealBall.from_interval(low, L.from_rational(1, 2, 8), frac.prec)


def _from_exact(t: Fraction, prec: int) -> FracDecomposition:
    n = t.numerator // t.denominator
    f = t - n
    fb = RealBall.exact_value(f, prec)
    return FracDecomposition(n, fb, RealBall.exact_value(f - _HALF, prec), _dist(fb))


def frac_decompose(t, ctx: PrecisionContext | None = None) -> FracDecomposition:
    """Decompose t = floor + {t}; psi(t) = {t} - 1/2 and ||t|| = min({t}, 1 - {t}).

    Rational inputs (ints, Fractions, decimals, exact balls) are decided by
    exact arithmetic, so psi at an integer is exactly -1/2.  Quadratic surds
    use exact sign tests.  Other inputs escalate precision while the ball
    straddles an integer; callables prec -> RealBall are re-evaluated at each
    rung.
    """
    ctx = ctx or PrecisionContext()
    if isinstance(t, (int, Fraction)):
        return _from_exact(Fraction(t), ctx.bits)
    if isinstance(t, DecimalReal):
        return _from_exact(t.value, ctx.bits)
    if isinstance(t, QuadraticSurd):
        if t.is_rational():
            return _from_exact(t.p, ctx.bits)
        n = t.floor()
        fb = (t - n).ball(ctx.bits)
        return FracDecomposition(n, fb, fb - _HALF, _dist(fb))
    for prec in ctx.ladder():
        tb = to_ball(t, prec)
        if tb.exact is not None:
            return _from_exact(tb.exact, ctx.bits)
        n = tb.floor_if_certain()
        if n is not None:
            fb = (tb - n).with_prec(ctx.bits)
            return FracDecomposition(n, fb, fb - _HALF, _dist(fb))
        if isinstance(t, RealBall):
            break
    raise AmbiguousFloor(f"ball {tb!r} straddles an integer at {prec} bits")


def psi(t, ctx: PrecisionContext | None = None) -> RealBall:
    return frac_decompose(t, ctx).psi
