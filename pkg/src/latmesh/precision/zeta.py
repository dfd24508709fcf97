"""Riemann zeta at real arguments by Euler-Maclaurin summation.

For s > 0, s != 1, cutoff N and depth K,

    zeta(s) = sum_{n<N} n^-s + N^(1-s)/(s-1) + N^-s/2
              + sum_{k=1}^{K} B_2k/(2k)! * s(s+1)...(s+2k-2) * N^(-s-2k+1) + R

with |R| <= 4 * s(s+1)...(s+2K-1) * N^(-s-2K+1) / ((2 pi)^(2K) (s+2K-1)),
using |B~_2K(x)| <= |B_2K| = 2 (2K)! zeta(2K) / (2 pi)^(2K) and zeta(2K) < 2.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from mpmath import libmp as L

from latmesh.errors import PoleError, PrecisionExhausted, ValidationError
from latmesh.precision.ball import PrecisionContext, RealBall
from latmesh.precision.exact import to_ball


@lru_cache(maxsize=None)
def _bernoulli_over_factorial(k2: int) -> Fraction:
    """B_{k2} / k2! as an exact rational."""
    p, q = L.bernfrac(k2)
    return Fraction(int(p), int(q) * math.factorial(k2))


def _log_remainder(s: float, n: int, k: int) -> float:
    """natural log of the remainder bound (floating estimate, used for planning)."""
    rising = sum(math.log(s + j) for j in range(2 * k))
    return (
        math.log(4.0)
        + rising
        + (1 - s - 2 * k) * math.log(n)
        - 2 * k * math.log(2 * math.pi)
        - math.log(s + 2 * k - 1)
    )


def _plan(s: float, bits: int) -> tuple[int, int]:
    """Pick (N, K) so the remainder bound is below 2^-(bits+8) (relative to max(1, ~zeta))."""
    target = -(bits + 8) * math.log(2)
    n = max(8, bits // 4)
    while True:
        best = None
        for k in range(1, 4 * n):
            lr = _log_remainder(s, n, k)
            if best is None or lr < best[1]:
                best = (k, lr)
            if lr < target:
                return n, k
            if lr > best[1] + 5:
                break
        n *= 2


def _zeta_at(sb: RealBall, s_hi: float, prec: int) -> RealBall:
    n_cut, k_max = _plan(max(s_hi, 1e-6), prec)
    one = RealBall.exact_value(1, prec)
    total = []
    for n in range(1, n_cut):
        total.append((-sb * RealBall.exact_value(n, prec).log()).exp())
    from latmesh.precision.ball import ball_sum

    acc = ball_sum(total, prec) if total else RealBall.exact_value(0, prec)
    nb = RealBall.exact_value(n_cut, prec)
    log_n = nb.log()
    n_pow = (-sb * log_n).exp()  # N^-s
    acc = acc + n_pow * nb / (sb - one) + n_pow / 2
    rising = sb  # s(s+1)...(s+2k-2), starts at k=1 with a single factor
    n_inv2 = RealBall.exact_value(Fraction(1, n_cut * n_cut), prec)
    term_pow = n_pow / nb  # N^(-s-1)
    for k in range(1, k_max + 1):
        coeff = RealBall.exact_value(_bernoulli_over_factorial(2 * k), prec)
        acc = acc + coeff * rising * term_pow
        rising = rising * (sb + (2 * k - 1)) * (sb + 2 * k)
        term_pow = term_pow * n_inv2
    # remainder bound evaluated at the upper end of s (bound increases with s for s>0
    # only through the rising factorial; N^-s decreases, so bound both pieces separately)
    s_lo = float(L.to_float(sb.lower(), rnd="f"))
    bound_log = (
        math.log(4.0)
        + sum(math.log(s_hi + j) for j in range(2 * k_max))
        + (1 - s_lo - 2 * k_max) * math.log(n_cut)
        - 2 * k_max * math.log(2 * math.pi)
        - math.log(s_lo + 2 * k_max - 1)
    )
    bound = math.exp(bound_log) * (1 + 1e-9)
    return acc + RealBall(0, bound, prec)


def zeta_real(s, ctx: PrecisionContext | None = None) -> RealBall:
    """Ball containing zeta(s) for real s > 0, s != 1.

    ``s`` may be an int, Fraction, QuadraticSurd, DecimalReal, RealBall or a
    callable prec -> RealBall.  Exact inputs are re-evaluated at escalated
    precision until the radius is at most 2^-(bits-8) * max(1, |zeta(s)|).
    """
    ctx = ctx or PrecisionContext()
    last = None
    for prec in ctx.ladder():
        sb = to_ball(s, prec + 20).with_prec(prec + 20)
        if not sb.certainly_positive():
            raise ValidationError("zeta_real requires s > 0")
        if sb.contains(1):
            raise PoleError("argument ball contains the pole s = 1")
        s_hi = float(L.to_float(sb.upper(), rnd="c"))
        z = _zeta_at(sb, s_hi, prec + 20).with_prec(ctx.bits)
        target = math.ldexp(max(1.0, abs(float(z))), -(ctx.bits - 8))
        last = z
        if z.rad_float() <= target:
            return z
        if isinstance(s, RealBall):
            break
    raise PrecisionExhausted(f"zeta({float(last.mid) if last else s}) radius above target at max_bits")
