"""Exact lattice counts D(x), the error term Delta(x), multiplicities and jumps.

D(x) = #{(h, r) >= 1 : h^a r^b <= x}, Delta(x) = D(x) - zeta(b/a) x^(1/a)
- zeta(a/b) x^(1/b).  Counting uses the closed condition, so Delta is
right-continuous and a value at a jump is the post-jump value.

Integer pairs are counted in exact integer arithmetic.  Irrational pairs use
double precision with an explicit error budget: a float decision is trusted
only when the float value is further than ``FLOAT_TOL`` (relative) from the
decision boundary; otherwise the comparison is redone exactly or in ball
arithmetic with escalating precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from latmesh import kernels
from latmesh.errors import AmbiguousBoundary, AmbiguousOrder, MemoryGuard, ValidationError
from latmesh.precision.ball import PrecisionContext, RealBall, ball_sum
from latmesh.precision.exact import DecimalReal, to_ball
from latmesh.precision.frac import frac_decompose
from latmesh.precision.introot import integer_kth_root, is_perfect_power
from latmesh.precision.pair import ExponentPair

# relative slack for trusting a double-precision decision; float evaluation of
# exp(g log y) with |g log y| < 64 is accurate to ~2^-45 relative
FLOAT_TOL = 2.0**-36
SIEVE_CAP = 10**9 // 8
NAIVE_CAP = 10**7


def as_exact(x) -> Fraction:
    """Exact rational value of an evaluation point (ints, floats, decimals, exact balls)."""
    if isinstance(x, bool):
        raise ValidationError("x must be numeric")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, (Fraction, float)):
        return Fraction(x)
    if isinstance(x, DecimalReal):
        return x.value
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, RealBall) and x.exact is not None:
        return x.exact
    if isinstance(x, np.integer):
        return Fraction(int(x))
    if isinstance(x, np.floating):
        return Fraction(float(x))
    raise ValidationError(f"evaluation point must be an exact real, got {type(x).__name__}")


def _floor(q: Fraction) -> int:
    return q.numerator // q.denominator


# -- certified comparisons for irrational pairs -----------------------------------


def lattice_leq(pair: ExponentPair, h: int, r: int, x: Fraction) -> bool:
    """Certified h^a r^b <= x."""
    exact = pair.lattice_value_exact(h, r)
    if exact is not None:
        return exact <= x
    last = None
    for prec in pair.ctx.ladder():
        v = pair.lattice_value(h, r, prec)
        if v.certainly_le(x):
            return True
        if RealBall.exact_value(x, prec).certainly_lt(v):
            return False
        last = prec
    raise AmbiguousBoundary(f"h^a r^b at (h, r) = ({h}, {r}) is indistinguishable from x = {x} at {last} bits")


def _largest_leq(est: float, pred) -> int:
    """Largest k >= 0 with pred(k), given a float estimate of the crossing point.

    pred is monotone (true up to some k*, false after).  The float estimate is
    trusted unless it lies within FLOAT_TOL of an integer.
    """
    k = math.floor(est)
    near = round(est)
    if abs(est - near) > FLOAT_TOL * max(1.0, abs(est)) + 1e-300:
        return max(k, 0)
    k = max(near, 0)
    while k > 0 and not pred(k):
        k -= 1
    while pred(k + 1):
        k += 1
    return k


def _count_h(pair: ExponentPair, r: int, x: Fraction, xf: float) -> int:
    """#{h >= 1 : h^a r^b <= x}."""
    if pair.is_integer:
        return integer_kth_root(_floor(x) // r**pair.b, pair.a)
    f = pair.floats()
    est = math.exp((math.log(xf) - f["b"] * math.log(r)) / f["a"])
    return _largest_leq(est, lambda h: h == 0 or lattice_leq(pair, h, r, x))


def _count_r(pair: ExponentPair, h: int, x: Fraction, xf: float) -> int:
    """#{r >= 1 : h^a r^b <= x}."""
    if pair.is_integer:
        return integer_kth_root(_floor(x) // h**pair.a, pair.b)
    f = pair.floats()
    est = math.exp((math.log(xf) - f["a"] * math.log(h)) / f["b"])
    return _largest_leq(est, lambda r: r == 0 or lattice_leq(pair, h, r, x))


def _split_point(pair: ExponentPair, x: Fraction, xf: float) -> int:
    """floor(x^(1/(a+b))) = #{m >= 1 : m^a m^b <= x}."""
    if pair.is_integer:
        return integer_kth_root(_floor(x), pair.a + pair.b)
    f = pair.floats()
    est = math.exp(math.log(xf) / (f["a"] + f["b"]))
    return _largest_leq(est, lambda m: m == 0 or lattice_leq(pair, m, m, x))


def _check_x(x: Fraction) -> None:
    if x < 1:
        raise ValidationError("x must be >= 1")


# -- counts -------------------------------------------------------------------------


def count_naive(pair: ExponentPair, x) -> int:
    """D(x) by the direct double loop over (h, r)."""
    xq = as_exact(x)
    _check_x(xq)
    if xq > NAIVE_CAP:
        raise ValidationError(f"count_naive is limited to x <= {NAIVE_CAP}")
    if pair.is_integer:
        return int(kernels.naive_count(pair.a, pair.b, _floor(xq)))
    f = pair.floats()
    xf = float(xq)
    r = np.arange(1, _count_r(pair, 1, xq, xf) + 1, dtype=np.float64)
    rb = r ** f["b"]
    # every h up to the float estimate plus two, for every r, in one flat grid
    width = np.floor((xf / rb) ** (1.0 / f["a"])).astype(np.int64) + 2
    starts = np.cumsum(width) - width
    h = (np.arange(int(width.sum())) - np.repeat(starts, width) + 1).astype(np.float64)
    rr = np.repeat(r, width)
    v = h ** f["a"] * np.repeat(rb, width)
    slack = FLOAT_TOL * xf
    total = int(np.count_nonzero(v < xf - slack))
    for i in np.nonzero(np.abs(v - xf) <= slack)[0]:
        total += lattice_leq(pair, int(h[i]), int(rr[i]), xq)
    return total


def count_hyperbola(pair: ExponentPair, x) -> int:
    """D(x) by splitting both sums at floor(x^(1/(a+b)))."""
    xq = as_exact(x)
    _check_x(xq)
    if pair.is_integer:
        xi = _floor(xq)
        if xi < 1 << 62:
            return int(kernels.hyperbola_counts(pair.a, pair.b, np.array([xi], dtype=np.int64))[0])
        return _hyperbola_exact_big(pair.a, pair.b, xi)
    xf = float(xq)
    n0 = _split_point(pair, xq, xf)
    total = 0
    for m in range(1, n0 + 1):
        total += _count_h(pair, m, xq, xf) + _count_r(pair, m, xq, xf)
    return total - n0 * n0


def _hyperbola_exact_big(a: int, b: int, x: int) -> int:
    n0 = integer_kth_root(x, a + b)
    total = 0
    for m in range(1, n0 + 1):
        total += integer_kth_root(x // m**b, a) + integer_kth_root(x // m**a, b)
    return total - n0 * n0


def count_many(pair: ExponentPair, xs) -> np.ndarray:
    """D at many points (vectorised kernel for integer pairs)."""
    if pair.is_integer:
        xi = np.array([_floor(as_exact(x)) for x in xs], dtype=np.int64)
        if (xi < 1).any():
            raise ValidationError("x must be >= 1")
        return kernels.hyperbola_counts(pair.a, pair.b, xi)
    return np.array([count_hyperbola(pair, x) for x in xs], dtype=np.int64)


@dataclass(frozen=True)
class CountResult:
    x: Fraction
    D: int
    main: RealBall
    delta: RealBall


def main_term(pair: ExponentPair, x, prec: int | None = None) -> RealBall:
    return pair.main_term(as_exact(x), prec)


def delta_eval(pair: ExponentPair, x, ctx: PrecisionContext | None = None) -> CountResult:
    """D(x), the main term and Delta(x) = D - main as a ball."""
    if ctx is not None:
        pair = pair.with_ctx(ctx)
    xq = as_exact(x)
    _check_x(xq)
    d = count_hyperbola(pair, xq)
    main = pair.main_term(xq)
    return CountResult(xq, d, main, RealBall.exact_value(d, main.prec) - main)


def main_term_floats(pair: ExponentPair) -> tuple[float, float, float, float]:
    """(zeta(b/a), 1/a, zeta(a/b), 1/b) in double precision for vectorised work."""
    f = pair.floats()
    return float(pair.zeta_b_over_a(80)), f["inv_a"], float(pair.zeta_a_over_b(80)), f["inv_b"]


def delta_many(pair: ExponentPair, xs) -> np.ndarray:
    """Delta at many points in double precision (D exact, main term rounded)."""
    za, ia, zb, ib = main_term_floats(pair)
    counts = count_many(pair, xs).astype(np.float64)
    xf = np.array([float(as_exact(x)) for x in xs])
    return counts - (za * xf**ia + zb * xf**ib)


# -- multiplicities and jumps -------------------------------------------------------


def sieve_d(pair: ExponentPair, X: int, cap: int = SIEVE_CAP) -> np.ndarray:
    """d(n) = #{(h, r) : h^a r^b = n} for 1 <= n <= X; entry n-1 holds d(n).

    The returned array is read-only.
    """
    if not pair.is_integer:
        raise ValidationError("sieve_d needs an integer pair")
    if X > cap:
        raise MemoryGuard(f"sieve length {X} exceeds cap {cap}")
    if X < 1:
        raise ValidationError("X must be >= 1")
    d = kernels.window_multiplicities(pair.a, pair.b, 0, int(X))
    d.setflags(write=False)
    return d


@dataclass
class JumpStream:
    """Jump abscissae u = h^a r^b in (T, T+T0], increasing, with multiplicities.

    ``values`` holds doubles for vectorised work; ``exact`` holds the integer
    abscissae for integer pairs.  For irrational pairs the ordering of
    ``values`` has been certified and ``params`` lists one (h, r) per jump.
    """

    T: Fraction
    T0: Fraction
    values: np.ndarray
    mult: np.ndarray
    count_before: int
    exact: np.ndarray | None = None
    params: np.ndarray | None = None
    pair: ExponentPair | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def total(self) -> int:
        return int(self.mult.sum())

    def ball(self, i: int, prec: int = 192):
        if self.exact is not None:
            return int(self.exact[i])
        h, r = (int(v) for v in self.params[i])
        return self.pair.lattice_value(h, r, prec)

    @property
    def jumps(self) -> list:
        return [(self.ball(i), int(self.mult[i])) for i in range(len(self))]


def _check_window(T: Fraction, T0: Fraction) -> None:
    if T < 1:
        raise ValidationError("window needs T >= 1")
    if not 0 < T0 <= T:
        raise ValidationError("window needs 0 < T0 <= T")


def jumps_in_window(pair: ExponentPair, T, T0, cap: int = SIEVE_CAP) -> JumpStream:
    """All jumps of D in (T, T+T0] with multiplicities."""
    Tq, T0q = as_exact(T), as_exact(T0)
    _check_window(Tq, T0q)
    end = Tq + T0q
    if pair.is_integer:
        lo, hi = _floor(Tq), _floor(end)
        if hi - lo > cap:
            raise MemoryGuard(f"window of {hi - lo} integers exceeds cap {cap}")
        d = kernels.window_multiplicities(pair.a, pair.b, lo, hi)
        idx = np.nonzero(d)[0]
        exact = idx.astype(np.int64) + lo + 1
        before = count_hyperbola(pair, lo) if lo >= 1 else 0
        return JumpStream(Tq, T0q, exact.astype(np.float64), d[idx].astype(np.int64), before, exact=exact, pair=pair)
    return _jumps_irrational(pair, Tq, T0q)


def _jumps_irrational(pair: ExponentPair, T: Fraction, T0: Fraction) -> JumpStream:
    end = T + T0
    tf, ef = float(T), float(end)
    f = pair.floats()
    hs, rs = [], []
    for r in range(1, _count_r(pair, 1, end, ef) + 1):
        h_lo = _count_h(pair, r, T, tf)
        h_hi = _count_h(pair, r, end, ef)
        if h_hi > h_lo:
            h = np.arange(h_lo + 1, h_hi + 1, dtype=np.int64)
            hs.append(h)
            rs.append(np.full(h.shape, r, dtype=np.int64))
    if hs:
        h = np.concatenate(hs)
        rr = np.concatenate(rs)
    else:
        h = rr = np.zeros(0, dtype=np.int64)
    values = h.astype(np.float64) ** f["a"] * rr.astype(np.float64) ** f["b"]
    order = np.argsort(values, kind="stable")
    values, h, rr = values[order], h[order], rr[order]
    mult = np.ones(len(values), dtype=np.int64)
    params = np.stack([h, rr], axis=1) if len(h) else np.zeros((0, 2), dtype=np.int64)
    values, mult, params = _certify_order(pair, values, mult, params)
    before = count_hyperbola(pair, T)
    return JumpStream(T, T0, values, mult, before, params=params, pair=pair)


def _certify_order(pair, values, mult, params):
    """Re-check adjacent values closer than the float budget; merge exact ties."""
    if len(values) < 2:
        return values, mult, params
    gaps = np.diff(values)
    close = np.nonzero(gaps <= 4 * FLOAT_TOL * values[1:])[0]
    if close.size == 0:
        return values, mult, params
    keep = np.ones(len(values), dtype=bool)
    # handle runs of close values with exact/ball comparisons
    for i in close:
        (h1, r1), (h2, r2) = params[i], params[i + 1]
        cmp = _compare_lattice(pair, int(h1), int(r1), int(h2), int(r2))
        if cmp == 0:
            mult[i + 1] += mult[i]
            keep[i] = False
        elif cmp > 0:
            values[i], values[i + 1] = values[i + 1], values[i]
            params[[i, i + 1]] = params[[i + 1, i]]
            mult[[i, i + 1]] = mult[[i + 1, i]]
    return values[keep], mult[keep], params[keep]


def _compare_lattice(pair: ExponentPair, h1, r1, h2, r2) -> int:
    """Sign of h1^a r1^b - h2^a r2^b, certified."""
    if (h1, r1) == (h2, r2):
        return 0
    e1, e2 = pair.lattice_value_exact(h1, r1), pair.lattice_value_exact(h2, r2)
    if e1 is not None and e2 is not None:
        return (e1 > e2) - (e1 < e2)
    for prec in pair.ctx.ladder():
        v = pair.lattice_value(h1, r1, prec) - pair.lattice_value(h2, r2, prec)
        s = v.sign()
        if s is not None and s != 0:
            return s
    raise AmbiguousOrder(f"cannot order ({h1},{r1}) and ({h2},{r2}) at max precision")


# -- psi sums --------------------------------------------------------------------


def _root_term(pair: ExponentPair, x: Fraction, m: int, first: str):
    """(x / m^b)^(1/a) for first='a', (x / m^a)^(1/b) for first='b'.

    Returns an exact Fraction when the value is provably rational, otherwise a
    callable prec -> RealBall.
    """
    outer, inner = ("a", "b") if first == "a" else ("b", "a")
    inv = pair.exponent("inv_" + outer)
    if pair.is_integer:
        base = x / Fraction(m) ** pair.exponent(inner)
        k = int(1 / inv)
        n, d = is_perfect_power(base.numerator, k), is_perfect_power(base.denominator, k)
        if n is not None and d is not None:
            return Fraction(n, d)
        return lambda prec: RealBall.exact_value(base, prec).rational_pow(Fraction(inv))
    mp = pair.lattice_value_exact(1, m) if inner == "b" else pair.lattice_value_exact(m, 1)
    if mp is not None and x == mp:
        return Fraction(1)

    def term(prec: int) -> RealBall:
        base = RealBall.exact_value(x, prec) / pair.power(m, inner, prec)
        if isinstance(inv, (int, Fraction)):
            return base.rational_pow(Fraction(inv))
        return (to_ball(inv, prec) * base.log()).exp()

    return term


def psi_sum_f(first: str, pair: ExponentPair, x, ctx: PrecisionContext | None = None) -> RealBall:
    """f(a,b;x) = -sum_{m <= x^(1/(a+b))} psi((x/m^b)^(1/a))  (first='a').

    first='b' gives f(b,a;x) with the roles of a and b exchanged.  Terms whose
    double-precision value is safely away from an integer use the float value
    with an error radius; the others go through frac_decompose.
    """
    if first not in ("a", "b"):
        raise ValidationError("first must be 'a' or 'b'")
    if ctx is not None:
        pair = pair.with_ctx(ctx)
    xq = as_exact(x)
    _check_x(xq)
    xf = float(xq)
    n0 = _split_point(pair, xq, xf)
    f = pair.floats()
    outer, inner = (f["a"], f["b"]) if first == "a" else (f["b"], f["a"])
    m = np.arange(1, n0 + 1, dtype=np.float64)
    vals = np.exp((math.log(xf) - inner * np.log(m)) / outer)
    frac = vals - np.floor(vals)
    tol = FLOAT_TOL * np.maximum(vals, 1.0)
    safe = (frac > tol) & (frac < 1 - tol)
    float_terms = (frac[safe] - 0.5).tolist()
    rad = float(np.sum(tol[safe]))
    balls = [RealBall(math.fsum(float_terms), rad * (1 + 1e-9), pair.ctx.bits)]
    for idx in np.nonzero(~safe)[0]:
        t = _root_term(pair, xq, int(idx) + 1, first)
        balls.append(frac_decompose(t, pair.ctx).psi)
    return -ball_sum(balls, pair.ctx.bits)
