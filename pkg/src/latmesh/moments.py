"""Window integrals of Delta and Delta^2, sign changes and mean-square predictions.

Between consecutive jumps D is constant and Delta = D - m(x) with
m(x) = zeta(b/a) x^(1/a) + zeta(a/b) x^(1/b), so every window integral is a
sum of closed-form pieces (see latmesh._pykernels for the algebra).  The
pieces are evaluated in fixed-size shards, possibly on several threads, and
reduced with math.fsum, so results do not depend on the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from latmesh import kernels
from latmesh.coincidence import GabResult, gab_for_moments
from latmesh.counting import JumpStream, as_exact, jumps_in_window, main_term_floats
from latmesh.errors import AmbiguousBoundary, ValidationError
from latmesh.precision.ball import PrecisionContext, RealBall
from latmesh.precision.pair import ExponentPair

SHARD = 1 << 16
SERIES_SWITCH = 0.05
SERIES_TERMS = 16
_EPS = 2.0**-52
# |Delta| samples this close to zero are re-evaluated in ball arithmetic
_ZERO_TOL = 1e-7


@dataclass(frozen=True)
class Window:
    T: Fraction
    T0: Fraction

    def __post_init__(self):
        T, T0 = as_exact(self.T), as_exact(self.T0)
        if T < 1:
            raise ValidationError("window needs T >= 1")
        if not 0 < T0 <= T:
            raise ValidationError("window needs 0 < T0 <= T")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "T0", T0)

    @property
    def end(self) -> Fraction:
        return self.T + self.T0


@dataclass
class PieceTotals:
    """Integrals over [start, end] and the sign data of Delta on the pieces."""

    start: Fraction
    end: Fraction
    int_delta: RealBall
    int_delta_sq: RealBall
    sup_abs_delta: RealBall
    sign_changes: int
    change_locations: list
    pieces: int


@dataclass
class WindowMoment:
    window: Window
    int_delta: RealBall
    int_delta_sq: RealBall
    sup_abs_delta: RealBall
    sign_changes: int
    change_locations: list
    predicted_main: RealBall
    ratio: RealBall
    gab: GabResult = field(repr=False, default=None)
    pieces: int = 0


def _binom(g: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (g - i) / (i + 1)
    return out


def series_coefficients(g0: float, g1: float, terms: int = SERIES_TERMS) -> tuple:
    """Coefficients with phi1 = s^2 horner(ser1, s) and phi2 = s^3 horner(ser2, s)."""

    def ser1(g):
        return np.array([_binom(g, j + 1) / (j + 2) for j in range(terms)])

    def ser2(g, h):
        return np.array(
            [(_binom(g + h, j + 2) - _binom(g, j + 2) - _binom(h, j + 2)) / (j + 3) for j in range(terms)]
        )

    return ser1(g0), ser1(g1), ser2(g0, g0), ser2(g0, g1), ser2(g1, g1)


def _pieces(jumps: JumpStream, start: Fraction, end: Fraction):
    """Left ends, lengths and counts of the constant pieces of D on [start, end]."""
    u = np.asarray(jumps.values, dtype=np.float64)
    left = np.concatenate([[float(start)], u])
    right = np.concatenate([u, [float(end)]])
    counts = jumps.count_before + np.concatenate([[0], np.cumsum(jumps.mult)])
    return left, right - left, counts.astype(np.float64)


def _evaluate(pair: ExponentPair, left, length, counts, threads: int):
    z0, g0, z1, g1 = main_term_floats(pair)
    coeffs = series_coefficients(g0, g1)
    n = len(left)
    int1, int2 = np.empty(n), np.empty(n)
    dstart, dend = np.empty(n), np.empty(n)

    def run(lo):
        hi = min(lo + SHARD, n)
        kernels.piece_integrals(
            left[lo:hi], length[lo:hi], counts[lo:hi], z0, z1, g0, g1, *coeffs, SERIES_SWITCH,
            int1[lo:hi], int2[lo:hi], dstart[lo:hi], dend[lo:hi],
        )

    starts = range(0, n, SHARD)
    if threads > 1 and n > SHARD:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    else:
        for lo in starts:
            run(lo)
    return int1, int2, dstart, dend, (z0, g0, z1, g1)


def _delta_ball(pair: ExponentPair, count: int, x, prec: int) -> RealBall:
    return RealBall.exact_value(count, prec) - pair.main_term(x, prec)


def _sample_sign(value: float, exact_value) -> int:
    """Sign of a Delta sample, re-deciding near-zero floats in ball arithmetic."""
    if abs(value) > _ZERO_TOL:
        return 1 if value > 0 else -1
    b = exact_value()
    s = b.sign()
    if s is None:
        raise AmbiguousBoundary("Delta too close to zero to decide its sign")
    return s


def _root_in_piece(count: float, lo: float, hi: float, m) -> float:
    """x in (lo, hi) with m(x) = count, m increasing: safeguarded Newton."""
    mf, dmf = m
    x = 0.5 * (lo + hi)
    for _ in range(100):
        fx = mf(x) - count
        if fx > 0:
            hi = x
        else:
            lo = x
        step = fx / dmf(x)
        nxt = x - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 4 * _EPS * abs(x):
            return nxt
        x = nxt
    return x


def integrate_range(pair: ExponentPair, start, end, ctx: PrecisionContext | None = None, threads: int = 1) -> PieceTotals:
    """Piecewise-exact integrals of Delta and Delta^2 over [start, end], plus sign data."""
    ctx = ctx or pair.ctx
    start, end = as_exact(start), as_exact(end)
    if start < 1 or end <= start:
        raise ValidationError("need 1 <= start < end")
    jumps = jumps_in_window(pair, start, end - start) if end - start <= start else _long_jumps(pair, start, end)
    left, length, counts = _pieces(jumps, start, end)
    int1, int2, dstart, dend, (z0, g0, z1, g1) = _evaluate(pair, left, length, counts, threads)

    total1 = math.fsum(int1.tolist())
    total2 = math.fsum(int2.tolist())
    mag = np.abs(counts) + np.abs(z0) * left**g0 + np.abs(z1) * left**g1
    amp = np.maximum(np.abs(dstart), np.abs(dend))
    rad1 = 8 * _EPS * float(np.sum(mag * length))
    rad2 = 16 * _EPS * float(np.sum(mag * amp * length))
    if jumps.exact is None:
        # float breakpoints of irrational pairs shift each jump by <= 4 eps u
        shift = 4 * _EPS * np.abs(jumps.values) * jumps.mult
        rad1 += float(shift.sum())
        rad2 += float((shift * 2 * amp[1:]).sum())
    sup = float(amp.max())

    changes, locations = _sign_changes(pair, jumps, left, length, counts, dstart, dend, ctx, (z0, g0, z1, g1))
    prec = ctx.bits
    return PieceTotals(
        start,
        end,
        RealBall(total1, rad1, prec),
        RealBall(total2, rad2, prec),
        RealBall(sup, 8 * _EPS * float(mag.max()), prec),
        changes,
        locations,
        len(left),
    )


def _long_jumps(pair: ExponentPair, start: Fraction, end: Fraction) -> JumpStream:
    """Jump stream for [start, end] when the window is longer than its start."""
    jumps = jumps_in_window(pair, end / 2, end / 2)
    parts = [jumps]
    hi = end / 2
    while hi > start:
        lo = max(start, hi / 2)
        parts.append(jumps_in_window(pair, lo, hi - lo))
        hi = lo
    parts.reverse()
    first = parts[0]
    values = np.concatenate([p.values for p in parts])
    mult = np.concatenate([p.mult for p in parts])
    exact = np.concatenate([p.exact for p in parts]) if first.exact is not None else None
    params = np.concatenate([p.params for p in parts]) if first.params is not None else None
    return JumpStream(start, end - start, values, mult, first.count_before, exact=exact, params=params, pair=pair)


def _sign_changes(pair, jumps, left, length, counts, dstart, dend, ctx, floats):
    """Strict sign flips of Delta inside pieces and across jumps, with locations."""
    z0, g0, z1, g1 = floats
    prec = ctx.bits

    def m(x):
        return z0 * x**g0 + z1 * x**g1

    def dm(x):
        return z0 * g0 * x ** (g0 - 1) + z1 * g1 * x ** (g1 - 1)

    n = len(left)
    near = (np.abs(dstart) <= _ZERO_TOL) | (np.abs(dend) <= _ZERO_TOL)
    s_start = np.sign(dstart).astype(np.int64)
    s_end = np.sign(dend).astype(np.int64)
    for i in np.nonzero(near)[0]:
        i = int(i)
        x_left = jumps.ball(i - 1, prec) if i > 0 else jumps.T
        x_right = jumps.ball(i, prec) if i < n - 1 else jumps.T + jumps.T0
        c = int(counts[i])
        s_start[i] = _sample_sign(dstart[i], lambda c=c, x=x_left: _delta_ball(pair, c, x, prec))
        s_end[i] = _sample_sign(dend[i], lambda c=c, x=x_right: _delta_ball(pair, c, x, prec))
    # zero-length pieces (a jump on the right edge) contribute only their start value
    seq_sign = np.empty(2 * n, dtype=np.int64)
    seq_sign[0::2], seq_sign[1::2] = s_start, s_end
    keep = np.ones(2 * n, dtype=bool)
    keep[1::2] = length > 0
    idx = np.nonzero(keep)[0]
    signs = seq_sign[idx]
    flips = np.nonzero(signs[1:] * signs[:-1] < 0)[0]
    locations = []
    for f in flips:
        k = int(idx[f + 1])
        i = k // 2
        if k % 2 == 1:
            locations.append(_root_in_piece(counts[i], left[i], left[i] + length[i], (m, dm)))
        else:
            locations.append(float(left[i]))
    return len(flips), locations


def predicted_main(pair: ExponentPair, window: Window, gab: GabResult, prec: int) -> RealBall:
    """coef * G * int_T^{T+T0} x^theta dx."""
    theta = pair.theta(prec)
    e = theta + 1
    lo, hi = RealBall.exact_value(window.T, prec), RealBall.exact_value(window.end, prec)
    integral = (hi**e - lo**e) / e
    return pair.mean_square_coefficient(prec) * gab.value.with_prec(prec) * integral


def window_moments(
    pair: ExponentPair,
    window: Window,
    gab: GabResult | None = None,
    ctx: PrecisionContext | None = None,
    threads: int = 1,
) -> WindowMoment:
    ctx = ctx or pair.ctx
    gab = gab or gab_for_moments(pair, ctx)
    tot = integrate_range(pair, window.T, window.end, ctx, threads)
    pred = predicted_main(pair, window, gab, ctx.bits)
    return WindowMoment(
        window,
        tot.int_delta,
        tot.int_delta_sq,
        tot.sup_abs_delta,
        tot.sign_changes,
        tot.change_locations,
        pred,
        tot.int_delta_sq / pred,
        gab,
        tot.pieces,
    )


def mean_value_check(pair: ExponentPair, T, ctx: PrecisionContext | None = None, threads: int = 1) -> tuple:
    """(int_1^T Delta dx, that integral divided by T/4)."""
    Tq = as_exact(T)
    if Tq < 2:
        raise ValidationError("T must be >= 2")
    tot = integrate_range(pair, 1, Tq, ctx, threads)
    return tot.int_delta, tot.int_delta / (RealBall.exact_value(Tq, tot.int_delta.prec) / 4)


@dataclass(frozen=True)
class ConvergenceRow:
    T: Fraction
    ratio: RealBall
    sign_changes: int
    sup_abs_delta: RealBall
    moment: WindowMoment = field(repr=False, compare=False)


def convergence_report(pair: ExponentPair, T_list, ctx: PrecisionContext | None = None, threads: int = 1) -> dict:
    """Rows of (T, ratio, sign changes, sup|Delta|) on windows [T, 2T] and the sup-exponent fit."""
    Ts = [as_exact(t) for t in T_list]
    if any(b <= a for a, b in zip(Ts, Ts[1:])):
        raise ValidationError("T_list must be increasing")
    ctx = ctx or pair.ctx
    gab = gab_for_moments(pair, ctx)
    rows = []
    for T in Ts:
        wm = window_moments(pair, Window(T, T), gab, ctx, threads)
        rows.append(ConvergenceRow(T, wm.ratio, wm.sign_changes, wm.sup_abs_delta, wm))
    exponent = None
    if len(rows) >= 2:
        lx = np.log([float(r.T) for r in rows])
        ly = np.log([float(r.sup_abs_delta) for r in rows])
        exponent = float(np.polyfit(lx, ly, 1)[0])
    return {"rows": rows, "sup_exponent": exponent}


# -- short-window sign changes ---------------------------------------------------------------


def sign_change_length_exponent(pair: ExponentPair) -> float:
    """1 - a/(b(a+b)(a+b-1))."""
    f = pair.floats()
    a, b = f["a"], f["b"]
    return 1 - a / (b * (a + b) * (a + b - 1))


def sign_change_length(pair: ExponentPair, T, c: float) -> float:
    Tf = float(as_exact(T))
    return c * Tf ** sign_change_length_exponent(pair) * math.log(Tf) ** 4


def max_change_gap(start: float, end: float, locations) -> float:
    """Largest stretch of [start, end] free of sign changes (edges included)."""
    pts = [start, *locations, end]
    return max(b - a for a, b in zip(pts, pts[1:]))


def fit_sign_change_constant(pair: ExponentPair, T=10**5, ctx: PrecisionContext | None = None, margin: float = 2.0) -> dict:
    """Smallest-scale constant c so that windows of length c T^e log^4 T in [T, 2T] contain a change.

    The constant is measured: it is ``margin`` times the largest change-free
    stretch of [T, 2T], divided by T^e log^4 T.
    """
    Tq = as_exact(T)
    tot = integrate_range(pair, Tq, 2 * Tq, ctx)
    gap = max_change_gap(float(Tq), float(2 * Tq), tot.change_locations)
    unit = sign_change_length(pair, Tq, 1.0)
    c = margin * gap / unit
    return {"c": c, "length": c * unit, "max_gap": gap, "sign_changes": tot.sign_changes, "locations": tot.change_locations}


def subwindow_changes(start: float, end: float, length: float, locations, step: float | None = None) -> list:
    """Sign-change counts of the sub-windows [s, s+length] of [start, end], s on a grid."""
    step = step or length / 4
    locs = np.asarray(locations, dtype=np.float64)
    starts = np.arange(start, end - length + step / 2, step)
    lo = np.searchsorted(locs, starts, side="left")
    hi = np.searchsorted(locs, starts + length, side="right")
    return (hi - lo).tolist()
