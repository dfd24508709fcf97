"""Truncated Voronoi expansion of Delta, the G(a,b;x) sum, and two numeric validators.

    Delta*(x, H) = (c1/pi) x^(1/(2(a+b))) sum_{h <= aH} sum_{r <= bH}
                   h^-e_h r^-e_r cos(2 pi c2 x^(1/(a+b)) (h^a r^b)^(1/(a+b)) - pi/4)

The validators compare the truncated Fourier series of psi with its error
bound, and a direct exponential sum over a monomial phase with its
stationary-phase (B-process) transform.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from latmesh import kernels
from latmesh.counting import FLOAT_TOL, _split_point, _root_term, as_exact
from latmesh.errors import TermCapExceeded, ValidationError
from latmesh.precision.ball import PrecisionContext, RealBall
from latmesh.precision.frac import frac_decompose
from latmesh.precision.pair import ExponentPair

DEFAULT_TERM_CAP = 10**7


@dataclass(frozen=True)
class VoronoiParams:
    H: int
    term_cap: int = DEFAULT_TERM_CAP

    def __post_init__(self):
        if int(self.H) != self.H or self.H < 2:
            raise ValidationError("H must be an integer >= 2")
        if self.term_cap < 1:
            raise ValidationError("term_cap must be positive")

    def limits(self, pair: ExponentPair) -> tuple[int, int]:
        return frequency_limits(pair, self.H)


def frequency_limits(pair: ExponentPair, H) -> tuple[int, int]:
    """(floor(aH), floor(bH))."""
    H = Fraction(H)
    a, b = pair.exponent("a"), pair.exponent("b")
    return _floor_times(a, H), _floor_times(b, H)


def _floor_times(c, H: Fraction) -> int:
    v = c * H
    return v.floor() if hasattr(v, "floor") else math.floor(v)


@lru_cache(maxsize=16)
def _frequency_table(pair: ExponentPair, hmax: int, rmax: int):
    """Double-double (h^a r^b)^(1/(a+b)) and weights h^-e_h r^-e_r, (h, r) lexicographic."""
    with mpmath.workprec(128):
        a = pair.ball_of(pair.exponent("a"), 128).mid
        b = pair.ball_of(pair.exponent("b"), 128).mid
        theta = 1 / (a + b)
        log_h = [mpmath.log(h) for h in range(1, hmax + 1)]
        log_r = [mpmath.log(r) for r in range(1, rmax + 1)]
        v_hi = np.empty(hmax * rmax)
        v_lo = np.empty(hmax * rmax)
        k = 0
        for lh in log_h:
            for lr in log_r:
                v = mpmath.exp(theta * (a * lh + b * lr))
                hi = float(v)
                v_hi[k] = hi
                v_lo[k] = float(v - hi)
                k += 1
    f = pair.floats()
    h = np.arange(1, hmax + 1, dtype=np.float64)[:, None]
    r = np.arange(1, rmax + 1, dtype=np.float64)[None, :]
    w = (h ** -f["e_h"] * r ** -f["e_r"]).ravel()
    for arr in (v_hi, v_lo, w):
        arr.setflags(write=False)
    return v_hi, v_lo, w


def _frequency_scale(pair: ExponentPair, x: Fraction) -> tuple[float, float, float]:
    """(hi, lo) of c2 x^(1/(a+b)) and the amplitude (c1/pi) x^(1/(2(a+b)))."""
    prec = 128
    freq = pair.c2(prec) * pair.power(x, "theta", prec)
    amp = pair.c1(prec) / RealBall.pi(prec) * pair.power(x, "theta", prec).sqrt()
    m = freq.mid
    hi = float(m)
    return hi, float(m - hi), float(amp)


def delta_star_many(pair: ExponentPair, xs, H, term_cap: int = DEFAULT_TERM_CAP) -> np.ndarray:
    """Delta*(x, H) for every x in xs, in double precision."""
    hmax, rmax = frequency_limits(pair, H)
    return _delta_star_limits(pair, xs, hmax, rmax, term_cap)


def _delta_star_limits(pair, xs, hmax, rmax, term_cap=DEFAULT_TERM_CAP) -> np.ndarray:
    xq = [as_exact(x) for x in xs]
    out = np.zeros(len(xq))
    if hmax < 1 or rmax < 1 or not xq:
        return out
    if hmax * rmax > term_cap:
        raise TermCapExceeded(f"{hmax}*{rmax} terms exceed cap {term_cap}")
    v_hi, v_lo, w = _frequency_table(pair, hmax, rmax)
    scales = [_frequency_scale(pair, x) for x in xq]
    f_hi = np.array([s[0] for s in scales])
    f_lo = np.array([s[1] for s in scales])
    amp = np.array([s[2] for s in scales])
    kernels.cosine_sums(f_hi, f_lo, v_hi, v_lo, w, out)
    return amp * out


def delta_star(pair: ExponentPair, x, params: VoronoiParams, ctx: PrecisionContext | None = None) -> RealBall:
    """Delta*(x, H) as a ball whose radius is the double-double roundoff budget."""
    xq = as_exact(x)
    if xq < 10:
        raise ValidationError("delta_star needs x >= 10")
    hmax, rmax = params.limits(pair)
    value = float(_delta_star_limits(pair, [xq], hmax, rmax, params.term_cap)[0])
    if hmax < 1 or rmax < 1:
        return RealBall.exact_value(0)
    _, _, w = _frequency_table(pair, hmax, rmax)
    _, _, amp = _frequency_scale(pair, xq)
    # each cosine is good to ~1e-15 absolute; weights and amplitude to a few ulps
    rad = amp * float(np.sum(w)) * 2.0**-44 + abs(value) * 2.0**-48
    bits = (ctx or pair.ctx).bits
    return RealBall(value, rad, bits)


# -- G(a,b;x) ----------------------------------------------------------------------


def g_term(order: str, pair: ExponentPair, x, H, ctx: PrecisionContext | None = None) -> RealBall:
    """sum_{m <= x^(1/(a+b))} min(1, 1/(H ||(x/m^b)^(1/a)||)) for order 'a' ('b' swaps roles)."""
    if order not in ("a", "b"):
        raise ValidationError("order must be 'a' or 'b'")
    if ctx is not None:
        pair = pair.with_ctx(ctx)
    xq = as_exact(x)
    if xq < 1:
        raise ValidationError("x must be >= 1")
    if H < 2:
        raise ValidationError("H must be >= 2")
    Hf = float(H)
    xf = float(xq)
    n0 = _split_point(pair, xq, xf)
    f = pair.floats()
    outer, inner = (f["a"], f["b"]) if order == "a" else (f["b"], f["a"])
    m = np.arange(1, n0 + 1, dtype=np.float64)
    vals = np.exp((math.log(xf) - inner * np.log(m)) / outer)
    dist = np.abs(vals - np.round(vals))
    tol = FLOAT_TOL * np.maximum(vals, 1.0)
    safe = dist > tol
    terms = np.minimum(1.0, 1.0 / (Hf * np.where(safe, dist, 1.0)))
    # relative error of 1/(H d) is about tol/d
    rad = float(np.sum(np.where(safe & (terms < 1.0), terms * tol / np.where(safe, dist, 1.0), 0.0)))
    total = math.fsum(terms[safe].tolist())
    exact_parts = []
    for idx in np.nonzero(~safe)[0]:
        t = _root_term(pair, xq, int(idx) + 1, order)
        d = frac_decompose(t, pair.ctx).dist
        one = RealBall.exact_value(1, pair.ctx.bits)
        if not d.certainly_positive():
            # ||t|| = 0 (exact integer): the capped term is 1
            exact_parts.append(one)
            continue
        inv = one / (d * Fraction(H))
        if one.certainly_le(inv):
            exact_parts.append(one)
        elif inv.certainly_lt(1):
            exact_parts.append(inv)
        else:
            exact_parts.append(inv.union(one))
    result = RealBall(total, rad, pair.ctx.bits)
    for p in exact_parts:
        result = result + p
    return result


# -- psi Fourier truncation -----------------------------------------------------------


def psi_fourier_residual(u, H: int, ctx: PrecisionContext | None = None) -> tuple[RealBall, RealBall]:
    """(|psi(u) + sum_{1<=|h|<=H} e(hu)/(2 pi i h)|, min(1, 2/(H ||u||))).

    The two-sided sum equals sum_{h=1}^H sin(2 pi h u)/(pi h).  u is an exact
    rational, reduced modulo 1 before evaluation.
    """
    if H < 2:
        raise ValidationError("H must be >= 2")
    ctx = ctx or PrecisionContext(bits=96)
    uq = as_exact(u)
    dec = frac_decompose(uq, ctx)
    frac = uq - dec.floor_part
    prec = ctx.bits
    pi = RealBall.pi(prec)
    series = []
    for h in range(1, int(H) + 1):
        arg = (h * frac) % 1
        if arg == 0 or arg == Fraction(1, 2):
            continue
        s = (2 * pi * RealBall.exact_value(arg, prec)).sin()
        series.append(s / (pi * h))
    from latmesh.precision.ball import ball_sum

    total = ball_sum(series, prec) if series else RealBall.exact_value(0, prec)
    residual = abs(dec.psi + total)
    dist = min(frac, 1 - frac)
    if dist == 0:
        bound = RealBall.exact_value(1, prec)
    else:
        bound = RealBall.exact_value(min(Fraction(1), 2 / (Fraction(H) * dist)), prec)
    return residual, bound


# -- B-process validator ---------------------------------------------------------------


@dataclass(frozen=True)
class ComplexBall:
    re: RealBall
    im: RealBall

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def abs_upper(self) -> float:
        return abs(complex(self)) + self.re.rad_float() + self.im.rad_float()


def _cball(z: complex, err: float) -> ComplexBall:
    return ComplexBall(RealBall(z.real, err, 64), RealBall(z.imag, err, 64))


@dataclass(frozen=True)
class PhaseSpec:
    """f(m) = -A m^-beta summed over m1 < m <= m2."""

    A: float
    beta_exp: float
    m1: float
    m2: float

    def __post_init__(self):
        for name in ("A", "beta_exp", "m1", "m2"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.A > 0 and self.beta_exp > 0):
            raise ValidationError("A and beta_exp must be positive")
        if not 1 <= self.m1 < self.m2:
            raise ValidationError("need 1 <= m1 < m2")

    def f(self, m):
        return -self.A * np.power(m, -self.beta_exp)

    def f1(self, m):
        return self.A * self.beta_exp * np.power(m, -self.beta_exp - 1)

    def fk(self, k: int, m: float) -> float:
        """k-th derivative of f at m."""
        c = -self.A
        e = -self.beta_exp
        for _ in range(k):
            c *= e
            e -= 1
        return c * m**e

    @property
    def u_min(self) -> float:
        return float(self.f1(self.m2))

    @property
    def u_max(self) -> float:
        return float(self.f1(self.m1))

    @property
    def R_scale(self) -> float:
        """1/|f''| at the geometric midpoint of the range."""
        return 1.0 / abs(self.fk(2, math.sqrt(self.m1 * self.m2)))

    @property
    def U_scale(self) -> float:
        """Scale U with |f^(k)/f''| ~ U^(2-k); for a monomial U ~ m1."""
        return float(self.m1)

    def diagnostics(self) -> dict:
        mid = math.sqrt(self.m1 * self.m2)
        f2 = self.fk(2, mid)
        beta = {k: self.fk(k, mid) / f2 for k in (3, 4, 5)}
        return {
            "R": self.R_scale,
            "U": self.U_scale,
            "beta3": beta[3],
            "beta4": beta[4],
            "beta5": beta[5],
            "nondegeneracy": abs(3 * beta[4] - 5 * beta[3] ** 2),
            "f2_ratio": abs(self.fk(2, self.m1) / self.fk(2, self.m2)),
        }

    def error_scale(self) -> float:
        """log(2 + (m2-m1)/R) + (m2-m1+R)/U."""
        length = self.m2 - self.m1
        R, U = self.R_scale, self.U_scale
        return math.log(2 + length / R) + (length + R) / U

    def _bracket(self, t: float) -> float:
        dist = abs(t - round(t))
        return dist if dist > 0 else self.u_max - self.u_min

    def boundary_term(self) -> float:
        """min(sqrt(R), max(1/<u_min>, 1/<u_max>))."""
        return min(math.sqrt(self.R_scale), max(1 / self._bracket(self.u_min), 1 / self._bracket(self.u_max)))


@dataclass(frozen=True)
class StationaryPoint:
    u: int
    n_u: float
    b_u: Fraction


@dataclass(frozen=True)
class BTransformResult:
    direct: ComplexBall
    transformed: ComplexBall
    residual: RealBall
    stationary_points: list = field(default_factory=list)
    no_stationary_points: bool = False
    error_scale: float = 0.0
    boundary_term: float = 0.0
    diagnostics: dict = field(default_factory=dict)


BPROC_TERM_CAP = 10**7


def _e_sum(phases: np.ndarray) -> complex:
    """sum e(phase) with phases reduced mod 1 first; fsum on both parts."""
    frac = phases - np.floor(phases)
    ang = 2 * math.pi * frac
    return complex(math.fsum(np.cos(ang).tolist()), math.fsum(np.sin(ang).tolist()))


def bprocess_compare(phase: PhaseSpec, ctx: PrecisionContext | None = None) -> BTransformResult:
    """Direct sum of e(f(m)) against its stationary-phase transform."""
    lo, hi = math.floor(phase.m1), math.floor(phase.m2)
    if hi - lo > BPROC_TERM_CAP:
        raise TermCapExceeded(f"{hi - lo} terms exceed cap {BPROC_TERM_CAP}")
    m = np.arange(lo + 1, hi + 1, dtype=np.float64)
    direct = _e_sum(phase.f(m)) if m.size else 0j
    # each phase carries ~|f| 2^-52 absolute error
    direct_err = float(m.size) * (phase.A * 2.0**-50 + 2.0**-50)
    umin, umax = phase.u_min, phase.u_max
    points = []
    trans = 0j
    for u in range(math.ceil(umin), math.floor(umax) + 1):
        if u <= 0:
            continue
        n_u = (phase.A * phase.beta_exp / u) ** (1.0 / (phase.beta_exp + 1))
        endpoint = u == umin or u == umax
        b_u = Fraction(1, 2) if endpoint else Fraction(1)
        f2 = abs(phase.fk(2, n_u))
        # 1/sqrt(f'') = 1/(i sqrt|f''|) = e(-1/4)/sqrt|f''|
        ph = float(phase.f(n_u)) - u * n_u - 0.125
        trans += float(b_u) / math.sqrt(f2) * cmath.exp(2j * math.pi * (ph - math.floor(ph)))
        points.append(StationaryPoint(u, n_u, b_u))
    trans_err = len(points) * 2.0**-40
    residual = abs(direct - trans)
    return BTransformResult(
        direct=_cball(direct, direct_err),
        transformed=_cball(trans, trans_err),
        residual=RealBall(residual, 2 * (direct_err + trans_err), 64),
        stationary_points=points,
        no_stationary_points=not points,
        error_scale=phase.error_scale(),
        boundary_term=phase.boundary_term(),
        diagnostics=phase.diagnostics(),
    )


def random_phases(seed: int, count: int) -> list[PhaseSpec]:
    """Counter-based random monomial phases (Philox keyed on seed).

    A = 10^U(3,6), beta = U(0.5,3), m1 = 10^U(2,4), m2 = m1 + N with N
    uniform in [100, m1], so each range holds 10^2 to 10^4 terms and stays
    within a factor two of m1.
    """
    out = []
    for i in range(count):
        rng = np.random.Generator(np.random.Philox(key=seed, counter=i))
        A = 10 ** rng.uniform(3, 6)
        beta = rng.uniform(0.5, 3)
        m1 = 10 ** rng.uniform(2, 4)
        n = int(rng.uniform(100, max(100.0, m1)))
        out.append(PhaseSpec(A, beta, m1, m1 + n))
    return out
