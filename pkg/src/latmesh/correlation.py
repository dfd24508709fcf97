"""Off-diagonal statistics of the frequencies v = (h^a r^b)^(1/(a+b)).

eta is the gap between two frequencies; near_pair_count counts quadruples in
dyadic boxes whose values h^mu r^nu lie within delta; sigma2_eval sums the
damped weights of near (but unequal) frequency pairs; min_gap records the
smallest nonzero separation of h^alpha r^beta; roth_quality tracks n ||n alpha||.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from latmesh.counting import as_exact
from latmesh.errors import AmbiguousTie, PrecisionExhausted, SizeGuard, ValidationError
from latmesh.precision.ball import PrecisionContext, RealBall
from latmesh.precision.contfrac import convergent_denominators
from latmesh.precision.exact import DecimalReal, QuadraticSurd, parse_exact, to_ball
from latmesh.precision.frac import frac_decompose
from latmesh.precision.introot import integer_kth_root
from latmesh.precision.pair import ExponentPair, exact_pow_ball

NEAR_PAIR_VOLUME_CAP = 10**8
SIGMA2_CAP = 10**5
MIN_GAP_CAP = 10**7
ROTH_CAP = 10**7
# float decisions closer than this (relative) to a boundary are redone in balls
_TOL = 2.0**-40


def _power_ball(n: int, e, prec: int) -> RealBall:
    return exact_pow_ball(n, e, prec)


def _monomial_exact(h: int, r: int, mu, nu):
    """h^mu r^nu as a Fraction when both exponents are rational and the value is rational."""
    if not all(isinstance(e, (int, Fraction)) for e in (mu, nu)):
        return None
    mu, nu = Fraction(mu), Fraction(nu)
    d = math.lcm(mu.denominator, nu.denominator)
    inner = Fraction(h) ** int(mu * d) * Fraction(r) ** int(nu * d)
    num, den = integer_kth_root(inner.numerator, d), integer_kth_root(inner.denominator, d)
    if num**d != inner.numerator or den**d != inner.denominator:
        return None
    return Fraction(num, den)


def _same_monomial(h1, r1, h2, r2, mu, nu) -> bool | None:
    """Exact test of h1^mu r1^nu == h2^mu r2^nu for rational exponents (None if undecidable)."""
    if (h1, r1) == (h2, r2):
        return True
    if not all(isinstance(e, (int, Fraction)) for e in (mu, nu)):
        return None
    mu, nu = Fraction(mu), Fraction(nu)
    d = math.lcm(mu.denominator, nu.denominator)
    pm, pn = int(mu * d), int(nu * d)
    # compare the d-th powers of both sides
    return Fraction(h1) ** pm * Fraction(r1) ** pn == Fraction(h2) ** pm * Fraction(r2) ** pn


def _ratio_irrational(alpha, beta) -> bool:
    """True when alpha/beta is provably irrational, so distinct (h, r) give distinct values."""
    if isinstance(alpha, DecimalReal) or isinstance(beta, DecimalReal):
        return False
    q = alpha / beta if isinstance(alpha, QuadraticSurd) or isinstance(beta, QuadraticSurd) else None
    return isinstance(q, QuadraticSurd) and not q.is_rational()


# -- eta ------------------------------------------------------------------------------


def eta_gap(pair: ExponentPair, h1: int, r1: int, h2: int, r2: int, ctx: PrecisionContext | None = None) -> RealBall:
    """(h1^a r1^b)^(1/(a+b)) - (h2^a r2^b)^(1/(a+b)); exact zero for coincidences."""
    if min(h1, r1, h2, r2) < 1:
        raise ValidationError("coordinates must be >= 1")
    ctx = ctx or pair.ctx
    if pair.is_integer:
        if h1**pair.a * r1**pair.b == h2**pair.a * r2**pair.b:
            return RealBall.exact_value(0, ctx.bits)
    elif (h1, r1) == (h2, r2):
        return RealBall.exact_value(0, ctx.bits)
    for prec in ctx.ladder():
        theta = pair.theta(prec)
        d = pair.lattice_value(h1, r1, prec) ** theta - pair.lattice_value(h2, r2, prec) ** theta
        if d.certainly_nonzero():
            return d.with_prec(ctx.bits)
    raise PrecisionExhausted(f"eta({h1},{r1},{h2},{r2}) not separated from 0 at max precision")


# -- near pairs -------------------------------------------------------------------------


@dataclass(frozen=True)
class NearPairQuery:
    mu: object
    nu: object
    H1: float
    H2: float
    R1: float
    R2: float
    delta: object

    def __post_init__(self):
        if float(self.mu) == 0 or float(self.nu) == 0:
            raise ValidationError("mu and nu must be nonzero")
        if min(float(self.H1), float(self.H2), float(self.R1), float(self.R2)) < 0.5:
            raise ValidationError("box anchors must be >= 1/2")
        if float(self.delta) < 0:
            raise ValidationError("delta must be >= 0")

    @staticmethod
    def dyadic(anchor) -> np.ndarray:
        """Integers n with anchor < n <= 2 anchor."""
        A = Fraction(anchor)
        lo = math.floor(A) + 1
        hi = math.floor(2 * A)
        return np.arange(lo, hi + 1, dtype=np.int64)

    def boxes(self):
        return tuple(self.dyadic(v) for v in (self.H1, self.R1, self.H2, self.R2))

    def volume(self) -> int:
        return math.prod(len(b) for b in self.boxes())

    def shape(self) -> float:
        """delta (H1H2)^(1-mu/2) (R1R2)^(1-nu/2) + (H1H2R1R2)^(1/2) log^2(2 H1H2R1R2)."""
        mu, nu = float(self.mu), float(self.nu)
        H1, H2, R1, R2 = (float(v) for v in (self.H1, self.H2, self.R1, self.R2))
        P = H1 * H2 * R1 * R2
        return float(self.delta) * (H1 * H2) ** (1 - mu / 2) * (R1 * R2) ** (1 - nu / 2) + math.sqrt(P) * math.log(2 * P) ** 2


def _values(hs: np.ndarray, rs: np.ndarray, mu: float, nu: float):
    H, R = np.meshgrid(hs, rs, indexing="ij")
    H, R = H.ravel(), R.ravel()
    v = np.exp(mu * np.log(H.astype(np.float64)) + nu * np.log(R.astype(np.float64)))
    return v, H, R


def _within(h1, r1, h2, r2, mu, nu, delta, ctx: PrecisionContext) -> bool:
    """Certified |h1^mu r1^nu - h2^mu r2^nu| <= delta."""
    same = _same_monomial(h1, r1, h2, r2, mu, nu)
    if same:
        return True
    e1, e2 = _monomial_exact(h1, r1, mu, nu), _monomial_exact(h2, r2, mu, nu)
    dq = as_exact(delta) if not isinstance(delta, (QuadraticSurd,)) else None
    if e1 is not None and e2 is not None and dq is not None:
        return abs(e1 - e2) <= dq
    for prec in ctx.ladder():
        d = abs(_power_ball(h1, mu, prec) * _power_ball(r1, nu, prec) - _power_ball(h2, mu, prec) * _power_ball(r2, nu, prec))
        db = to_ball(delta if not isinstance(delta, float) else Fraction(delta), prec)
        if d.certainly_le(db):
            return True
        if db.certainly_lt(d):
            return False
    raise AmbiguousTie(f"|difference| vs delta undecided for ({h1},{r1},{h2},{r2})")


def near_pair_count(query: NearPairQuery, ctx: PrecisionContext | None = None) -> int:
    """#{(h1,h2,r1,r2) in the dyadic boxes : |h1^mu r1^nu - h2^mu r2^nu| <= delta} by sort and sweep."""
    ctx = ctx or PrecisionContext()
    if query.volume() > NEAR_PAIR_VOLUME_CAP:
        raise SizeGuard(f"box volume {query.volume()} exceeds {NEAR_PAIR_VOLUME_CAP}")
    mu, nu, delta = _exact_or_float(query.mu), _exact_or_float(query.nu), query.delta
    h1s, r1s, h2s, r2s = query.boxes()
    v1, H1, R1 = _values(h1s, r1s, float(mu), float(nu))
    v2, H2, R2 = _values(h2s, r2s, float(mu), float(nu))
    if v1.size == 0 or v2.size == 0:
        return 0
    order = np.argsort(v2, kind="stable")
    v2, H2, R2 = v2[order], H2[order], R2[order]
    df = float(delta)
    slack = _TOL * max(float(v1.max()), float(v2.max()), 1.0)
    lo_in = np.searchsorted(v2, v1 - df + slack, side="left")
    hi_in = np.searchsorted(v2, v1 + df - slack, side="right")
    total = int(np.maximum(hi_in - lo_in, 0).sum())
    # values within the slack of either band edge are decided exactly
    lo_out = np.searchsorted(v2, v1 - df - slack, side="left")
    hi_out = np.searchsorted(v2, v1 + df + slack, side="right")
    for i in range(len(v1)):
        a, b = int(lo_out[i]), int(hi_out[i])
        c, d = int(lo_in[i]), int(hi_in[i])
        if d <= c:
            border = range(a, b)
        else:
            border = list(range(a, c)) + list(range(d, b))
        for j in border:
            if _within(int(H1[i]), int(R1[i]), int(H2[j]), int(R2[j]), mu, nu, delta, ctx):
                total += 1
    return total


def near_pair_count_brute(query: NearPairQuery, ctx: PrecisionContext | None = None) -> int:
    """Quadratic scan over all value pairs (oracle for near_pair_count)."""
    ctx = ctx or PrecisionContext()
    mu, nu, delta = _exact_or_float(query.mu), _exact_or_float(query.nu), query.delta
    h1s, r1s, h2s, r2s = query.boxes()
    v1, H1, R1 = _values(h1s, r1s, float(mu), float(nu))
    v2, H2, R2 = _values(h2s, r2s, float(mu), float(nu))
    df = float(delta)
    total = 0
    for i in range(len(v1)):
        diff = np.abs(v2 - v1[i])
        slack = _TOL * max(v1[i], 1.0) * 4
        total += int(np.count_nonzero(diff < df - slack))
        for j in np.nonzero(np.abs(diff - df) <= slack)[0]:
            total += _within(int(H1[i]), int(R1[i]), int(H2[j]), int(R2[j]), mu, nu, delta, ctx)
    return total


def _exact_or_float(e):
    if isinstance(e, (int, Fraction, QuadraticSurd, DecimalReal)):
        return e
    if isinstance(e, str):
        return parse_exact(e)
    return Fraction(e)


def fit_near_pair_constant(queries, counts) -> dict:
    """Single constant c for count <= c * shape: geometric-mean fit plus coverage."""
    ratios = np.array([c / q.shape() for q, c in zip(queries, counts)])
    pos = ratios[ratios > 0]
    c = float(np.exp(np.mean(np.log(pos)))) if pos.size else 0.0
    return {"c": c, "max_ratio": float(ratios.max()), "min_ratio": float(pos.min()) if pos.size else 0.0, "ratios": ratios.tolist()}


# -- Sigma_2 -------------------------------------------------------------------------------

# |v1 - v2| < (1/10) sqrt(v1 v2) forces v_max / v_min < RHO_MAX
_RHO_MAX = ((0.1 + math.sqrt(0.01 + 4)) / 2) ** 2


def _sigma2_tables(pair: ExponentPair, H: int, R: int, swapped: bool):
    f = pair.floats()
    a, b = (f["b"], f["a"]) if swapped else (f["a"], f["b"])
    s = a + b
    e_h, e_r = (a + 2 * b) / (2 * s), (2 * a + b) / (2 * s)
    hs, rs = np.arange(1, H + 1), np.arange(1, R + 1)
    Hh, Rr = np.meshgrid(hs, rs, indexing="ij")
    Hh, Rr = Hh.ravel().astype(np.int64), Rr.ravel().astype(np.int64)
    lh, lr = np.log(Hh.astype(np.float64)), np.log(Rr.astype(np.float64))
    v = np.exp((a * lh + b * lr) / s)
    w = np.exp(-e_h * lh - e_r * lr)
    order = np.argsort(v, kind="stable")
    return v[order], w[order], Hh[order], Rr[order]


def _is_coincidence(pair: ExponentPair, swapped: bool, h1, r1, h2, r2) -> bool:
    if (h1, r1) == (h2, r2):
        return True
    if not pair.is_integer:
        return False
    a, b = (pair.b, pair.a) if swapped else (pair.a, pair.b)
    return h1**a * r1**b == h2**a * r2**b


def sigma2_eval(pair: ExponentPair, T, H: int, R: int, ctx: PrecisionContext | None = None, swapped: bool = False) -> RealBall:
    """Weighted near-coincidence sum with min(T^(1/(a+b)), 1/|eta|) damping.

    Ordered pairs of (h, r) with h <= H, r <= R and 0 < |eta| < (1/10)
    sqrt(v1 v2).  ``swapped`` evaluates the same sum for the exponents (b, a).
    """
    if H < 1 or R < 1:
        raise ValidationError("H and R must be >= 1")
    if H * R > SIGMA2_CAP:
        raise SizeGuard(f"H*R = {H * R} exceeds {SIGMA2_CAP}")
    Tq = as_exact(T)
    if Tq < 10:
        raise ValidationError("T must be >= 10")
    v, w, Hh, Rr = _sigma2_tables(pair, H, R, swapped)
    cap = float(Tq) ** pair.floats()["theta"]
    n = len(v)
    limit = np.searchsorted(v, v * _RHO_MAX * (1 + 1e-12), side="right")
    terms = []
    for off in range(1, int((limit - np.arange(n)).max(initial=1))):
        i = np.arange(n - off)
        j = i + off
        ok = j < limit[i]
        if not ok.any():
            break
        i, j = i[ok], j[ok]
        eta = v[j] - v[i]
        band = 0.1 * np.sqrt(v[i] * v[j])
        near_edge = np.abs(eta - band) <= 1e-9 * band
        if near_edge.any():
            raise AmbiguousTie("a pair sits on the |eta| = sqrt(v1 v2)/10 boundary")
        inside = eta < band
        tiny = inside & (eta <= 1e-9 * v[j])
        for k in np.nonzero(tiny)[0]:
            if _is_coincidence(pair, swapped, Hh[i[k]], Rr[i[k]], Hh[j[k]], Rr[j[k]]):
                inside[k] = False
        sel = inside
        contrib = w[i[sel]] * w[j[sel]] * np.minimum(cap, 1.0 / np.where(eta[sel] > 0, eta[sel], np.inf))
        # eta computed as 0 in floats for a non-coincidence: cap applies
        contrib = np.where(eta[sel] > 0, contrib, w[i[sel]] * w[j[sel]] * cap)
        terms.append(contrib)
    flat = np.concatenate(terms) if terms else np.zeros(0)
    # each unordered pair counted once above; ordered pairs double it
    value = 2 * math.fsum(flat.tolist())
    rad = 2 * float(np.sum(flat)) * (1e-9 + 1e-13 * n)
    return RealBall(value, rad, (ctx or pair.ctx).bits)


def sigma2_brute(pair: ExponentPair, T, H: int, R: int, swapped: bool = False) -> float:
    """O((HR)^2) double loop oracle for sigma2_eval."""
    v, w, Hh, Rr = _sigma2_tables(pair, H, R, swapped)
    cap = float(as_exact(T)) ** pair.floats()["theta"]
    total = []
    for i in range(len(v)):
        for j in range(len(v)):
            if _is_coincidence(pair, swapped, Hh[i], Rr[i], Hh[j], Rr[j]):
                continue
            eta = abs(v[i] - v[j])
            if eta < 0.1 * math.sqrt(v[i] * v[j]):
                total.append(w[i] * w[j] * min(cap, 1 / eta))
    return math.fsum(total)


# -- minimum gaps --------------------------------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    M: int
    min_gap: RealBall
    witness: tuple
    fitted_C: float
    transform: str = "raw"


def _exponent_pair(spec) -> tuple:
    if isinstance(spec, ExponentPair):
        return spec.exponent("a"), spec.exponent("b"), spec.is_integer
    alpha, beta = spec
    alpha, beta = _exact_or_float(alpha), _exact_or_float(beta)
    integral = all(isinstance(e, int) or (isinstance(e, Fraction) and e.denominator == 1) for e in (alpha, beta))
    return alpha, beta, integral


def _gap_value_ball(h, r, alpha, beta, transform, prec):
    v = _power_ball(h, alpha, prec) * _power_ball(r, beta, prec)
    if transform == "eta":
        s = alpha + beta
        if isinstance(s, QuadraticSurd) and s.is_rational():
            s = s.p
        if isinstance(s, (int, Fraction)):
            return v.rational_pow(1 / Fraction(s))
        return (v.log() / to_ball(s, prec)).exp()
    return v


def _values_equal(h1, r1, h2, r2, alpha, beta, integral: bool, irrational_ratio: bool) -> bool | None:
    if (h1, r1) == (h2, r2):
        return True
    if integral:
        return h1 ** int(alpha) * r1 ** int(beta) == h2 ** int(alpha) * r2 ** int(beta)
    if irrational_ratio:
        return False
    return _same_monomial(h1, r1, h2, r2, alpha, beta)


def min_gap(spec, M: int, ctx: PrecisionContext | None = None, transform: str = "raw") -> GapReport:
    """Smallest nonzero |h1^alpha r1^beta - h2^alpha r2^beta| over coordinates <= M.

    ``spec`` is an ExponentPair or a tuple (alpha, beta).  transform='eta'
    compares the values raised to 1/(alpha+beta) instead.
    """
    ctx = ctx or PrecisionContext()
    if M < 1:
        raise ValidationError("M must be >= 1")
    if M * M > MIN_GAP_CAP:
        raise SizeGuard(f"M^2 = {M * M} exceeds {MIN_GAP_CAP}")
    alpha, beta, integral = _exponent_pair(spec)
    irrational_ratio = _ratio_irrational(alpha, beta)
    af, bf = float(alpha), float(beta)
    hs = np.arange(1, M + 1)
    Hh, Rr = np.meshgrid(hs, hs, indexing="ij")
    Hh, Rr = Hh.ravel(), Rr.ravel()
    logv = af * np.log(Hh.astype(np.float64)) + bf * np.log(Rr.astype(np.float64))
    if transform == "eta":
        logv = logv / (af + bf)
    v = np.exp(logv)
    order = np.argsort(v, kind="stable")
    v, Hh, Rr = v[order], Hh[order], Rr[order]
    gaps = np.diff(v)
    tol = 1e-9 * v[1:]
    # clusters of values that floats cannot separate are resolved in balls
    candidates = []
    loose = gaps > tol
    if loose.any():
        k = int(np.argmin(np.where(loose, gaps, np.inf)))
        candidates.append((float(gaps[k]), k, k + 1))
    i = 0
    n = len(v)
    while i < n - 1:
        if gaps[i] > tol[i]:
            i += 1
            continue
        j = i
        while j < n - 1 and gaps[j] <= tol[j]:
            j += 1
        members = list(range(i, j + 1))
        cand = _cluster_min(members, Hh, Rr, alpha, beta, transform, integral, irrational_ratio, ctx)
        if cand is not None:
            candidates.append(cand)
        i = j
    if not candidates:
        raise ValidationError("no nonzero gaps for this M")
    best = min(candidates, key=lambda c: c[0])
    _, p, q = best
    h1, r1, h2, r2 = int(Hh[q]), int(Rr[q]), int(Hh[p]), int(Rr[p])
    prec = max(ctx.bits, 512)
    gap = _gap_value_ball(h1, r1, alpha, beta, transform, prec) - _gap_value_ball(h2, r2, alpha, beta, transform, prec)
    gap = abs(gap)
    if not gap.certainly_positive():
        raise PrecisionExhausted("minimal gap not certified nonzero")
    lm = math.log(M)
    denom = lm * lm * math.log(lm) if M > 2 else float("nan")
    fitted = -math.log(float(gap)) / denom if M > 2 else float("nan")
    return GapReport(M, gap, (h1, r1, h2, r2), fitted, transform)


def _cluster_min(members, Hh, Rr, alpha, beta, transform, integral, irrational_ratio, ctx):
    """Exact ordering and smallest nonzero gap inside a cluster of float-equal values."""
    for prec in ctx.ladder():
        balls = [(_gap_value_ball(int(Hh[m]), int(Rr[m]), alpha, beta, transform, prec), m) for m in members]
        best = None
        ok = True
        for x in range(len(balls)):
            for y in range(x + 1, len(balls)):
                (bx, mx), (by, my) = balls[x], balls[y]
                eq = _values_equal(int(Hh[mx]), int(Rr[mx]), int(Hh[my]), int(Rr[my]), alpha, beta, integral, irrational_ratio)
                if eq:
                    continue
                d = abs(bx - by)
                if not d.certainly_positive():
                    ok = False
                    break
                if best is None or float(d) < best[0]:
                    lo_m, hi_m = (mx, my) if bx.certainly_lt(by) else (my, mx)
                    best = (float(d), lo_m, hi_m)
            if not ok:
                break
        if ok:
            return best
    raise PrecisionExhausted("adjacent values could not be separated at max precision")


# -- Roth probe ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RothReport:
    records: list
    probe: tuple
    epsilon: float = 0.1


def _n_dist(alpha, n: int, prec: int) -> RealBall:
    """n ||n alpha|| as a ball, exact for rational and quadratic alpha."""
    if isinstance(alpha, (int, Fraction, QuadraticSurd)):
        t = alpha * n
        lo = t - math.floor(t) if not isinstance(t, QuadraticSurd) else t - t.floor()
        d = min(lo, 1 - lo)
        return to_ball(d, prec) * n
    return frac_decompose(to_ball(alpha, prec) * n, PrecisionContext(prec)).dist * n


def roth_quality(alpha, H: int, ctx: PrecisionContext | None = None, epsilon: float = 0.1) -> RothReport:
    """Running minima of n ||n alpha|| for n <= H and min of n^(1+eps) ||n alpha||.

    A new running minimum of n ||n alpha|| is a best approximation, hence a
    convergent denominator (or n = 1), so only those n and a short initial
    stretch are evaluated.
    """
    ctx = ctx or PrecisionContext()
    if H < 1:
        raise ValidationError("H must be >= 1")
    if H > ROTH_CAP:
        raise SizeGuard(f"H = {H} exceeds {ROTH_CAP}")
    if isinstance(alpha, str):
        alpha = parse_exact(alpha)
    dens = set(convergent_denominators(alpha, H))
    candidates = sorted({n for n in range(1, min(H, 64) + 1)} | {q for q in dens if q <= H})
    records = []
    best = None
    probe = None
    for n in candidates:
        val = _n_dist(alpha, n, ctx.bits)
        if best is None or val.certainly_lt(best):
            records.append((n, val))
            best = val
        pv = float(val) * n**epsilon
        if probe is None or pv < probe[1]:
            probe = (n, pv)
    return RothReport(records, probe, epsilon)


def roth_scan(alpha, H: int) -> list:
    """Direct double-precision scan of running minima of n ||n alpha|| (oracle)."""
    af = float(alpha)
    n = np.arange(1, H + 1, dtype=np.float64)
    t = n * af
    val = n * np.abs(t - np.round(t))
    running = np.minimum.accumulate(val)
    is_rec = np.concatenate([[True], running[1:] < running[:-1]])
    return [(int(k), float(val[k - 1])) for k in np.nonzero(is_rec)[0] + 1]


_QUERY_EXPONENTS = (
    (Fraction(1, 3), Fraction(2, 3)),
    (Fraction(1, 2), Fraction(1)),
    (Fraction(1), Fraction(2)),
    (Fraction(2, 5), Fraction(3, 5)),
)


def random_queries(seed: int, count: int) -> list[NearPairQuery]:
    """Small randomized boxes (at most 10^3 values per side) keyed on seed."""
    out = []
    for i in range(count):
        rng = np.random.Generator(np.random.Philox(key=seed, counter=i))
        mu, nu = _QUERY_EXPONENTS[int(rng.integers(len(_QUERY_EXPONENTS)))]
        H1, H2, R1, R2 = (Fraction(int(v), 2) for v in rng.integers(1, 33, size=4))
        delta = Fraction(int(rng.integers(0, 201)), 100)
        out.append(NearPairQuery(mu, nu, H1, H2, R1, R2, delta))
    return out


def near_pair_grid(mu=Fraction(1, 3), nu=Fraction(2, 3)) -> list[NearPairQuery]:
    """20 queries: equal anchors 2..32 crossed with delta in {1e-3, 1e-2, 1e-1, 1}."""
    deltas = (Fraction(1, 1000), Fraction(1, 100), Fraction(1, 10), Fraction(1))
    return [NearPairQuery(mu, nu, A, A, A, A, d) for A in (2, 4, 8, 16, 32) for d in deltas]
