"""Coincidence quadruples h1^a r1^b = h2^a r2^b and the constant G_{a,b}.

    G_{a,b} = sum over coincidences of (h1 h2)^-e_h (r1 r2)^-e_r.

For coprime integers a, b every coincidence has the unique form

    h1 = g t^b, h2 = g s^b, r1 = m s^a, r2 = m t^a,  gcd(s, t) = 1,

(write h1/h2 = (t/s)^b in lowest terms).  The weight then factors as
g^-sigma1 m^-sigma2 (st)^-kappa with sigma1 = 2 e_h, sigma2 = 2 e_r and
kappa = (a^2+ab+b^2)/(a+b), which gives

    G_{a,b} = zeta(sigma1) zeta(sigma2) zeta(kappa)^2 / zeta(2 kappa).

That identity is validated against direct partial sums before it is used.
For an irrational ratio only the diagonal h1 = h2, r1 = r2 contributes and
G = zeta(sigma1) zeta(sigma2).
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from latmesh.errors import BoxTooLarge, GabNotValidated, ValidationError
from latmesh.precision.ball import PrecisionContext, RealBall
from latmesh.precision.introot import integer_kth_root
from latmesh.precision.pair import ExponentPair
from latmesh.precision.zeta import zeta_real

BRUTE_BOX_CAP = 500
VALIDATION_BOXES = (100, 1000, 10000)
REFERENCE_BOX = 10**6


@dataclass(frozen=True)
class CoincidenceQuad:
    h1: int
    r1: int
    h2: int
    r2: int
    param: tuple | None = None
    pair: ExponentPair | None = field(default=None, compare=False, repr=False)

    @property
    def key(self) -> tuple:
        return (self.h1, self.r1, self.h2, self.r2)

    @cached_property
    def weight(self) -> RealBall:
        p = self.pair
        return 1 / (p.power(self.h1 * self.h2, "e_h", 64) * p.power(self.r1 * self.r2, "e_r", 64))

    def is_diagonal(self) -> bool:
        return self.h1 == self.h2 and self.r1 == self.r2


def exponents(pair: ExponentPair) -> tuple:
    """(sigma1, sigma2, kappa) as exact numbers."""
    a, b = (Fraction(x) if isinstance(x, int) else x for x in (pair.exponent("a"), pair.exponent("b")))
    s = a + b
    return (a + 2 * b) / s, (2 * a + b) / s, (a * a + a * b + b * b) / s


def _diagonal(pair: ExponentPair, box: int) -> list[CoincidenceQuad]:
    return [CoincidenceQuad(h, r, h, r, pair=pair) for h in range(1, box + 1) for r in range(1, box + 1)]


def quads_enumerate(pair: ExponentPair, box: int, mode: str = "parametrized") -> list[CoincidenceQuad]:
    """All (h1, r1, h2, r2) with coordinates <= box and h1^a r1^b = h2^a r2^b, sorted."""
    if box < 1:
        raise ValidationError("box must be >= 1")
    if mode not in ("brute", "parametrized"):
        raise ValidationError("mode must be 'brute' or 'parametrized'")
    if not pair.is_integer:
        # distinct (h, r) give distinct values when a/b is irrational
        return _diagonal(pair, box)
    if mode == "brute":
        if box > BRUTE_BOX_CAP:
            raise BoxTooLarge(f"brute enumeration limited to box <= {BRUTE_BOX_CAP}")
        return _brute(pair, box)
    return _parametrized(pair, box)


def _brute(pair: ExponentPair, box: int) -> list[CoincidenceQuad]:
    """Group every (h, r) in the box by its exact value; each group yields all its ordered pairs."""
    groups: dict[int, list] = defaultdict(list)
    a, b = pair.a, pair.b
    for h in range(1, box + 1):
        ha = h**a
        for r in range(1, box + 1):
            groups[ha * r**b].append((h, r))
    out = []
    for members in groups.values():
        for h1, r1 in members:
            for h2, r2 in members:
                out.append(CoincidenceQuad(h1, r1, h2, r2, pair=pair))
    out.sort(key=lambda q: q.key)
    return out


def _parametrized(pair: ExponentPair, box: int) -> list[CoincidenceQuad]:
    a, b = pair.a, pair.b
    out = []
    top = integer_kth_root(box, max(a, b))
    for s in range(1, top + 1):
        for t in range(1, top + 1):
            if math.gcd(s, t) != 1:
                continue
            tb, sb, sa, ta = t**b, s**b, s**a, t**a
            gmax = box // max(tb, sb)
            mmax = box // max(sa, ta)
            for g in range(1, gmax + 1):
                for m in range(1, mmax + 1):
                    out.append(CoincidenceQuad(g * tb, m * sa, g * sb, m * ta, param=(g, m, s, t), pair=pair))
    out.sort(key=lambda q: q.key)
    return out


# -- partial sums ---------------------------------------------------------------------


def _prefix_powers(sigma: float, n: int) -> np.ndarray:
    """P[k] = sum_{j <= k} j^-sigma for k = 0..n (P[0] = 0)."""
    p = np.zeros(n + 1)
    if n:
        p[1:] = np.cumsum(np.arange(1, n + 1, dtype=np.float64) ** -sigma)
    return p


def _coprime_grid(top: int):
    s = np.arange(1, top + 1)
    S, T = np.meshgrid(s, s, indexing="ij")
    keep = np.gcd(S, T) == 1
    return S[keep].astype(np.int64), T[keep].astype(np.int64)


def _factorized_sum(pair: ExponentPair, box: int, h_above: int = 0, role: str = "h") -> tuple[float, float]:
    """Sum of weights over coincidences with coordinates <= box and, when
    h_above > 0, the first coordinate of the chosen role (h1 or r1) > h_above.

    Returns (value, absolute roundoff bound).
    """
    a, b = pair.a, pair.b
    sig1, sig2, kappa = (float(v) for v in exponents(pair))
    top = integer_kth_root(box, max(a, b))
    S, T = _coprime_grid(top)
    mx = np.maximum(S, T)
    gmax = box // mx**b
    mmax = box // mx**a
    live = (gmax > 0) & (mmax > 0)
    S, T, gmax, mmax = S[live], T[live], gmax[live], mmax[live]
    P1 = _prefix_powers(sig1, int(gmax.max()) if gmax.size else 0)
    P2 = _prefix_powers(sig2, int(mmax.max()) if mmax.size else 0)
    if role == "h":
        # h1 = g t^b > H  <=>  g > H // t^b
        gmin = np.minimum(h_above // T**b, gmax) if h_above else np.zeros_like(gmax)
        gpart = P1[gmax] - P1[gmin]
        mpart = P2[mmax]
    else:
        # r1 = m s^a > H  <=>  m > H // s^a
        mmin = np.minimum(h_above // S**a, mmax) if h_above else np.zeros_like(mmax)
        gpart = P1[gmax]
        mpart = P2[mmax] - P2[mmin]
    terms = (S * T).astype(np.float64) ** -kappa * gpart * mpart
    value = math.fsum(terms.tolist())
    err = (4 * len(terms) + 4 * max(len(P1), len(P2))) * 2.0**-52 * max(value, 1.0)
    return value, err


def _diagonal_sum(pair: ExponentPair, box: int, h_above: int = 0, role: str = "h") -> tuple[float, float]:
    f = pair.floats()
    sig1, sig2 = 2 * f["e_h"], 2 * f["e_r"]
    h = np.arange(1, box + 1, dtype=np.float64)
    ph = h**-sig1
    pr = h**-sig2
    if role == "h":
        ph = ph[h_above:]
    else:
        pr = pr[h_above:]
    value = math.fsum(ph.tolist()) * math.fsum(pr.tolist())
    return value, 8 * box * 2.0**-52 * max(value, 1.0)


@dataclass(frozen=True)
class GabResult:
    value: RealBall
    route: str
    box: int | None = None
    tail_bound: float | None = None
    provenance: tuple = ()


def tail_shape(pair: ExponentPair, box: int) -> float:
    """box^(-min(a,b)/(2(a+b))) log^2(2 box)."""
    f = pair.floats()
    return box ** (-min(f["a"], f["b"]) / (2 * (f["a"] + f["b"]))) * math.log(2 * box) ** 2


def _partial_value(pair: ExponentPair, box: int) -> tuple[float, float]:
    return _factorized_sum(pair, box) if pair.is_integer else _diagonal_sum(pair, box)


def fitted_tail_constant(pair: ExponentPair, boxes=(100, 1000), reference: int = REFERENCE_BOX) -> float:
    """c with tail(box) <= c * tail_shape(box), fitted on partial-sum increments.

    tail(box) is estimated by partial(reference) - partial(box) (a lower
    estimate, so the fit is flagged non-rigorous); c is the largest ratio
    over the fitting boxes.
    """
    ref, _ = _partial_value(pair, reference)
    return max((ref - _partial_value(pair, bx)[0]) / tail_shape(pair, bx) for bx in boxes)


def gab_partial(pair: ExponentPair, box: int, with_tail: bool = True) -> GabResult:
    """Sum of G's terms with all coordinates <= box, plus the fitted tail size."""
    if box < 1:
        raise ValidationError("box must be >= 1")
    value, err = _partial_value(pair, box)
    tail = fitted_tail_constant(pair) * tail_shape(pair, box) if with_tail else None
    return GabResult(RealBall(value, err, 64), "partial_sum", box, tail, _provenance(pair) + ("tail_bound is an empirical fit",))


def _provenance(pair: ExponentPair) -> tuple:
    if pair.is_integer:
        return ()
    note = ("diagonal-only coincidences: conditional on a/b irrational",)
    return note + tuple(pair.provenance())


# -- closed form and its validation ----------------------------------------------------

_VALIDATED: set = set()
VALIDATION_FILE = "gab-validation.json"


@dataclass(frozen=True)
class ValidationReport:
    pair_key: tuple
    boxes: tuple
    residuals: tuple
    tail_constant: float
    tail_at_last: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair_key),
            "boxes": list(self.boxes),
            "residuals": list(self.residuals),
            "tail_constant": self.tail_constant,
            "tail_at_last": self.tail_at_last,
            "passed": self.passed,
        }


def _closed_value(pair: ExponentPair, ctx: PrecisionContext) -> RealBall:
    sig1, sig2, kappa = exponents(pair)
    value = zeta_real(sig1, ctx) * zeta_real(sig2, ctx)
    if pair.is_integer:
        zk = zeta_real(kappa, ctx)
        value = value * zk * zk / zeta_real(2 * kappa, ctx)
    return value


def validate_closed_form(pair: ExponentPair, boxes=VALIDATION_BOXES, record_dir: str | Path | None = None) -> ValidationReport:
    """Check the closed form against partial sums: residuals must decrease over
    ``boxes`` and the last one must be below twice the fitted tail."""
    closed = float(_closed_value(pair, PrecisionContext(bits=96)))
    residuals = tuple(abs(closed - _partial_value(pair, bx)[0]) for bx in boxes)
    c = fitted_tail_constant(pair, boxes=boxes[:-1])
    tail_last = c * tail_shape(pair, boxes[-1])
    decreasing = all(x > y for x, y in zip(residuals, residuals[1:]))
    passed = decreasing and residuals[-1] < 2 * tail_last
    report = ValidationReport(pair.key, tuple(boxes), residuals, c, tail_last, passed)
    if passed:
        _VALIDATED.add(pair.key)
        if record_dir is not None:
            _write_record(Path(record_dir), report)
    return report


def _write_record(directory: Path, report: ValidationReport) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / VALIDATION_FILE
    records = json.loads(path.read_text()) if path.exists() else []
    records = [r for r in records if r["pair"] != list(report.pair_key)]
    records.append(report.to_dict())
    path.write_text(json.dumps(records, indent=2, sort_keys=True))


def is_validated(pair: ExponentPair, record_dir: str | Path | None = None) -> bool:
    if not pair.is_integer:
        return True
    if pair.key in _VALIDATED:
        return True
    if record_dir is not None:
        path = Path(record_dir) / VALIDATION_FILE
        if path.exists():
            for r in json.loads(path.read_text()):
                if r["pair"] == list(pair.key) and r["passed"]:
                    _VALIDATED.add(pair.key)
                    return True
    return False


def gab_closed_form(
    pair: ExponentPair,
    ctx: PrecisionContext | None = None,
    require_validation: bool = True,
    record_dir: str | Path | None = None,
) -> GabResult:
    """G_{a,b} in closed form; integer pairs must have passed validate_closed_form."""
    ctx = ctx or pair.ctx
    if require_validation and not is_validated(pair, record_dir):
        raise GabNotValidated(f"closed form for {pair.label} has not been validated against partial sums")
    return GabResult(_closed_value(pair, ctx), "closed_form", provenance=_provenance(pair))


def gab_for_moments(pair: ExponentPair, ctx: PrecisionContext | None = None) -> GabResult:
    """Closed form when validated (validating on demand), else the largest partial sum."""
    if not is_validated(pair):
        validate_closed_form(pair)
    if is_validated(pair):
        return gab_closed_form(pair, ctx)
    return gab_partial(pair, REFERENCE_BOX)


def sigma1_partial(pair: ExponentPair, H: int, box: int, role: str = "h") -> RealBall:
    """Sum of G's terms with h1 > H (role 'h') or r1 > H (role 'r'), coordinates <= box."""
    if H < 1 or box < H:
        raise ValidationError("need 1 <= H <= box")
    if role not in ("h", "r"):
        raise ValidationError("role must be 'h' or 'r'")
    if pair.is_integer:
        value, err = _factorized_sum(pair, box, H, role)
    else:
        value, err = _diagonal_sum(pair, box, H, role)
    return RealBall(value, err, 64)


def sigma1_normalized(pair: ExponentPair, H: int, box: int, role: str = "h") -> float:
    """sigma1_partial * H^(b/(2(a+b))) / log^2(2H)  (exponent a/(2(a+b)) for role 'r')."""
    f = pair.floats()
    e = (f["b"] if role == "h" else f["a"]) / (2 * (f["a"] + f["b"]))
    return float(sigma1_partial(pair, H, box, role)) * H**e / math.log(2 * H) ** 2
