import math
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latmesh.errors import AmbiguousFloor, PoleError, PrecisionExhausted, ValidationError
from latmesh.precision import (
    DecimalReal,
    ExponentPair,
    PairKind,
    PrecisionContext,
    QuadraticSurd,
    RealBall,
    integer_kth_root,
    is_perfect_power,
    parse_exact,
    zeta_real,
)
from latmesh.precision.contfrac import cf_convergents, convergent_denominators, partial_quotients
from latmesh.precision.frac import frac_decompose, psi


def _contains(ball: RealBall, value) -> bool:
    """value is a callable evaluated at a precision well above the ball's."""
    with mp.workprec(ball.prec + 64):
        return abs(ball.mid - value()) <= ball.rad


# -- integer roots ------------------------------------------------------------------------


@given(st.integers(0, 10**60), st.integers(1, 9))
def test_kth_root_brackets(n, k):
    r = integer_kth_root(n, k)
    assert r**k <= n < (r + 1) ** k


@pytest.mark.parametrize("k", [2, 3, 5, 7])
def test_kth_root_of_exact_powers(k):
    for base in (1, 2, 10**9 + 7, 3**40):
        assert integer_kth_root(base**k, k) == base
        assert is_perfect_power(base**k, k) == base
        if base > 1:
            assert is_perfect_power(base**k + 1, k) is None


def test_kth_root_rejects_bad_input():
    with pytest.raises(ValueError):
        integer_kth_root(-1, 2)
    with pytest.raises(ValueError):
        integer_kth_root(4, 0)


# -- balls --------------------------------------------------------------------------------

reals = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: abs(v) > 1e-9)


@given(reals, reals)
@settings(max_examples=60)
def test_ball_arithmetic_contains_truth(x, y):
    bx, by = RealBall(x, 1e-12, 80), RealBall(y, 0, 80)
    with mp.workprec(300):
        X, Y = mp.mpf(x), mp.mpf(y)
        for op, ref in ((bx + by, X + Y), (bx - by, X - Y), (bx * by, X * Y), (bx / by, X / Y)):
            assert abs(op.mid - ref) <= op.rad


@given(st.floats(1e-6, 1e6))
@settings(max_examples=60)
def test_transcendentals_contain_truth(x):
    b = RealBall.exact_value(Fraction(x), 128)
    with mp.workprec(300):
        xv = mp.mpf(Fraction(x).numerator) / Fraction(x).denominator
        for got, ref in ((b.sqrt(), mp.sqrt(xv)), (b.log(), mp.log(xv)), (b.cos(), mp.cos(xv)), (b.sin(), mp.sin(xv))):
            assert abs(got.mid - ref) <= got.rad
        if x < 700:
            assert abs(b.exp().mid - mp.exp(xv)) <= b.exp().rad


def test_exact_comparisons():
    half, one = RealBall.exact_value(Fraction(1, 2), 64), RealBall.exact_value(1, 64)
    assert half.certainly_le(one) and half.certainly_lt(one)
    assert one.certainly_le(one) and not one.certainly_lt(one)
    assert not one.certainly_le(half)
    assert RealBall(0, 1e-3, 64).sign() is None
    assert RealBall(-2, 1, 64).sign() == -1


def test_rational_pow_exact_and_irrational():
    assert RealBall.exact_value(8, 64).rational_pow(Fraction(1, 3)).exact == 2
    b = RealBall.exact_value(2, 128).rational_pow(Fraction(1, 3))
    assert b.exact is None and _contains(b, lambda: mp.cbrt(2))


def test_floor_if_certain():
    assert RealBall(2.5, 0.1, 64).floor_if_certain() == 2
    assert RealBall(3.0, 0.1, 64).floor_if_certain() is None
    assert RealBall.exact_value(3, 64).floor_if_certain() == 3


def test_precision_ladder_and_env(monkeypatch):
    ctx = PrecisionContext(64, 512)
    assert list(ctx.ladder()) == [64, 128, 256, 512]
    monkeypatch.setenv("LATMESH_MAX_BITS", "300")
    assert PrecisionContext(100).max_bits == 300
    assert list(PrecisionContext(100).ladder()) == [100, 200, 300]
    with pytest.raises(ValidationError):
        PrecisionContext(8)


# -- exact numbers ------------------------------------------------------------------------


def test_quadratic_surd_arithmetic():
    r2 = QuadraticSurd.sqrt(2)
    assert r2 * r2 == 2
    assert (1 + r2) * (r2 - 1) == 1
    assert QuadraticSurd.sqrt(8) == 2 * r2
    assert QuadraticSurd.sqrt(9) == 3
    assert r2.floor() == 1 and (r2 * 1000).floor() == 1414
    assert (1 / r2) == r2 / 2
    assert r2 > Fraction(1414, 1000) and r2 < Fraction(1415, 1000)
    assert _contains(r2.ball(128), lambda: mp.sqrt(2))


@pytest.mark.parametrize(
    "text, expected",
    [("2", 2), ("3/2", Fraction(3, 2)), ("sqrt(4)", 2), ("sqrt(2)", QuadraticSurd.sqrt(2)), ("(1+sqrt(5))/2", (1 + QuadraticSurd.sqrt(5)) / 2)],
)
def test_parse_exact(text, expected):
    assert parse_exact(text) == expected


def test_parse_decimal_and_errors():
    d = parse_exact("1.41421")
    assert isinstance(d, DecimalReal) and d.digits == 5 and d.value == Fraction(141421, 100000)
    with pytest.raises(ValidationError):
        parse_exact("pi")
    with pytest.raises(ValidationError):
        parse_exact("2**")


# -- zeta ---------------------------------------------------------------------------------


@pytest.mark.parametrize("s", [Fraction(1, 2), Fraction(2, 3), Fraction(3, 2), 2, 3, Fraction(7, 3), 10])
def test_zeta_matches_mpmath(s):
    z = zeta_real(s, PrecisionContext(160))
    with mp.workprec(400):
        ref = mp.zeta(mp.mpf(s.numerator) / s.denominator if isinstance(s, Fraction) else s)
        assert abs(z.mid - ref) <= z.rad
    assert z.rad_float() < 1e-40


def test_zeta_irrational_argument():
    z = zeta_real(QuadraticSurd.sqrt(2), PrecisionContext(128))
    with mp.workprec(300):
        assert abs(z.mid - mp.zeta(mp.sqrt(2))) <= z.rad


def test_zeta_pole_and_domain():
    with pytest.raises(PoleError):
        zeta_real(1)
    with pytest.raises(ValidationError):
        zeta_real(-1)


# -- fractional parts ---------------------------------------------------------------------


@pytest.mark.parametrize("t, floor, dist", [(Fraction(7, 2), 3, Fraction(1, 2)), (5, 5, 0), (Fraction(-1, 3), -1, Fraction(1, 3))])
def test_frac_decompose_exact(t, floor, dist):
    d = frac_decompose(t)
    assert d.floor_part == floor and d.dist.exact == dist


def test_psi_at_integer_is_minus_half():
    assert psi(4).exact == Fraction(-1, 2)


def test_frac_of_surd_and_ambiguity():
    d = frac_decompose(QuadraticSurd.sqrt(2) * 10)
    assert d.floor_part == 14
    with pytest.raises(AmbiguousFloor):
        frac_decompose(RealBall(3.0, 1e-3, 64))
    assert issubclass(AmbiguousFloor, PrecisionExhausted)


# -- continued fractions ------------------------------------------------------------------


def test_sqrt2_convergents():
    r2 = QuadraticSurd.sqrt(2)
    assert partial_quotients(r2, 6) == [1, 2, 2, 2, 2, 2]
    assert cf_convergents(r2, 4) == [(1, 1), (3, 2), (7, 5), (17, 12)]
    assert convergent_denominators(r2, 100) == [1, 2, 5, 12, 29, 70]


def test_golden_ratio_quotients():
    assert partial_quotients((1 + QuadraticSurd.sqrt(5)) / 2, 8) == [1] * 8


@given(st.integers(2, 200).filter(lambda n: math.isqrt(n) ** 2 != n))
@settings(max_examples=30)
def test_convergents_approximate(n):
    alpha = QuadraticSurd.sqrt(n)
    for p, q in cf_convergents(alpha, 6):
        assert abs(p - q * math.sqrt(n)) < 1 / q


# -- exponent pairs -----------------------------------------------------------------------


def test_pair_validation():
    with pytest.raises(ValidationError, match="divisor problem"):
        ExponentPair.integer(2, 2)
    with pytest.raises(ValidationError):
        ExponentPair.integer(3, 2)
    with pytest.raises(ValidationError):
        ExponentPair.integer(2, 4)
    with pytest.raises(ValidationError):
        ExponentPair.parse("1", "1.41421")
    p = ExponentPair.parse("1", "1.41421", assert_irrational=True)
    assert p.kind is PairKind.DECIMAL and p.provenance()
    assert ExponentPair.parse("1", "sqrt(2)").kind is PairKind.QUADRATIC_SURD


@pytest.mark.parametrize("a, b", [(1, 2), (1, 3), (2, 3), (3, 5)])
def test_pair_constants_match_mpmath(a, b):
    p = ExponentPair.integer(a, b)
    with mp.workprec(300):
        s = mp.mpf(a + b)
        c1 = mp.power(a, b / (2 * s)) * mp.power(b, a / (2 * s)) / mp.sqrt(s)
        c2 = mp.power(mp.mpf(a) / b, b / s) + mp.power(mp.mpf(b) / a, a / s)
        coef = mp.power(a, b / s) * mp.power(b, a / s) / (2 * mp.pi**2 * s)
        for got, ref in ((p.c1(), c1), (p.c2(), c2), (p.mean_square_coefficient(), coef)):
            assert abs(got.mid - ref) <= got.rad + mp.mpf(2) ** -150


def test_pair_frozen_values(p12):
    f = p12.floats()
    assert f["theta"] == pytest.approx(1 / 3)
    assert float(p12.c1()) == pytest.approx(0.6480533, rel=1e-6)
    assert float(p12.c2()) == pytest.approx(1.8898816, rel=1e-6)
    assert float(p12.main_term(1000)) == pytest.approx(1598.7536, abs=1e-3)


def test_lattice_value_exactness(psqrt2):
    assert psqrt2.lattice_value_exact(11, 1) == 11
    assert psqrt2.lattice_value_exact(2, 2) is None
    v = psqrt2.lattice_value(2, 2, 128)
    with mp.workprec(300):
        assert abs(v.mid - 2 * mp.power(2, mp.sqrt(2))) <= v.rad
