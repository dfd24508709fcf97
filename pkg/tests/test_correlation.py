import math
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latmesh.correlation import (
    NearPairQuery,
    eta_gap,
    fit_near_pair_constant,
    min_gap,
    near_pair_count,
    near_pair_count_brute,
    near_pair_grid,
    random_queries,
    roth_quality,
    roth_scan,
    sigma2_brute,
    sigma2_eval,
)
from latmesh.errors import SizeGuard, ValidationError
from latmesh.precision import PrecisionContext, QuadraticSurd

SQRT2 = QuadraticSurd.sqrt(2)


# -- eta ----------------------------------------------------------------------------------


def test_eta_exact_zero_on_coincidence(p12, psqrt2):
    # 4 * 1^2 = 1 * 2^2
    assert eta_gap(p12, 4, 1, 1, 2).exact == 0
    assert eta_gap(psqrt2, 3, 5, 3, 5).exact == 0


def test_eta_matches_mpmath(p12, psqrt2):
    g = eta_gap(p12, 2, 3, 3, 2)
    with mp.workprec(300):
        assert abs(g.mid - (mp.cbrt(18) - mp.cbrt(12))) <= g.rad
        ref = mp.power(2 * mp.power(2, mp.sqrt(2)), 1 / (1 + mp.sqrt(2))) - mp.power(3, 1 / (1 + mp.sqrt(2)))
    g2 = eta_gap(psqrt2, 2, 2, 3, 1)
    with mp.workprec(300):
        assert abs(g2.mid - ref) <= g2.rad


def test_eta_antisymmetric(p23):
    assert float(eta_gap(p23, 5, 2, 3, 3)) == pytest.approx(-float(eta_gap(p23, 3, 3, 5, 2)))
    with pytest.raises(ValidationError):
        eta_gap(p23, 0, 1, 1, 1)


# -- near pairs ---------------------------------------------------------------------------


def test_dyadic_boxes():
    assert list(NearPairQuery.dyadic(1)) == [2]
    assert list(NearPairQuery.dyadic(Fraction(5, 2))) == [3, 4, 5]
    assert list(NearPairQuery.dyadic(4)) == [5, 6, 7, 8]


def test_near_pair_single_point():
    q = NearPairQuery(Fraction(1, 3), Fraction(2, 3), 1, 1, 1, 1, 0)
    assert q.volume() == 1 and near_pair_count(q) == 1


def test_near_pair_huge_delta_counts_everything():
    q = NearPairQuery(Fraction(1, 2), Fraction(1), 4, 3, 2, 5, 10**6)
    assert near_pair_count(q) == q.volume() == 4 * 3 * 2 * 5


def test_near_pair_exact_ties_counted():
    # h r^2 values coincide exactly on the diagonal, so delta = 0 keeps them
    q = NearPairQuery(Fraction(1), Fraction(2), 4, 4, 4, 4, 0)
    assert near_pair_count(q) == near_pair_count_brute(q) >= 16


@pytest.mark.parametrize("q", random_queries(5, 25), ids=lambda q: f"{q.mu}-{q.nu}-{q.delta}")
def test_near_pair_matches_brute(q):
    assert near_pair_count(q) == near_pair_count_brute(q)


@given(
    st.sampled_from([(Fraction(1, 3), Fraction(2, 3)), (Fraction(1), Fraction(2)), (Fraction(1, 2), SQRT2)]),
    st.lists(st.integers(1, 12), min_size=4, max_size=4),
    st.fractions(0, 3, max_denominator=50),
)
@settings(max_examples=40, deadline=None)
def test_near_pair_property(exps, anchors, delta):
    mu, nu = exps
    q = NearPairQuery(mu, nu, *(Fraction(a, 2) for a in anchors), delta)
    assert near_pair_count(q) == near_pair_count_brute(q)


def test_near_pair_monotone_in_delta():
    counts = [near_pair_count(q) for q in near_pair_grid() if q.H1 == 8]
    assert counts == sorted(counts)


def test_near_pair_guard():
    with pytest.raises(SizeGuard):
        near_pair_count(NearPairQuery(1, 2, 200, 200, 200, 200, 1))


def test_near_pair_validation():
    with pytest.raises(ValidationError):
        NearPairQuery(0, 1, 2, 2, 2, 2, 1)
    with pytest.raises(ValidationError):
        NearPairQuery(1, 1, 2, 2, 2, 2, -1)


def test_fit_constant_geometric_mean():
    grid = near_pair_grid()[:2]
    counts = [4, 9]
    fit = fit_near_pair_constant(grid, counts)
    ratios = [c / q.shape() for c, q in zip(counts, grid)]
    assert fit["c"] == pytest.approx(math.sqrt(ratios[0] * ratios[1]))
    assert fit["max_ratio"] == pytest.approx(max(ratios))


# -- sigma2 -------------------------------------------------------------------------------


def test_sigma2_trivial(p12):
    assert float(sigma2_eval(p12, 100, 1, 1)) == 0.0


@pytest.mark.parametrize("T, H, R", [(10, 4, 4), (1000, 6, 9), (10**5, 12, 7)])
def test_sigma2_matches_brute(p12, p23, psqrt2, T, H, R):
    for pair in (p12, p23, psqrt2):
        for swapped in (False, True):
            v = sigma2_eval(pair, T, H, R, swapped=swapped)
            assert float(v) == pytest.approx(sigma2_brute(pair, T, H, R, swapped), rel=1e-9, abs=1e-12)


def test_sigma2_scaled_decreasing(p12):
    scaled = [float(sigma2_eval(p12, T, 64, 64)) / T ** (1 / 3) for T in (10**3, 10**5, 10**7)]
    assert scaled[0] > scaled[1] > scaled[2]


def test_sigma2_validation(p12):
    with pytest.raises(ValidationError):
        sigma2_eval(p12, 5, 4, 4)
    with pytest.raises(SizeGuard):
        sigma2_eval(p12, 100, 1000, 1000)


# -- minimal gaps -------------------------------------------------------------------------


def test_min_gap_small_cases(p12):
    assert float(min_gap(p12, 2).min_gap) == 1.0
    eta = min_gap(p12, 2, transform="eta")
    assert float(eta.min_gap) == pytest.approx(2 ** (1 / 3) - 1, rel=1e-14)
    assert math.isnan(eta.fitted_C)


def test_min_gap_irrational_witness():
    rep = min_gap((1, SQRT2), 50)
    h1, r1, h2, r2 = rep.witness
    with mp.workprec(600):
        ref = abs(h1 * mp.power(r1, mp.sqrt(2)) - h2 * mp.power(r2, mp.sqrt(2)))
        assert abs(rep.min_gap.mid - ref) <= rep.min_gap.rad
    assert float(rep.min_gap) == pytest.approx(0.00241, rel=1e-2)


def test_min_gap_monotone_in_M():
    gaps = [float(min_gap((1, SQRT2), M).min_gap) for M in (5, 10, 20, 40)]
    assert all(y <= x for x, y in zip(gaps, gaps[1:]))


def test_min_gap_rational_ratio_skips_ties():
    # (1/3, 2/3): h r^2 ties give exact zero gaps, which must be skipped
    rep = min_gap((Fraction(1, 3), Fraction(2, 3)), 12)
    assert rep.min_gap.certainly_positive()


def test_min_gap_validation(p12):
    with pytest.raises(ValidationError):
        min_gap(p12, 1)
    with pytest.raises(SizeGuard):
        min_gap(p12, 10**4)


# -- Roth-type quality -------------------------------------------------------------------


def test_roth_sqrt2():
    rep = roth_quality(SQRT2, 10**5)
    ns = [n for n, _ in rep.records]
    assert ns[0] == 1
    assert float(dict(rep.records)[2]) == pytest.approx(6 - 4 * math.sqrt(2), rel=1e-12)
    assert min(float(v) for _, v in rep.records) >= 0.2
    assert set(ns) <= {1, 2, 5, 12, 29, 70, 169, 408, 985, 2378, 5741, 13860, 33461, 80782}


def test_roth_matches_scan():
    for alpha in (SQRT2, (1 + QuadraticSurd.sqrt(5)) / 2, QuadraticSurd.sqrt(7)):
        rep = roth_quality(alpha, 20000)
        scan = roth_scan(alpha, 20000)
        assert [n for n, _ in rep.records] == [n for n, _ in scan]
        for (_, v), (_, s) in zip(rep.records, scan):
            assert float(v) == pytest.approx(s, rel=1e-8)


def test_roth_probe_is_minimal():
    rep = roth_quality(SQRT2, 1000, epsilon=0.1)
    n = max(range(1, 1001), key=lambda k: -k**1.1 * abs(k * math.sqrt(2) - round(k * math.sqrt(2))))
    assert rep.probe[0] == n


def test_roth_validation():
    with pytest.raises(ValidationError):
        roth_quality(Fraction(3, 7), 20, PrecisionContext())
    with pytest.raises(ValidationError):
        roth_quality(SQRT2, 0)
    with pytest.raises(SizeGuard):
        roth_quality(SQRT2, 10**8)
