import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latmesh import kernels
from latmesh.counting import delta_many
from latmesh.errors import TermCapExceeded, ValidationError
from latmesh.voronoi import (
    PhaseSpec,
    VoronoiParams,
    _delta_star_limits,
    bprocess_compare,
    delta_star,
    delta_star_many,
    frequency_limits,
    g_term,
    psi_fourier_residual,
    random_phases,
)


def test_frequency_limits(p12, p23):
    assert frequency_limits(p12, 10) == (10, 20)
    assert frequency_limits(p23, 7) == (14, 21)


def test_params_validation():
    with pytest.raises(ValidationError):
        VoronoiParams(1)
    with pytest.raises(ValidationError):
        VoronoiParams(Fraction(5, 2))


def test_empty_frequency_range_is_zero(p12):
    # a frequency limit below one leaves nothing to sum
    out = _delta_star_limits(p12, [100, 1000], 0, 5)
    assert np.all(out == 0)


def test_term_cap(p12):
    with pytest.raises(TermCapExceeded):
        delta_star_many(p12, [100.0], 100, term_cap=1000)


def test_delta_star_matches_mpmath(p12):
    x, H = Fraction(12345, 7), 6
    hmax, rmax = frequency_limits(p12, H)
    got = delta_star(p12, x, VoronoiParams(H))
    with mp.workdps(40):
        xv = mp.mpf(x.numerator) / x.denominator
        c1 = mp.power(2, mp.mpf(1) / 6) / mp.sqrt(3)
        c2 = mp.power(mp.mpf(1) / 2, mp.mpf(2) / 3) + mp.power(2, mp.mpf(1) / 3)
        freq = c2 * mp.cbrt(xv)
        ref = 0
        for h in range(1, hmax + 1):
            for r in range(1, rmax + 1):
                w = mp.power(h, -mp.mpf(5) / 6) * mp.power(r, -mp.mpf(2) / 3)
                ref += w * mp.cos(2 * mp.pi * freq * mp.cbrt(h * r * r) - mp.pi / 4)
        ref *= c1 / mp.pi * mp.power(xv, mp.mpf(1) / 6)
        assert abs(mp.mpf(got.mid) - ref) <= got.rad + mp.mpf(10) ** -25


def test_rms_decreases_with_H(p12):
    xs = 10**4 + (np.arange(400) + 0.5) * 25.0
    exact = delta_many(p12, xs)
    rms = [float(np.sqrt(np.mean((exact - delta_star_many(p12, xs, H)) ** 2))) for H in (2, 8, 32)]
    assert rms[0] > rms[1] > rms[2]


def test_cosine_backends_agree(p12):
    impls = kernels.backends()
    rng = np.random.Generator(np.random.Philox(key=3))
    f_hi = rng.uniform(10, 1000, 5)
    f_lo = np.zeros(5)
    v_hi = rng.uniform(1, 50, 300)
    v_lo = np.zeros(300)
    w = rng.uniform(0, 1, 300)
    ref = np.array([np.sum(w * np.cos(2 * np.pi * f * v_hi - np.pi / 4)) for f in f_hi])
    for mod in impls.values():
        out = np.zeros(5)
        mod.cosine_sums(f_hi, f_lo, v_hi, v_lo, w, out)
        # the double-double phase reduction is at least as accurate as numpy
        assert np.allclose(out, ref, atol=1e-9)


def test_g_term_at_one(p12):
    assert float(g_term("a", p12, 1, 10)) == pytest.approx(1.0)
    assert float(g_term("b", p12, 1, 10)) == pytest.approx(1.0)


def test_g_term_matches_direct(p12):
    x, H = 5000.5, 7
    n0 = math.floor(x ** (1 / 3))
    ref_a = sum(min(1, 1 / (H * abs(v - round(v)))) for v in (x / m**2 for m in range(1, n0 + 1)))
    ref_b = sum(min(1, 1 / (H * abs(v - round(v)))) for v in (math.sqrt(x / m) for m in range(1, n0 + 1)))
    assert float(g_term("a", p12, x, H)) == pytest.approx(ref_a, rel=1e-9)
    assert float(g_term("b", p12, x, H)) == pytest.approx(ref_b, rel=1e-9)


def test_g_term_exact_integer_hit(p12):
    # x / m^2 is an integer for m = 1, 2 and every term is capped at 1 there
    v = g_term("a", p12, 64, 2)
    assert v.rad_float() < 1e-9 and float(v) >= 2


def test_g_term_validation(p12):
    with pytest.raises(ValidationError):
        g_term("c", p12, 10, 5)
    with pytest.raises(ValidationError):
        g_term("a", p12, 10, 1)


@given(st.integers(0, 10**4), st.integers(2, 60))
@settings(max_examples=60, deadline=None)
def test_psi_truncation_bound(k, H):
    u = Fraction(k, 10**4 + 1)
    resid, bound = psi_fourier_residual(u, H)
    assert resid.certainly_le(bound)


def test_psi_residual_at_integer():
    resid, bound = psi_fourier_residual(3, 10)
    assert float(resid) == pytest.approx(0.5) and float(bound) == 1.0


def test_bprocess_endpoint_weight():
    # f(m) = -4/m on [1, 2]: f' runs over [1, 4] and both ends are integers
    res = bprocess_compare(PhaseSpec(4.0, 1.0, 1.0, 2.0))
    weights = {p.u: p.b_u for p in res.stationary_points}
    assert weights == {1: Fraction(1, 2), 2: 1, 3: 1, 4: Fraction(1, 2)}


def test_bprocess_direct_sum_matches_mpmath():
    spec = PhaseSpec(5000.0, 1.5, 100, 220)
    res = bprocess_compare(spec)
    with mp.workdps(30):
        ref = mp.fsum(mp.expjpi(-2 * 5000 * mp.power(m, -1.5)) for m in range(101, 221))
    assert abs(complex(res.direct) - complex(ref)) < 1e-9


def test_bprocess_no_stationary_points():
    # f' ranges inside (0, 1): no integer u
    res = bprocess_compare(PhaseSpec(10.0, 1.0, 100, 200))
    assert res.no_stationary_points and complex(res.transformed) == 0


def test_random_phases_deterministic():
    a, b = random_phases(7, 5), random_phases(7, 5)
    assert a == b
    assert random_phases(7, 6)[:5] == a
    assert random_phases(8, 5) != a
    for p in a:
        assert 100 <= p.m2 - p.m1 <= max(100, p.m1)


def test_phase_validation():
    with pytest.raises(ValidationError):
        PhaseSpec(-1, 1, 10, 20)
    with pytest.raises(ValidationError):
        PhaseSpec(1, 1, 20, 10)
