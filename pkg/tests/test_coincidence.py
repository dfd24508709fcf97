import json
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latmesh import coincidence
from latmesh.coincidence import (
    exponents,
    gab_closed_form,
    gab_for_moments,
    gab_partial,
    is_validated,
    quads_enumerate,
    sigma1_normalized,
    sigma1_partial,
    validate_closed_form,
)
from latmesh.errors import BoxTooLarge, GabNotValidated, ValidationError
from latmesh.precision.pair import ExponentPair


@pytest.fixture
def fresh_validation(monkeypatch):
    monkeypatch.setattr(coincidence, "_VALIDATED", set())


def _weight_sum(quads) -> float:
    return float(mp.fsum(q.weight.mid for q in quads))


def test_box4_quads(p12):
    quads = quads_enumerate(p12, 4)
    off = sorted(q.key for q in quads if not q.is_diagonal())
    assert off == [(1, 2, 4, 1), (1, 4, 4, 2), (4, 1, 1, 2), (4, 2, 1, 4)]
    assert sum(q.is_diagonal() for q in quads) == 16


@pytest.mark.parametrize("a, b", [(1, 2), (1, 3), (2, 3), (2, 5)])
@given(box=st.integers(1, 40))
@settings(max_examples=15, deadline=None)
def test_brute_equals_parametrized(a, b, box):
    pair = ExponentPair.integer(a, b)
    brute = [q.key for q in quads_enumerate(pair, box, "brute")]
    param = [q.key for q in quads_enumerate(pair, box, "parametrized")]
    assert brute == param


def test_quads_satisfy_relation(p23):
    for q in quads_enumerate(p23, 50):
        assert q.h1**2 * q.r1**3 == q.h2**2 * q.r2**3
        g, m, s, t = q.param
        assert (q.h1, q.r1, q.h2, q.r2) == (g * t**3, m * s**2, g * s**3, m * t**2)


def test_irrational_quads_are_diagonal(psqrt2):
    quads = quads_enumerate(psqrt2, 6)
    assert len(quads) == 36 and all(q.is_diagonal() for q in quads)


def test_enumeration_validation(p12):
    with pytest.raises(ValidationError):
        quads_enumerate(p12, 0)
    with pytest.raises(ValidationError):
        quads_enumerate(p12, 5, "fast")
    with pytest.raises(BoxTooLarge):
        quads_enumerate(p12, 10**4, "brute")


def test_exponents(p12):
    assert exponents(p12) == (Fraction(5, 3), Fraction(4, 3), Fraction(7, 3))


@pytest.mark.parametrize("box, value", [(1, 1.0), (4, 3.36545)])
def test_gab_partial_frozen(p12, box, value):
    got = gab_partial(p12, box, with_tail=False)
    assert float(got.value) == pytest.approx(value, abs=1e-5)
    assert float(got.value) == pytest.approx(_weight_sum(quads_enumerate(p12, box)), rel=1e-12)


@pytest.mark.parametrize("box", [7, 23, 60])
def test_gab_partial_matches_quad_weights(p23, box):
    assert float(gab_partial(p23, box, with_tail=False).value) == pytest.approx(
        _weight_sum(quads_enumerate(p23, box, "brute")), rel=1e-11
    )


@pytest.mark.parametrize("a, b, value", [(1, 2, 14.6134635704749), (2, 3, 8.50428824548)])
def test_closed_form_values(a, b, value):
    pair = ExponentPair.integer(a, b)
    validate_closed_form(pair)
    g = gab_closed_form(pair)
    s = a + b
    with mp.workprec(200):
        k = mp.mpf(a * a + a * b + b * b) / s
        ref = mp.zeta(mp.mpf(a + 2 * b) / s) * mp.zeta(mp.mpf(2 * a + b) / s) * mp.zeta(k) ** 2 / mp.zeta(2 * k)
        assert abs(g.value.mid - ref) <= g.value.rad + mp.mpf(2) ** -150
    assert float(g.value) == pytest.approx(value, rel=1e-11)


def test_closed_form_requires_validation(fresh_validation, p13, tmp_path):
    with pytest.raises(GabNotValidated):
        gab_closed_form(p13)
    assert gab_closed_form(p13, require_validation=False).route == "closed_form"
    rep = validate_closed_form(p13, record_dir=tmp_path)
    assert rep.passed and is_validated(p13)
    record = json.loads((tmp_path / coincidence.VALIDATION_FILE).read_text())
    assert record[0]["pair"] == list(p13.key)


def test_validation_record_reloads(fresh_validation, p13, tmp_path):
    validate_closed_form(p13, record_dir=tmp_path)
    coincidence._VALIDATED.clear()
    assert not is_validated(p13)
    assert is_validated(p13, tmp_path)


def test_irrational_closed_form_needs_no_validation(fresh_validation, psqrt2):
    g = gab_closed_form(psqrt2)
    assert any("irrational" in note for note in g.provenance)


def test_gab_for_moments_validates_on_demand(fresh_validation, p12):
    assert gab_for_moments(p12).route == "closed_form"


def test_partial_tail_reported(p12):
    g = gab_partial(p12, 100)
    assert g.tail_bound > 0 and any("empirical" in n for n in g.provenance)


def test_sigma1_edge_cases(p12):
    assert float(sigma1_partial(p12, 10, 10)) == 0.0
    with pytest.raises(ValidationError):
        sigma1_partial(p12, 11, 10)
    with pytest.raises(ValidationError):
        sigma1_partial(p12, 2, 10, role="x")


def test_sigma1_matches_quad_filter(p12):
    quads = quads_enumerate(p12, 30)
    for role, idx in (("h", 0), ("r", 1)):
        ref = _weight_sum([q for q in quads if q.key[idx] > 5])
        assert float(sigma1_partial(p12, 5, 30, role)) == pytest.approx(ref, rel=1e-11)


def test_sigma1_decreasing_in_H(p12):
    vals = [float(sigma1_partial(p12, H, 1000)) for H in (2, 8, 32, 128)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert sigma1_normalized(p12, 8, 1000) > 0
