import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omega_calc.indicator import (
    AffineIndicator,
    ClosedFormLp,
    NumericIndicator,
    check_indicator_axioms,
    delta_phi,
    estimate_delta,
    indicator_affine,
    indicator_eval,
    indicator_extend,
    indicator_from_descriptor,
    indicator_of,
    l1_indicator,
    lozanovsky_factorize,
    norm_from_indicator,
)
from omega_calc.interpolate import closed_form_lp_couple
from omega_calc.measure import MeasureSpace, PreconditionError
from omega_calc.spaces import CalderonProduct, WeightedLp

LOG2 = math.log(2)
S2 = MeasureSpace.uniform(2)


def test_eval_examples():
    assert indicator_eval(l1_indicator(S2), [1, 1]) == pytest.approx(-2 * LOG2)
    assert indicator_eval(ClosedFormLp(S2, "inf"), [0.3, 5]) == pytest.approx(0.0, abs=1e-15)
    assert indicator_eval(ClosedFormLp(S2, 2), [1, 1]) == pytest.approx(-LOG2)


def test_eval_rejects_negative_entries():
    with pytest.raises(PreconditionError):
        l1_indicator(S2)([1, -1])


def test_closed_form_matches_numeric_maximizer():
    rng = np.random.default_rng(0)
    for p in (1.0, 1.7, 3.0, math.inf):
        S = MeasureSpace(rng.uniform(0.5, 2, 5))
        A = WeightedLp(S, p, rng.uniform(0.5, 2, 5))
        f = rng.exponential(size=5)
        assert NumericIndicator(A)(f) == pytest.approx(ClosedFormLp.of(A)(f), abs=1e-7)


def test_numeric_indicator_of_calderon_product_is_linear():
    rng = np.random.default_rng(1)
    S = MeasureSpace.uniform(4)
    A0, A1 = WeightedLp(S, 1.5, rng.uniform(0.5, 2, 4)), WeightedLp(S, 4, rng.uniform(0.5, 2, 4))
    phi = NumericIndicator(CalderonProduct(A0, A1, 0.3))
    lin = indicator_affine(ClosedFormLp.of(A0), ClosedFormLp.of(A1), 0.3)
    for _ in range(3):
        f = rng.exponential(size=4)
        assert phi(f) == pytest.approx(lin(f), abs=1e-6)


def test_extend_examples():
    phi = l1_indicator(S2)
    f = np.array([0.4, 1.3])
    assert indicator_extend(phi, f).real == pytest.approx(phi(f), abs=1e-12)
    assert indicator_extend(phi, 3 * f).real == pytest.approx(3 * phi(f), abs=1e-12)
    # signed f: the contributions have opposite signs and cancel
    assert indicator_extend(phi, [1, -1]) == pytest.approx(0.0, abs=1e-12)
    assert indicator_extend(phi, [0, 0]) == 0


def test_delta_examples():
    rng = np.random.default_rng(2)
    phi = ClosedFormLp(MeasureSpace.uniform(4), 2.5, rng.uniform(0.5, 2, 4))
    f = rng.exponential(size=4)
    assert delta_phi(phi, f, f) == pytest.approx(0.0, abs=1e-12)
    assert delta_phi(l1_indicator(S2), [1, 0], [0, 1]) == pytest.approx(2 * LOG2)


def test_delta_in_range_on_random_pairs():
    rng = np.random.default_rng(3)
    S = MeasureSpace(rng.uniform(0.5, 2, 6))
    for phi in (l1_indicator(S), ClosedFormLp(S, 3, rng.uniform(0.5, 2, 6))):
        for _ in range(200):
            f, g = rng.exponential(size=6), rng.exponential(size=6)
            d = delta_phi(phi, f, g)
            assert -1e-12 <= d <= phi.delta * (S.mu @ f + S.mu @ g) + 1e-12


def test_estimate_delta_examples():
    S = MeasureSpace.uniform(8)
    d1 = estimate_delta(l1_indicator(S), budget=10_000)
    assert LOG2 - 1e-3 <= d1 <= LOG2 + 1e-9
    assert estimate_delta(ClosedFormLp(S, "inf"), budget=200) == pytest.approx(0.0, abs=1e-12)
    d2 = estimate_delta(ClosedFormLp(S, 2), budget=2000)
    assert 0 < d2 <= LOG2 + 1e-9


def test_estimate_delta_is_deterministic():
    phi = ClosedFormLp(MeasureSpace.uniform(5), 1.5)
    assert estimate_delta(phi, budget=300, seed=7) == estimate_delta(phi, budget=300, seed=7)


def test_lozanovsky_examples():
    lz = lozanovsky_factorize(WeightedLp(S2, 1), [0.5, 0.5])
    np.testing.assert_allclose(lz.a, [0.5, 0.5])
    np.testing.assert_allclose(lz.a_star, [1, 1])
    lz = lozanovsky_factorize(WeightedLp(S2, 2), [0.5, 0.5])
    np.testing.assert_allclose(lz.a, [2**-0.5] * 2)
    np.testing.assert_allclose(lz.a_star, [2**-0.5] * 2)
    with pytest.raises(PreconditionError):
        lozanovsky_factorize(WeightedLp(S2, 2), [0, 0])


def test_lozanovsky_identity_and_unit_norms():
    rng = np.random.default_rng(4)
    for _ in range(10):
        S = MeasureSpace(rng.uniform(0.5, 2, 6))
        A = WeightedLp(S, rng.uniform(1, 6), rng.uniform(0.5, 2, 6))
        f = rng.exponential(size=6)
        f /= S.mu @ f
        lz = lozanovsky_factorize(A, f)
        np.testing.assert_allclose(lz.a * lz.a_star, f, atol=1e-12)
        assert A.norm(lz.a) == pytest.approx(1, abs=1e-9)
        assert A.dual().norm(lz.a_star) == pytest.approx(1, abs=1e-9)
        lhs = l1_indicator(S)(f)
        rhs = ClosedFormLp.of(A)(f) + ClosedFormLp.of(A.dual())(f)
        assert lhs == pytest.approx(rhs, abs=1e-9)
        num = lozanovsky_factorize(A, f, method="numeric")
        np.testing.assert_allclose(num.a, lz.a, atol=1e-5)


def test_affine_examples():
    S = MeasureSpace.uniform(3)
    p0, p1 = l1_indicator(S), ClosedFormLp(S, "inf")
    f = np.array([0.3, 1.0, 2.0])
    assert indicator_affine(p0, p1, 0)(f) == pytest.approx(p0(f))
    assert indicator_affine(p0, p1, 0.5)([1, 1, 0]) == pytest.approx(-LOG2)
    assert indicator_affine(p0, p1, 0.5).delta <= 0.5 * LOG2 + 1e-12


def test_affine_weighted_lp_is_interpolated_lp():
    rng = np.random.default_rng(5)
    S = MeasureSpace(rng.uniform(0.5, 2, 5))
    A0, A1 = WeightedLp(S, 1.2, rng.uniform(0.5, 2, 5)), WeightedLp(S, 7, rng.uniform(0.5, 2, 5))
    At = closed_form_lp_couple(A0, A1, 0.35)
    phi = indicator_affine(ClosedFormLp.of(A0), ClosedFormLp.of(A1), 0.35)
    target = ClosedFormLp.of(At)
    F = rng.exponential(size=(100, 5))
    np.testing.assert_allclose(phi.many(F), target.many(F), atol=1e-9)


def test_norm_from_indicator_examples():
    rng = np.random.default_rng(6)
    S = MeasureSpace(rng.uniform(0.5, 2, 5))
    x = rng.normal(size=5)
    assert norm_from_indicator(l1_indicator(S), x) == pytest.approx(WeightedLp(S, 1).norm(x), rel=1e-6)
    assert norm_from_indicator(ClosedFormLp(S2, 2), [3, 4]) == pytest.approx(5, rel=1e-3)
    phi = ClosedFormLp(S, 3, rng.uniform(0.5, 2, 5))
    assert norm_from_indicator(phi, 4 * x) == pytest.approx(4 * norm_from_indicator(phi, x), rel=1e-6)
    assert norm_from_indicator(phi, np.zeros(5)) == 0


def test_norm_from_indicator_check_rejects_non_indicator():
    S = MeasureSpace.uniform(3)
    bad = AffineIndicator([(2.0, l1_indicator(S))])
    with pytest.raises(PreconditionError):
        norm_from_indicator(bad, [1, 2, 3], check=True)


def test_axiom_checker_accepts_genuine_indicators():
    rng = np.random.default_rng(7)
    S = MeasureSpace(rng.uniform(0.5, 2, 5))
    for p in (1, 2, 5, "inf"):
        rep = check_indicator_axioms(ClosedFormLp(S, p, rng.uniform(0.5, 2, 5)))
        assert rep["ok"], rep


def test_descriptor_round_trip():
    S = MeasureSpace.uniform(3)
    phi = indicator_affine(ClosedFormLp(S, 2, [1, 2, 3]), l1_indicator(S), 0.25)
    back = indicator_from_descriptor(phi.descriptor(), S)
    f = np.array([0.2, 0.5, 1.0])
    assert back(f) == pytest.approx(phi(f))
    assert isinstance(indicator_of(WeightedLp(S, 2)), ClosedFormLp)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0, 100), min_size=3, max_size=3),
    st.lists(st.floats(0, 100), min_size=3, max_size=3),
    st.sampled_from([1.0, 1.5, 2.0, 4.0, math.inf]),
)
def test_indicator_axioms_property(fs, gs, p):
    S = MeasureSpace([0.5, 1.0, 2.0])
    phi = ClosedFormLp(S, p, [1.0, 0.5, 3.0])
    f, g = np.array(fs), np.array(gs)
    d = delta_phi(phi, f, g)
    d1 = delta_phi(l1_indicator(S), f, g)
    scale = 1 + S.mu @ (f + g)
    assert d >= -1e-9 * scale
    assert d <= d1 + 1e-9 * scale
    assert phi(3 * f) == pytest.approx(3 * phi(f), rel=1e-9, abs=1e-9)
