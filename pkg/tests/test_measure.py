import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omega_calc.measure import (
    L0Metric,
    MeasureSpace,
    MVec,
    PreconditionError,
    lp_norm,
    measure_of_superlevel,
    superlevel_measures,
    xlogx,
)


def test_lp_norm_examples():
    assert lp_norm([3, 4], 2) == pytest.approx(5.0)
    assert lp_norm([1, 1], 1, w=[2, 3]) == pytest.approx(5.0)
    assert lp_norm([1, -2j], math.inf) == pytest.approx(2.0)


def test_lp_norm_weighted_sup_uses_weights():
    assert lp_norm([1, 1], math.inf, w=[1, 3]) == pytest.approx(3.0)


def test_lp_norm_large_p_does_not_overflow():
    assert lp_norm([1e200, 1e200], 400) == pytest.approx(1e200 * 2 ** (1 / 400))


def test_lp_norm_rejects_bad_input():
    with pytest.raises(PreconditionError):
        lp_norm([1, 2], 2, w=[1, 0])
    with pytest.raises(PreconditionError):
        lp_norm([1, 2], 2, w=[1, 1, 1])
    with pytest.raises(PreconditionError):
        lp_norm([1, 2], 0.5)


def test_superlevel_examples():
    assert measure_of_superlevel([1, 2, 3], 1.5) == 2
    assert measure_of_superlevel([0, 0], 0) == 0
    assert measure_of_superlevel([2, 2, 5], 2, mu=[0.5, 0.5, 1]) == 1


def test_superlevel_measures_ties_share_value():
    m = superlevel_measures([1, 2, 2, 3], mu=[1, 1, 1, 1])
    assert list(m) == [3, 1, 1, 0]


def test_measure_space_validation():
    with pytest.raises(PreconditionError):
        MeasureSpace([1.0, 0.0])
    with pytest.raises(PreconditionError):
        MeasureSpace([])
    S = MeasureSpace([1.0, 2.0])
    assert S.n == 2 and S.total_mass == 3.0


def test_json_round_trips():
    S = MeasureSpace([0.5, 1.5, 2.0])
    assert MeasureSpace.from_json(S.to_json()) == S
    x = MVec(S, [1 + 2j, -3, 0.25j])
    assert MVec.from_json(S, x.to_json()) == x
    assert S.to_json() == '{"mu": [0.5, 1.5, 2.0]}'


def test_mvec_arithmetic_keeps_space():
    S = MeasureSpace.uniform(3)
    x = S.vec([1, 2, 3])
    y = S.vec([1j, 0, -1])
    for z in (x + y, x - y, x * y, 2 * x, -x, abs(y)):
        assert z.space is S
    np.testing.assert_allclose((x * y).values, [1j, 0, -3])
    with pytest.raises(PreconditionError):
        x + MeasureSpace.uniform(2).vec([1, 2])


def test_xlogx_zero_convention():
    np.testing.assert_allclose(xlogx(np.array([0.0, 1.0, math.e])), [0.0, 0.0, math.e])


def test_l0_metric_triangle_inequality():
    rng = np.random.default_rng(0)
    S = MeasureSpace(rng.uniform(0.1, 2, 6))
    d = L0Metric(S)
    for _ in range(1000):
        x, y, z = (rng.normal(size=6) * 2 for _ in range(3))
        assert d(x, z) <= d(x, y) + d(y, z) + 1e-12
    assert d(x, x) == 0
    assert d(x, x + 1e-3) > 0


vectors = st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8)
ps = st.sampled_from([1.0, 1.5, 2.0, 3.0, 7.0, math.inf])


@settings(max_examples=100, deadline=None)
@given(vectors, ps, st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_lp_norm_absolutely_homogeneous(xs, p, alpha):
    x = np.array(xs)
    lhs = lp_norm(alpha * x, p)
    rhs = abs(alpha) * lp_norm(x, p)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(vectors, ps, st.data())
def test_lp_norm_is_a_lattice_norm(xs, p, data):
    x = np.abs(np.array(xs))
    bump = np.array(data.draw(st.lists(st.floats(0, 10), min_size=x.size, max_size=x.size)))
    assert lp_norm(x, p) <= lp_norm(x + bump, p) * (1 + 1e-12)
