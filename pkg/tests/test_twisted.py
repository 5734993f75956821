import math

import numpy as np
import pytest

from omega_calc.centralizer import CanonicalOmega, LogModulus, LogSymbol, _random_vector, _sample_rng, check_axioms
from omega_calc.interpolate import Couple, calderon_norm
from omega_calc.measure import MeasureSpace, PreconditionError
from omega_calc.spaces import ScaledSpace, WeightedLp
from omega_calc.twisted import (
    LinearOperator,
    TwistedElement,
    commutator_bound,
    derived_norm_upper,
    operator_norm_bound,
    operator_norm_estimate,
    quasi_triangle_constant,
    random_substochastic,
    strip_disc_derivative,
    twisted_quasinorm,
)


def test_quasinorm_examples():
    rng = np.random.default_rng(0)
    A = WeightedLp(MeasureSpace.uniform(5), 2)
    om = LogModulus(A)
    u, v = rng.normal(size=5), rng.normal(size=5)
    assert twisted_quasinorm(A, om, TwistedElement(np.zeros(5), v)) == pytest.approx(A.norm(v))
    assert twisted_quasinorm(A, om, TwistedElement(u, om.apply(u))) == pytest.approx(A.norm(u))
    assert twisted_quasinorm(A, om, TwistedElement(np.zeros(5), np.zeros(5))) == 0
    alpha = -1.5 + 2j
    e = TwistedElement(u, v)
    assert twisted_quasinorm(A, om, alpha * e) == pytest.approx(abs(alpha) * twisted_quasinorm(A, om, e), rel=1e-12)
    with pytest.raises(PreconditionError):
        TwistedElement(np.zeros(2), np.zeros(3))


def test_quasi_triangle_constant_finite_and_controlled():
    A = WeightedLp(MeasureSpace.uniform(8), 2)
    om = LogModulus(A)
    k = quasi_triangle_constant(A, om, samples=1000)
    c_hat = check_axioms(om, samples=200).c_hat
    assert 1 <= k <= 1 + c_hat + 1e-9


def test_strip_disc_derivative_at_midpoint():
    assert strip_disc_derivative(0.5) == pytest.approx(1j * math.pi / 2)


def test_derived_upper_on_extremal_family():
    rng = np.random.default_rng(1)
    S = MeasureSpace.uniform(6)
    c = Couple(WeightedLp(S, 1, rng.uniform(0.5, 2, 6)), WeightedLp(S, 4))
    om = CanonicalOmega(c.a0, c.a1, 0.4)
    u = rng.normal(size=6)
    bound = derived_norm_upper(c, 0.4, TwistedElement(u, om.apply(u))).value
    nu = calderon_norm(c, 0.4, u)[0]
    assert nu * (1 - 1e-9) <= bound <= 1.01 * nu


def test_derived_upper_on_pure_second_component():
    rng = np.random.default_rng(2)
    S = MeasureSpace.uniform(6)
    c = Couple(WeightedLp(S, 2), WeightedLp(S, 2))
    v = rng.normal(size=6)
    bound = derived_norm_upper(c, 0.5, TwistedElement(np.zeros(6), v)).value
    # the disc family through 0 with derivative v has norm (2 sin(pi t)/pi) ||v||
    assert bound == pytest.approx(2 / math.pi * c.a0.norm(v), rel=1e-2)
    assert bound >= 2 / math.pi * c.a0.norm(v) * (1 - 1e-9)


def test_derived_upper_zero_and_bad_t():
    c = Couple(WeightedLp(MeasureSpace.uniform(2), 1), WeightedLp(MeasureSpace.uniform(2), 2))
    assert derived_norm_upper(c, 0.5, TwistedElement([0, 0], [0, 0])).value == 0
    with pytest.raises(PreconditionError):
        derived_norm_upper(c, 1.0, TwistedElement([1, 0], [0, 0]))


def test_derived_upper_equivalence_band():
    rng = np.random.default_rng(3)
    kappas = []
    for n in (4, 8):
        S = MeasureSpace.uniform(n)
        c = Couple(WeightedLp(S, 1), WeightedLp(S, "inf"))
        om = CanonicalOmega(c.a0, c.a1, 0.5)
        ratios = []
        for k in range(20):
            r = _sample_rng(5, k)
            e = TwistedElement(_random_vector(r, n), _random_vector(r, n))
            ratios.append(derived_norm_upper(c, 0.5, e).value / twisted_quasinorm(om.domain, om, e))
        kappas.append(max(max(ratios), 1 / min(ratios)))
    assert all(1 <= k < 4 for k in kappas)
    assert max(kappas) <= 1.5 * min(kappas)


def test_commutator_examples():
    rng = np.random.default_rng(4)
    S = MeasureSpace.uniform(6)
    A = WeightedLp(S, 2)
    om = LogModulus(A)
    assert commutator_bound(LinearOperator.identity(6), om) == pytest.approx(0, abs=1e-12)
    b = rng.uniform(-1, 1, 6)
    rho = check_axioms(om, samples=100).rho_hat
    assert commutator_bound(LinearOperator.multiplier(b), om, samples=100) <= rho * np.max(np.abs(b)) * 1.5 + 1e-12
    assert commutator_bound(LinearOperator.multiplier(np.ones(6) * 2), LogSymbol(A, b)) == pytest.approx(0, abs=1e-12)


def test_substochastic_commutator_stable_across_n():
    vals = []
    for n in (8, 32, 128):
        rng = np.random.default_rng(np.random.SeedSequence([0, n]))
        S = MeasureSpace.uniform(n)
        T = random_substochastic(n, rng)
        om = CanonicalOmega(WeightedLp(S, 1), WeightedLp(S, "inf"), 0.5)
        vals.append(commutator_bound(T, om, samples=30))
    assert max(vals) <= 1.5 * min(vals)


def test_twisted_operator_boundedness():
    n = 8
    rng = np.random.default_rng(6)
    S = MeasureSpace.uniform(n)
    om = CanonicalOmega(WeightedLp(S, 1), WeightedLp(S, "inf"), 0.5)
    A = WeightedLp(S, 2)
    T = random_substochastic(n, rng)
    c_t = commutator_bound(T, om, A=A, samples=50)
    t_norm = operator_norm_bound(T, A)
    for k in range(50):
        r = _sample_rng(9, k)
        e = TwistedElement(_random_vector(r, n), _random_vector(r, n))
        te = TwistedElement(T(e.u), T(e.v))
        assert twisted_quasinorm(A, om, te) <= (t_norm + c_t) * twisted_quasinorm(A, om, e) * (1 + 1e-9) + 1e-12


def test_operator_norm_bounds_dominate_estimates():
    rng = np.random.default_rng(7)
    S = MeasureSpace(rng.uniform(0.5, 2, 6))
    T = LinearOperator(rng.normal(size=(6, 6)))
    for p in (1, 1.5, 2, 3, "inf"):
        A = WeightedLp(S, p, rng.uniform(0.5, 2, 6))
        assert operator_norm_estimate(T, A, samples=200) <= operator_norm_bound(T, A) * (1 + 1e-9)
        assert operator_norm_bound(T, ScaledSpace(A, 4.0)) == pytest.approx(operator_norm_bound(T, A))
    A2 = WeightedLp(MeasureSpace.uniform(6), 2)
    assert operator_norm_bound(T, A2) == pytest.approx(np.linalg.norm(T.matrix, 2))
