import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omega_calc.circle import (
    CSV_COLUMNS,
    CircleGrid,
    SzegoProjection,
    adversarial_raw_ratio,
    commutator_experiment,
    commutator_ratio,
    max_ratio_by_n,
    omega1,
    omega2,
    omega3,
    random_trig_poly,
    rows_to_csv,
)
from omega_calc.measure import PreconditionError


def test_grid_avoids_one_and_validates():
    g = CircleGrid(64)
    assert np.min(np.abs(g.nodes - 1)) > 0
    assert g.weight * g.N == pytest.approx(2 * math.pi)
    for bad in (0, 1, 100):
        with pytest.raises(PreconditionError):
            CircleGrid(bad)


def test_projection_examples():
    g = CircleGrid(64)
    P = SzegoProjection(g)
    th = g.theta
    np.testing.assert_allclose(P(np.exp(1j * th)), np.exp(1j * th), atol=1e-12)
    np.testing.assert_allclose(P(np.exp(-1j * th)), 0, atol=1e-12)
    np.testing.assert_allclose(P(np.cos(th)), 0.5 * np.exp(1j * th), atol=1e-12)
    with pytest.raises(PreconditionError):
        P(np.ones(32))


def test_projection_contraction_and_idempotence_off_nyquist():
    g = CircleGrid(128)
    P = SzegoProjection(g)
    rng = np.random.default_rng(0)
    for _ in range(20):
        f = rng.normal(size=128) + 1j * rng.normal(size=128)
        assert g.norm(P(f)) <= g.norm(f) + 1e-10
        # the halved Nyquist bin is the only obstruction to P^2 = P
        h = random_trig_poly(g, rng)
        np.testing.assert_allclose(P(P(h)), P(h), atol=1e-12)


def test_omega_examples():
    g = CircleGrid(64)
    # constant modulus: |f| / ||f||_2 = 1 / sqrt(2 pi) at every node
    f = 3.0 * np.exp(1j * g.theta)
    np.testing.assert_allclose(omega2(f, g), -0.5 * math.log(2 * math.pi) * f, atol=1e-12)
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=64), rng.normal(size=64)
    np.testing.assert_allclose(omega1(a + b, g), omega1(a, g) + omega1(b, g), atol=1e-12)
    two = np.where(np.arange(64) < 32, 1.0, 2.0)
    out = omega3(two, g)
    np.testing.assert_allclose(out[:32], math.log(math.pi), atol=1e-12)
    np.testing.assert_allclose(out[32:], 0, atol=1e-12)


def test_omega2_homogeneity_exact():
    g = CircleGrid(32)
    rng = np.random.default_rng(2)
    f = rng.normal(size=32) + 1j * rng.normal(size=32)
    for al in (0.01, -3.0, 2 - 5j):
        np.testing.assert_allclose(omega2(al * f, g), al * omega2(f, g), atol=1e-12)


def test_trig_poly_band_limited_unit_norm():
    g = CircleGrid(256)
    f = random_trig_poly(g, np.random.default_rng(3))
    assert g.norm(f) == pytest.approx(1.0)
    d = 8
    f = random_trig_poly(g, np.random.default_rng(4), degree=d)
    # compare with the direct trigonometric sum
    coef = np.fft.fft(f * np.exp(-1j * np.pi * 0)) / g.N
    ks = np.fft.fftfreq(g.N, 1 / g.N)
    recon = sum(c * np.exp(1j * k * g.theta) for c, k in zip(coef * np.exp(-1j * np.pi * ks / g.N), ks) if abs(c) > 1e-14)
    np.testing.assert_allclose(recon, f, atol=1e-10)
    assert np.all(np.abs(coef[np.abs(ks) > d]) < 1e-12)


def test_bounded_multiplier_commutator_crude_bound():
    g = CircleGrid(256)
    rng = np.random.default_rng(5)
    mult = rng.uniform(-1, 1, 256)

    def om(f, grid):
        return f * mult

    for _ in range(5):
        f = random_trig_poly(g, rng)
        assert commutator_ratio(om, f, g) <= 2 * np.max(np.abs(mult)) + 1e-12


def test_commutator_experiment_rows_and_csv():
    rows = commutator_experiment(2, [64, 128], trials=3, seed=4)
    assert len(rows) == 6
    tops = max_ratio_by_n(rows)
    for r in rows:
        assert r["max_ratio"] == tops[r["N"]]
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert rows_to_csv(commutator_experiment(2, [64, 128], trials=3, seed=4)) == text
    # rows for one N do not depend on the other entries of the sweep
    assert commutator_experiment(2, [128], trials=3, seed=4) == rows[3:]
    with pytest.raises(PreconditionError):
        commutator_experiment(4, [64], trials=1)


def test_commutator_ratios_do_not_grow():
    for which in (1, 2, 3):
        top = max_ratio_by_n(commutator_experiment(which, [256, 2048], trials=10, seed=0))
        assert top[2048] <= 1.25 * top[256]


def test_raw_omega1_ratio_grows():
    vals = [adversarial_raw_ratio(CircleGrid(n)) for n in (256, 1024, 4096)]
    assert vals[0] < vals[1] < vals[2]


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 9), st.integers(0, 2**32 - 1))
def test_projection_is_a_contraction_property(k, seed):
    g = CircleGrid(2**k)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=g.N) + 1j * rng.normal(size=g.N)
    assert g.norm(SzegoProjection(g)(f)) <= g.norm(f) + 1e-10
