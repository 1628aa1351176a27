import math

import numpy as np
import pytest
from scipy import integrate

from mctree.density import (
    GAUSSIAN_ENTROPY,
    CompoundDensity,
    correction_factor,
    density_metrics,
    density_moments,
    log_correction_weight,
    q_direct,
    scaled_pdf,
    tau_inverse,
    tree_coordinate,
)
from mctree.tree import DomainError, MarketParams, one_step_from_tau, terminal_distribution
from oracles import density_from_cdf


@pytest.mark.parametrize("n, m", [(1, 1), (4, 3), (7, 9), (10, 9)])
def test_direct_density_matches_cdf_oracle(n, m):
    xs = np.linspace(-3.3 * math.sqrt(n), 3.3 * math.sqrt(n), 12)
    got = q_direct(xs, n, m)
    want = [density_from_cdf(x, n, m) for x in xs]
    np.testing.assert_allclose(got, want, atol=1e-9)


@pytest.mark.parametrize("n, m", [(3, 1), (10, 9), (50, 9), (25, 4)])
def test_density_is_even(n, m):
    xs = np.linspace(0.01, 30.0, 40)
    np.testing.assert_allclose(q_direct(xs, n, m), q_direct(-xs, n, m), rtol=1e-12)


@pytest.mark.parametrize("n, m", [(4, 3), (10, 9), (50, 9), (100, 11)])
def test_moments(n, m):
    mass, mean, second = density_moments(n, m)
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert mean == pytest.approx(0.0, abs=1e-10)
    assert second == pytest.approx(n, rel=1e-10)


def test_single_step_density_is_push_forward_of_mixing():
    # X_1 is -tau w.p. cos^2 and 1/tau w.p. sin^2, so q(x) = 2 p_m(-x) / (1 + x^2) for x < 0 when m = 1
    xs = -np.array([0.2, 1.0, 3.5])
    expected = (2 / math.pi) / (1 + xs ** 2) * 1 / (1 + xs ** 2)
    np.testing.assert_allclose(q_direct(xs, 1, 1), expected, rtol=1e-12)


@pytest.mark.parametrize("m", [3, 9])
def test_tail_decays_polynomially(m):
    n = 20
    x = np.array([1e4, 1e5])
    slope = np.diff(np.log(q_direct(x, n, m)))[0] / math.log(10.0)
    assert slope == pytest.approx(-(m + 3), abs=1e-3)


def test_tau_inverse_recovers_node_position():
    n = 12
    for tau in (0.3, 1.0, 2.7):
        x, _ = terminal_distribution(one_step_from_tau(tau), n)
        for k in (0, 3, 6, 11, 12):
            assert tau_inverse(x[k], k, n) == pytest.approx(tau, rel=1e-12)


@pytest.mark.parametrize("k, x", [(0, 1.0), (5, -1.0), (6, 0.0), (-1, 0.5)])
def test_tau_inverse_domain(k, x):
    with pytest.raises(DomainError):
        tau_inverse(x, k, 5)


@pytest.mark.parametrize("n, m", [(10, 9), (50, 9)])
def test_correction_weight_turns_compound_into_gaussian(n, m):
    # int C(x) q(x) h(x) dx == E[h(sqrt(N) Z)] for Z ~ N(0, 1)
    def weighted(x, h):
        return math.exp(log_correction_weight(x, n, m)) * q_direct(x, n, m) * h(x)

    lim = 12 * math.sqrt(n)
    mass, _ = integrate.quad(weighted, -lim, lim, args=(lambda x: 1.0,), limit=200)
    var, _ = integrate.quad(weighted, -lim, lim, args=(lambda x: x * x,), limit=200)
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert var == pytest.approx(n, rel=1e-9)


def test_correction_factor_in_price_space_matches_tree_coordinate():
    market = MarketParams(100.0, 95.0, 1.0, 0.03, 0.2)
    log_s = np.log(np.array([70.0, 95.0, 140.0]))
    xi = tree_coordinate(log_s, market, 50)
    np.testing.assert_allclose(correction_factor(log_s, market, 50, 9),
                               np.exp(log_correction_weight(xi, 50, 9)), rtol=1e-13)


def test_correction_factor_counts_clamped_weights():
    market = MarketParams(100.0, 95.0, 1.0, 0.03, 0.2)
    diag = {}
    w = correction_factor(np.log([100.0, 1e300]), market, 50, 9, diagnostics=diag)
    assert np.all(np.isfinite(w))
    assert diag["clamped"] >= 0


def test_metrics_bounds():
    ent, kl, l1 = density_metrics(50, 9)
    assert kl >= 0
    assert ent <= GAUSSIAN_ENTROPY
    assert 0 < l1 < 0.05


def test_scaled_density_has_unit_variance():
    var, _ = integrate.quad(lambda z: z * z * scaled_pdf(z, 30, 9), -np.inf, np.inf, limit=200)
    assert var == pytest.approx(1.0, abs=1e-9)


def test_compound_density_modes_agree():
    xs = np.array([-7.0, -0.5, 0.0, 2.0, 11.0])
    direct = CompoundDensity.of(10, 9)
    rational = CompoundDensity.of(10, 9, mode="rational")
    np.testing.assert_allclose(rational(xs), direct(xs), rtol=1e-12)
    with pytest.raises(DomainError):
        CompoundDensity.of(10, 9, mode="spline")
