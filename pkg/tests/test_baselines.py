import math

import numpy as np
import pytest

from mctree.baselines import (
    BaselineQuote,
    black_scholes,
    crr_price,
    jr_price,
    lsm_american,
    mc_gbm_european,
    simulate_paths,
)
from mctree.tree import DomainError, MarketParams


@pytest.mark.parametrize("s0, kind, expected", [
    (100, "call", 12.1797), (90, "call", 6.2125), (100, "put", 4.3720), (90, "put", 8.4048),
])
def test_black_scholes_reference_values(market, s0, kind, expected):
    assert round(black_scholes(market.replace(s0=s0), kind), 4) == expected


@pytest.mark.parametrize("s0, k, t, r, sigma", [
    (100, 100, 1.0, 0.01, 0.2), (120, 100, 2.0, 0.03, 0.25), (80, 95, 0.5, 0.0, 0.4),
])
def test_black_scholes_parity(s0, k, t, r, sigma):
    m = MarketParams(s0, k, t, r, sigma)
    lhs = black_scholes(m, "call") - black_scholes(m, "put")
    assert lhs == pytest.approx(s0 - k * math.exp(-r * t), abs=1e-10)


def test_black_scholes_rejects_unknown_kind(market):
    with pytest.raises(DomainError):
        black_scholes(market, "straddle")


@pytest.mark.parametrize("fn", [crr_price, jr_price])
@pytest.mark.parametrize("variant", ["moment", "textbook"])
def test_lattices_converge_to_black_scholes(market, fn, variant):
    for kind in ("call", "put"):
        assert fn(market, kind, 2000, variant=variant) == pytest.approx(black_scholes(market, kind), abs=3e-3)


@pytest.mark.parametrize("fn", [crr_price, jr_price])
def test_lattice_parity(market, fn):
    c = fn(market, "call", 77)
    p = fn(market, "put", 77)
    assert c - p == pytest.approx(market.s0 - market.strike * math.exp(-market.rate), abs=1e-9)


@pytest.mark.parametrize("fn", [crr_price, jr_price])
def test_american_call_equals_european_without_dividends(market, fn):
    assert fn(market, "call", 60, "american") == pytest.approx(fn(market, "call", 60), rel=1e-12)
    assert fn(market, "put", 60, "american") > fn(market, "put", 60)


def test_crr_detects_arbitrage():
    m = MarketParams(100.0, 100.0, 1.0, 5.0, 0.01)
    with pytest.raises(DomainError):
        crr_price(m, "call", 1, variant="textbook")


@pytest.mark.parametrize("kwargs", [{"n_steps": 0}, {"n_steps": 10, "style": "bermudan"},
                                    {"n_steps": 10, "variant": "tian"}])
def test_lattice_argument_checks(market, kwargs):
    with pytest.raises(DomainError):
        crr_price(market, "call", **kwargs)


def test_gbm_monte_carlo_is_unbiased(market):
    for kind in ("call", "put"):
        q = mc_gbm_european(market, kind, 200_000, seed=3)
        assert isinstance(q, BaselineQuote)
        assert abs(q.price - black_scholes(market, kind)) < 4 * q.std_error
        assert q.ci_low < q.price < q.ci_high


def test_gbm_martingale_with_tiny_strike(market):
    m = market.replace(strike=1e-9)
    q = mc_gbm_european(m, "call", 100_000, seed=4)
    assert abs(q.price - m.s0) < 4 * q.std_error


def test_gbm_workers_do_not_change_result(market):
    a = mc_gbm_european(market, "call", 10_000, seed=5, workers=1)
    b = mc_gbm_european(market, "call", 10_000, seed=5, workers=4)
    assert a == b


def test_simulated_paths_have_lognormal_moments(market):
    s = simulate_paths(market, 100_000, 4, seed=6)
    assert s.shape == (100_000, 4)
    growth = s[:, -1].mean() / market.s0
    assert growth == pytest.approx(math.exp(market.rate * market.maturity), abs=3e-3)


def test_lsm_without_exercise_is_european_mc(market):
    q = lsm_american(market, "put", 20_000, 20, seed=8, allow_exercise=False)
    s = simulate_paths(market, 20_000, 20, seed=8)
    expected = math.exp(-market.rate) * np.maximum(market.strike - s[:, -1], 0).mean()
    assert q.price == pytest.approx(expected, rel=1e-12)


def test_lsm_exercise_premium_is_positive(market):
    am = lsm_american(market, "put", 50_000, 50, seed=9)
    eu = lsm_american(market, "put", 50_000, 50, seed=9, allow_exercise=False)
    assert am.price > eu.price
    assert abs(am.price - crr_price(market, "put", 2000, "american")) < 4 * am.std_error + 0.02


def test_lsm_argument_checks(market):
    with pytest.raises(DomainError):
        lsm_american(market, "put", 10, 50, seed=1)
    with pytest.raises(DomainError):
        lsm_american(market, "put", 1000, 1, seed=1)
