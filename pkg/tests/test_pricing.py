import math

import numpy as np
import pytest

from mctree.baselines import black_scholes
from mctree.pricing import (
    CSV_FIELDS,
    RunConfig,
    american_draw_values,
    european_draw_values,
    mc_tree_american,
    mc_tree_european,
    mc_tree_european_many,
    put_call_parity_report,
)
from mctree.tree import DomainError


@pytest.mark.parametrize("kwargs", [{"depth": 0}, {"draws": 0}, {"mix": 4}, {"mix": -1}, {"method": "corr"}])
def test_run_config_validation(kwargs):
    base = {"depth": 10, "draws": 10}
    with pytest.raises(DomainError):
        RunConfig(**{**base, **kwargs})


@pytest.mark.parametrize("kind", ["call", "put"])
def test_corr_is_unbiased(market, kind):
    res = mc_tree_european(market, kind, RunConfig(depth=30, draws=8192, seed=7, method="Corr"))
    assert abs(res.mean - black_scholes(market, kind)) < 4 * res.std_error


def test_bias_method_overprices_and_shrinks_with_depth(market):
    bs = black_scholes(market, "call")
    coarse = mc_tree_european(market, "call", RunConfig(depth=10, draws=4096, seed=1)).mean - bs
    fine = mc_tree_european(market, "call", RunConfig(depth=80, draws=4096, seed=1)).mean - bs
    assert coarse > fine > 0


@pytest.mark.parametrize("method", ["Bias", "Corr"])
def test_draws_reproducible_across_workers(market, method):
    cfg = RunConfig(depth=20, draws=5000, seed=3, method=method)
    results = {w: mc_tree_european(market, "call", cfg, workers=w) for w in (1, 4, 8)}
    assert results[1] == results[4] == results[8]


def test_shared_draws_match_independent_runs(market):
    cfg = RunConfig(depth=15, draws=3000, seed=2, method="Corr")
    many = mc_tree_european_many([(market, "call"), (market.replace(s0=90), "put")], cfg)
    assert many[0] == mc_tree_european(market, "call", cfg)
    assert many[1] == mc_tree_european(market.replace(s0=90), "put", cfg)


def test_put_call_parity_holds_per_tree(market):
    cfg = RunConfig(depth=25, draws=2048, seed=5)
    vals = european_draw_values([(market, "call"), (market, "put")], cfg, 0, 2048)
    forward = market.s0 - market.strike * math.exp(-market.rate * market.maturity)
    np.testing.assert_allclose(vals[0] - vals[1], forward, atol=1e-10)
    for row in put_call_parity_report(market, cfg, depths=(5, 25)):
        assert row.gap < 1e-9


def test_american_tree_values_dominate_european(market):
    cfg = RunConfig(depth=30, draws=500, seed=4)
    am = american_draw_values(market, "put", cfg, 0, 500)
    eu = european_draw_values([(market, "put")], cfg, 0, 500)[0]
    assert np.all(am >= eu - 1e-12)


def test_american_only_for_bias_puts(market):
    with pytest.raises(DomainError):
        mc_tree_american(market, "call", RunConfig(depth=10, draws=10))
    with pytest.raises(DomainError):
        mc_tree_european(market, "call", RunConfig(depth=10, draws=10, method="American-Bias"))


def test_result_row_schema(market):
    cfg = RunConfig(depth=10, draws=100, seed=1)
    res = mc_tree_european(market, "call", cfg)
    row = res.row(market, cfg)
    assert tuple(row) == CSV_FIELDS
    assert row["ci_low"] < row["mean"] < row["ci_high"]
    assert res.as_dict()["draws"] == 100
    assert res.ci_high - res.ci_low == pytest.approx(2 * 1.96 * res.std_error)
