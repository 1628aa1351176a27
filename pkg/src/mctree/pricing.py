"""MC-Tree pricing: draw a tree shape, value the whole tree, average over draws."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from mctree import rng
from mctree.density import log_correction_weight
from mctree.mixing import sample_theta
from mctree.tree import (
    DomainError,
    MarketParams,
    american_tree_value,
    binomial_weights,
    node_prices,
    one_step_from_theta,
    payoff_for,
    scale_to_market,
    terminal_distribution,
)

METHODS = ("Bias", "Corr", "American-Bias")
CSV_FIELDS = ("method", "S0", "K", "T", "r", "sigma", "N", "M", "m", "seed",
              "mean", "sd", "ci_low", "ci_high")
Z95 = 1.96


@dataclass(frozen=True)
class RunConfig:
    depth: int
    draws: int
    mix: int = 9
    seed: int = 42
    method: str = "Bias"

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise DomainError("tree depth N must be >= 1")
        if self.draws < 1:
            raise DomainError("number of draws M must be >= 1")
        if self.mix < 1 or self.mix % 2 == 0:
            raise DomainError("mixing index m must be a positive odd integer")
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {self.method!r}")


@dataclass(frozen=True)
class PricingResult:
    mean: float
    sd: float
    ci_low: float
    ci_high: float
    draws: int
    depth: int
    method: str

    @classmethod
    def from_values(cls, values: np.ndarray, depth: int, method: str) -> "PricingResult":
        mean, sd = rng.mean_sd(values)
        half = Z95 * sd / math.sqrt(len(values))
        return cls(mean=mean, sd=sd, ci_low=mean - half, ci_high=mean + half,
                   draws=len(values), depth=depth, method=method)

    @property
    def std_error(self) -> float:
        return self.sd / math.sqrt(self.draws)

    def row(self, market: MarketParams, cfg: RunConfig) -> dict:
        return {
            "method": self.method, "S0": market.s0, "K": market.strike, "T": market.maturity,
            "r": market.rate, "sigma": market.sigma, "N": self.depth, "M": self.draws,
            "m": cfg.mix, "seed": cfg.seed, "mean": self.mean, "sd": self.sd,
            "ci_low": self.ci_low, "ci_high": self.ci_high,
        }

    def as_dict(self) -> dict:
        return asdict(self)


def draw_thetas(cfg: RunConfig, lo: int, hi: int) -> np.ndarray:
    """Mixing angles for draws ``lo .. hi-1``; draw i depends only on (seed, i)."""
    return sample_theta(cfg.mix, rng.uniforms(cfg.seed, rng.THETA, lo, hi - lo))


Instrument = tuple[MarketParams, str]


def european_draw_values(instruments: Sequence[Instrument], cfg: RunConfig, lo: int, hi: int) -> np.ndarray:
    """Per-tree discounted values for draws ``lo .. hi-1``, shape ``(len(instruments), hi - lo)``.

    All instruments are valued on the same trees. The density-correction
    weights live in the tree coordinate, so they are computed once per tree.
    """
    n = cfg.depth
    step = one_step_from_theta(draw_thetas(cfg, lo, hi))
    corr = cfg.method == "Corr"
    g = binomial_weights(step.p_up, n)
    if corr:
        x, _ = terminal_distribution(step, n)
        lw = log_correction_weight(x, n, cfg.mix)
        g = g * np.where(np.isfinite(lw), np.exp(np.minimum(lw, 700.0)), 0.0)
    out = np.empty((len(instruments), hi - lo))
    for j, (market, kind) in enumerate(instruments):
        scaled = scale_to_market(step, market, n, bias_correct=not corr)
        prices = node_prices(market.s0, scaled, n)
        disc = math.exp(-market.rate * market.maturity)
        out[j] = disc * np.sum(g * payoff_for(kind, market.strike)(prices), axis=-1)
    return out


def _collect(fn: Callable[[int, int], np.ndarray], total: int, workers: int) -> np.ndarray:
    parts = rng.map_chunks(fn, total, workers=workers)
    return np.concatenate(parts, axis=-1)


def mc_tree_european_many(instruments: Sequence[Instrument], cfg: RunConfig,
                          workers: int = 1) -> list[PricingResult]:
    """Several European instruments priced on common draws."""
    if cfg.method not in ("Bias", "Corr"):
        raise DomainError("European pricing supports the 'Bias' and 'Corr' methods")
    for market, kind in instruments:
        payoff_for(kind, market.strike)
    values = _collect(lambda lo, hi: european_draw_values(instruments, cfg, lo, hi), cfg.draws, workers)
    return [PricingResult.from_values(v, cfg.depth, cfg.method) for v in values]


def mc_tree_european(market: MarketParams, kind: str, cfg: RunConfig,
                     workers: int = 1) -> PricingResult:
    """European option by MC-Tree with bias correction ('Bias') or the density correction ('Corr')."""
    return mc_tree_european_many([(market, kind)], cfg, workers)[0]


def american_draw_values(market: MarketParams, kind: str, cfg: RunConfig, lo: int, hi: int) -> np.ndarray:
    step = one_step_from_theta(draw_thetas(cfg, lo, hi))
    scaled = scale_to_market(step, market, cfg.depth, bias_correct=True)
    lattice = american_tree_value(scaled, market, cfg.depth, payoff_for(kind, market.strike),
                                  keep_lattice=False)
    return np.asarray(lattice.node_values[0][..., 0])


def mc_tree_american(market: MarketParams, kind: str, cfg: RunConfig,
                     workers: int = 1) -> PricingResult:
    """American option by MC-Tree with bias-corrected trees.

    The density correction does not carry over to early exercise, so only the
    bias-corrected variant exists here.
    """
    if kind != "put":
        raise DomainError("American MC-Tree pricing is implemented for puts")
    values = _collect(lambda lo, hi: american_draw_values(market, kind, cfg, lo, hi),
                      cfg.draws, workers)
    return PricingResult.from_values(values, cfg.depth, "American-Bias")


@dataclass(frozen=True)
class ParityRow:
    depth: int
    call: float
    put: float
    call_minus_put: float
    forward_value: float
    gap_se: float

    @property
    def gap(self) -> float:
        return abs(self.call_minus_put - self.forward_value)


def put_call_parity_report(market: MarketParams, cfg: RunConfig,
                           depths: tuple[int, ...] = (10, 25, 50, 100),
                           workers: int = 1) -> list[ParityRow]:
    """Call and put on shared draws at each depth, against ``S0 - K e^{-rT}``."""
    if cfg.method != "Bias":
        raise DomainError("the parity report uses the bias-corrected method")
    rows = []
    forward = market.s0 - market.strike * math.exp(-market.rate * market.maturity)
    for n in depths:
        c = RunConfig(depth=n, draws=cfg.draws, mix=cfg.mix, seed=cfg.seed, method="Bias")
        vals = _collect(lambda lo, hi: european_draw_values([(market, "call"), (market, "put")], c, lo, hi),
                        c.draws, workers)
        call_mean, _ = rng.mean_sd(vals[0])
        put_mean, _ = rng.mean_sd(vals[1])
        diff_mean, diff_sd = rng.mean_sd(vals[0] - vals[1])
        rows.append(ParityRow(depth=n, call=call_mean, put=put_mean, call_minus_put=diff_mean,
                              forward_value=forward, gap_se=diff_sd / math.sqrt(c.draws)))
    return rows
