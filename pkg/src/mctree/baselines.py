"""Reference pricers: Black-Scholes, CRR and JR lattices, plain Monte Carlo, and LSM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from mctree import rng
from mctree.tree import DomainError, MarketParams, ScaledStep, backward_induction, payoff_for

Z95 = 1.96


@dataclass(frozen=True)
class BaselineQuote:
    method: str
    price: float
    size: int
    sd: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None

    @classmethod
    def from_samples(cls, method: str, samples: np.ndarray) -> "BaselineQuote":
        mean, sd = rng.mean_sd(samples)
        half = Z95 * sd / math.sqrt(samples.size)
        return cls(method=method, price=mean, size=int(samples.size), sd=sd,
                   ci_low=mean - half, ci_high=mean + half)

    @property
    def std_error(self) -> float | None:
        return None if self.sd is None else self.sd / math.sqrt(self.size)


def black_scholes(market: MarketParams, kind: str) -> float:
    s, k, t, r, v = market.s0, market.strike, market.maturity, market.rate, market.sigma
    vt = v * math.sqrt(t)
    d1 = (math.log(s / k) + (r + 0.5 * v * v) * t) / vt
    d2 = d1 - vt
    df = math.exp(-r * t)
    if kind == "call":
        return float(s * ndtr(d1) - k * df * ndtr(d2))
    if kind == "put":
        return float(k * df * ndtr(-d2) - s * ndtr(-d1))
    raise DomainError(f"unknown option kind {kind!r}")


def _lattice(market: MarketParams, kind: str, n_steps: int, u: float, d: float, p: float,
             style: str) -> float:
    if style not in ("european", "american"):
        raise DomainError(f"style must be 'european' or 'american', got {style!r}")
    step = ScaledStep(u1=u, d1=d, p_up=p, lam=0.0, dt=market.dt(n_steps))
    val = backward_induction(step, market, n_steps, payoff_for(kind, market.strike),
                             early_exercise=style == "american", keep_lattice=False)
    return float(val.node_values[0][0])


LATTICE_VARIANTS = ("moment", "textbook")


def _check_lattice_args(n_steps: int, variant: str) -> None:
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    if variant not in LATTICE_VARIANTS:
        raise DomainError(f"variant must be one of {LATTICE_VARIANTS}, got {variant!r}")


def crr_price(market: MarketParams, kind: str, n_steps: int, style: str = "european",
              variant: str = "moment") -> float:
    """Cox-Ross-Rubinstein lattice with ``d = 1/u`` and the risk-neutral ``p``.

    ``variant="moment"`` picks ``u`` so the one-step variance of the price is
    exact: ``u = A + sqrt(A^2 - 1)`` with ``A = (e^{-r dt} + e^{(r + sigma^2) dt}) / 2``.
    ``variant="textbook"`` uses ``u = e^{sigma sqrt(dt)}``.
    """
    _check_lattice_args(n_steps, variant)
    dt = market.dt(n_steps)
    if variant == "moment":
        a = 0.5 * (math.exp(-market.rate * dt) + math.exp((market.rate + market.sigma ** 2) * dt))
        u = a + math.sqrt(a * a - 1.0)
    else:
        u = math.exp(market.sigma * math.sqrt(dt))
    d = 1.0 / u
    growth = math.exp(market.rate * dt)
    if not d < growth < u:
        raise DomainError("CRR step admits arbitrage: need d < e^{r dt} < u")
    p = (growth - d) / (u - d)
    return _lattice(market, kind, n_steps, u, d, p, style)


def jr_price(market: MarketParams, kind: str, n_steps: int, style: str = "european",
             variant: str = "moment") -> float:
    """Jarrow-Rudd equal-probability lattice.

    ``variant="moment"`` matches the first two price moments exactly,
    ``u, d = e^{r dt} (1 +- sqrt(e^{sigma^2 dt} - 1))``; ``"textbook"`` uses
    ``u, d = exp((r - sigma^2/2) dt +- sigma sqrt(dt))``.
    """
    _check_lattice_args(n_steps, variant)
    dt = market.dt(n_steps)
    if variant == "moment":
        growth = math.exp(market.rate * dt)
        spread = math.sqrt(math.expm1(market.sigma ** 2 * dt))
        if spread >= 1.0:
            raise DomainError("JR step too coarse: down factor would be non-positive")
        u, d = growth * (1.0 + spread), growth * (1.0 - spread)
    else:
        drift = (market.rate - 0.5 * market.sigma ** 2) * dt
        vol = market.sigma * math.sqrt(dt)
        u, d = math.exp(drift + vol), math.exp(drift - vol)
    return _lattice(market, kind, n_steps, u, d, 0.5, style)


def mc_gbm_european(market: MarketParams, kind: str, paths: int, seed: int,
                    workers: int = 1) -> BaselineQuote:
    """Terminal-value GBM Monte Carlo with per-path sd."""
    if paths < 2:
        raise DomainError("need at least two paths")
    payoff = payoff_for(kind, market.strike)
    drift = (market.rate - 0.5 * market.sigma ** 2) * market.maturity
    vol = market.sigma * math.sqrt(market.maturity)
    disc = math.exp(-market.rate * market.maturity)

    def chunk(lo: int, hi: int) -> np.ndarray:
        z = rng.normals(seed, rng.NORMAL, lo, hi - lo)
        return disc * payoff(market.s0 * np.exp(drift + vol * z))

    samples = np.concatenate(rng.map_chunks(chunk, paths, workers=workers))
    return BaselineQuote.from_samples("MC", samples)


def simulate_paths(market: MarketParams, paths: int, steps: int, seed: int) -> np.ndarray:
    """GBM prices on the grid ``t_1..t_steps``, shape ``(paths, steps)``.

    Path ``j`` consumes normals ``j*steps .. (j+1)*steps - 1`` of the stream.
    """
    dt = market.dt(steps)
    z = rng.normals(seed, rng.NORMAL, 0, paths * steps).reshape(paths, steps)
    increments = (market.rate - 0.5 * market.sigma ** 2) * dt + market.sigma * math.sqrt(dt) * z
    return market.s0 * np.exp(np.cumsum(increments, axis=1))


def lsm_american(market: MarketParams, kind: str, paths: int, steps: int, seed: int,
                 allow_exercise: bool = True) -> BaselineQuote:
    """Longstaff-Schwartz with the basis ``{1, S, S^2}`` fitted on in-the-money paths.

    Each path carries a single cash flow: the payoff at its first exercise
    date, or at maturity. The quote's sd is the per-path sd of the discounted
    cash flows.
    """
    if paths < 100:
        raise DomainError("LSM needs at least 100 paths")
    if steps < 2:
        raise DomainError("LSM needs at least 2 exercise dates")
    payoff = payoff_for(kind, market.strike)
    dt = market.dt(steps)
    disc = math.exp(-market.rate * dt)
    s = simulate_paths(market, paths, steps, seed)
    cash = payoff(s[:, -1])
    when = np.full(paths, steps, dtype=np.int64)
    if allow_exercise:
        for i in range(steps - 2, -1, -1):
            intrinsic = payoff(s[:, i])
            itm = intrinsic > 0.0
            if np.count_nonzero(itm) < 3:
                continue
            # cash flows discounted back to t_{i+1}
            future = cash[itm] * disc ** (when[itm] - (i + 1))
            x = s[itm, i] / market.strike
            basis = np.column_stack([np.ones_like(x), x, x * x])
            coef, *_ = np.linalg.lstsq(basis, future, rcond=None)
            exercise = intrinsic[itm] > basis @ coef
            idx = np.flatnonzero(itm)[exercise]
            cash[idx] = intrinsic[idx]
            when[idx] = i + 1
    samples = cash * disc ** when
    return BaselineQuote.from_samples("LSM", samples)
