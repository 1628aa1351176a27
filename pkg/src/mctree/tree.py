"""One-step tree parametrization, market scaling and lattice valuation.

All functions accept scalars or numpy arrays for the tree parameter, so a batch
of Monte Carlo trees is valued in one vectorized sweep. Batch dimensions lead;
the node index is always the last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

ArrayLike = float | np.ndarray
Payoff = Callable[[np.ndarray], np.ndarray]


class DomainError(ValueError):
    """A numeric input lies outside the domain of the operation."""


@dataclass(frozen=True)
class OneStepTree:
    """Zero-mean, unit-variance additive step: ``d`` w.p. ``p_down``, ``u`` w.p. ``p_up``."""

    theta: ArrayLike
    tau: ArrayLike
    p_down: ArrayLike
    p_up: ArrayLike
    u: ArrayLike
    d: ArrayLike


@dataclass(frozen=True)
class MarketParams:
    s0: float
    strike: float
    maturity: float
    rate: float
    sigma: float

    def __post_init__(self) -> None:
        for name in ("s0", "strike", "maturity", "sigma"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")

    def dt(self, n_steps: int) -> float:
        return self.maturity / n_steps

    def replace(self, **changes: float) -> "MarketParams":
        fields = dict(s0=self.s0, strike=self.strike, maturity=self.maturity,
                      rate=self.rate, sigma=self.sigma)
        fields.update(changes)
        return MarketParams(**fields)


@dataclass(frozen=True)
class ScaledStep:
    """Multiplicative step on the asset price; ``lam`` is the bias-correction drift (0 if off)."""

    u1: ArrayLike
    d1: ArrayLike
    p_up: ArrayLike
    lam: ArrayLike
    dt: float


@dataclass(frozen=True)
class LatticeValuation:
    """Backward-induction result.

    ``node_values[i]`` has shape ``batch + (i + 1,)`` indexed by the number of
    up-moves. ``labels[i]`` is True for continuation (C) and False where the
    holder exercises (N); it is ``None`` for European valuation.
    """

    depth: int
    node_values: list[np.ndarray]
    labels: list[np.ndarray] | None

    @property
    def root(self) -> ArrayLike:
        v = self.node_values[0][..., 0]
        return float(v) if np.ndim(v) == 0 else v


def call_payoff(strike: float) -> Payoff:
    return lambda s: np.maximum(s - strike, 0.0)


def put_payoff(strike: float) -> Payoff:
    return lambda s: np.maximum(strike - s, 0.0)


def payoff_for(kind: str, strike: float) -> Payoff:
    if kind == "call":
        return call_payoff(strike)
    if kind == "put":
        return put_payoff(strike)
    raise DomainError(f"unknown option kind {kind!r}")


def one_step_from_theta(theta: ArrayLike) -> OneStepTree:
    th = np.asarray(theta, dtype=np.float64)
    if not np.all((th > 0.0) & (th < math.pi / 2)):
        raise DomainError("theta must lie in (0, pi/2)")
    c, s = np.cos(th), np.sin(th)
    return OneStepTree(theta=_out(th), tau=_out(np.tan(th)), p_down=_out(c * c), p_up=_out(s * s),
                       u=_out(c / s), d=_out(-s / c))


def one_step_from_tau(tau: ArrayLike) -> OneStepTree:
    t = np.asarray(tau, dtype=np.float64)
    if not np.all((t > 0.0) & np.isfinite(t)):
        raise DomainError("tau must be positive and finite")
    t2 = t * t
    return OneStepTree(theta=_out(np.arctan(t)), tau=_out(t), p_down=_out(1.0 / (1.0 + t2)),
                       p_up=_out(t2 / (1.0 + t2)), u=_out(1.0 / t), d=_out(-t))


def bias_lambda(p_up: ArrayLike, u1: ArrayLike, d1: ArrayLike, dt: float, r: float) -> ArrayLike:
    """Drift shift making ``p*u1*exp(-lam*dt) + (1-p)*d1*exp(-lam*dt) == exp(r*dt)``."""
    growth = np.asarray(p_up) * u1 + (1.0 - np.asarray(p_up)) * d1
    if not np.all(growth > 0.0):
        raise DomainError("expected one-step growth must be positive")
    return _out(np.log(growth) / dt - r)


def scale_to_market(step: OneStepTree, market: MarketParams, n_steps: int,
                    bias_correct: bool = True) -> ScaledStep:
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    dt = market.dt(n_steps)
    vol = market.sigma * math.sqrt(dt)
    drift = (market.rate - 0.5 * market.sigma ** 2) * dt
    u1 = np.exp(np.asarray(step.u) * vol + drift)
    d1 = np.exp(np.asarray(step.d) * vol + drift)
    if bias_correct:
        lam = np.asarray(bias_lambda(step.p_up, u1, d1, dt, market.rate))
        shrink = np.exp(-lam * dt)
        u1, d1 = u1 * shrink, d1 * shrink
    else:
        lam = np.zeros_like(u1)
    return ScaledStep(u1=_out(u1), d1=_out(d1), p_up=step.p_up, lam=_out(lam), dt=dt)


def binomial_weights(p_up: ArrayLike, n_steps: int) -> np.ndarray:
    """``C(N,k) p^k (1-p)^(N-k)`` for k = 0..N, last axis over k."""
    p = np.asarray(p_up, dtype=np.float64)[..., None]
    k = np.arange(n_steps + 1, dtype=np.float64)
    log_binom = gammaln(n_steps + 1.0) - gammaln(k + 1.0) - gammaln(n_steps - k + 1.0)
    return np.exp(log_binom + k * np.log(p) + (n_steps - k) * np.log1p(-p))


def terminal_distribution(step: OneStepTree, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Terminal additive node values ``x_{N,k}`` and their probabilities ``g_k``."""
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    tau = np.asarray(step.tau, dtype=np.float64)[..., None]
    k = np.arange(n_steps + 1, dtype=np.float64)
    x = -(n_steps - k) * tau + k / tau
    p_up = np.asarray(step.p_up, dtype=np.float64)
    return x, binomial_weights(p_up, n_steps)


def node_prices(s0: float, step: ScaledStep, level: int) -> np.ndarray:
    """``S0 * u1^k * d1^(level-k)`` for k = 0..level."""
    k = np.arange(level + 1, dtype=np.float64)
    u1 = np.asarray(step.u1, dtype=np.float64)[..., None]
    d1 = np.asarray(step.d1, dtype=np.float64)[..., None]
    return s0 * u1 ** k * d1 ** (level - k)


def european_tree_value(step: ScaledStep, market: MarketParams, n_steps: int,
                        payoff: Payoff) -> ArrayLike:
    """Discounted terminal expectation ``e^{-rT} sum_k g_k payoff(S_k)``."""
    g = binomial_weights(step.p_up, n_steps)
    values = payoff(node_prices(market.s0, step, n_steps))
    return _out(math.exp(-market.rate * market.maturity) * np.sum(g * values, axis=-1))


def backward_induction(step: ScaledStep, market: MarketParams, n_steps: int, payoff: Payoff,
                       early_exercise: bool, keep_lattice: bool = True) -> LatticeValuation:
    """Stepwise rollback with per-step discount ``e^{-r dt}``.

    With ``early_exercise`` the value at each node is the max of intrinsic and
    continuation, and a node is labelled N only when intrinsic strictly exceeds
    continuation. Without ``keep_lattice`` only the root level is retained.
    """
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    disc = math.exp(-market.rate * step.dt)
    p = np.asarray(step.p_up, dtype=np.float64)[..., None]
    q = 1.0 - p
    v = payoff(node_prices(market.s0, step, n_steps))
    values: list[np.ndarray] = [v]
    labels: list[np.ndarray] = [np.ones(v.shape, dtype=bool)]
    for i in range(n_steps - 1, -1, -1):
        cont = disc * (p * v[..., 1:] + q * v[..., :-1])
        if early_exercise:
            intrinsic = payoff(node_prices(market.s0, step, i))
            go = intrinsic > cont
            v = np.where(go, intrinsic, cont)
            label = ~go
        else:
            v = cont
            label = np.ones(v.shape, dtype=bool)
        if keep_lattice:
            values.append(v)
            labels.append(label)
        else:
            values[0], labels[0] = v, label
    if keep_lattice:
        values.reverse()
        labels.reverse()
    return LatticeValuation(depth=n_steps if keep_lattice else 0, node_values=values,
                            labels=labels if early_exercise else None)


def american_tree_value(step: ScaledStep, market: MarketParams, n_steps: int, payoff: Payoff,
                        keep_lattice: bool = True) -> LatticeValuation:
    return backward_induction(step, market, n_steps, payoff, early_exercise=True,
                              keep_lattice=keep_lattice)


def _out(a: np.ndarray) -> ArrayLike:
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a
