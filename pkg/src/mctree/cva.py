"""Unilateral CVA on an American put from labelled MC-Tree lattices.

Per tree: a backward pass values the option and labels exercise nodes, a
forward pass propagates node probabilities, and the expected exposure per
time step weights node values by those probabilities. Default is an
independent intensity model.

Two exposure conventions are offered. ``"unconditional"`` (the default)
weights every node's American value by its plain tree probability, so labels
act only through the value itself. ``"alive"`` stops propagating mass out of
exercised nodes, so exposure ends at exercise. For the deep in-the-money
test put (S0=80, K=100, T=1) the first gives a CVA near 0.345 and the second
roughly a seventh of that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mctree import rng
from mctree.pricing import PricingResult, RunConfig, draw_thetas
from mctree.tree import (
    DomainError,
    LatticeValuation,
    MarketParams,
    ScaledStep,
    american_tree_value,
    one_step_from_theta,
    put_payoff,
    scale_to_market,
)

CVA_CHUNK = 256
_NODE_BUDGET = 4_000_000


def cva_chunk_size(depth: int) -> int:
    """Trees per batch, shrinking with depth so a batch's lattices stay near a fixed node budget."""
    return max(1, min(CVA_CHUNK, _NODE_BUDGET // ((depth + 1) * (depth + 2) // 2)))
EXPOSURE_MODES = ("unconditional", "alive")


@dataclass(frozen=True)
class DefaultModel:
    intensity: float
    recovery: float

    def __post_init__(self) -> None:
        if self.intensity < 0.0:
            raise DomainError("default intensity must be non-negative")
        if not 0.0 <= self.recovery <= 1.0:
            raise DomainError("recovery rate must lie in [0, 1]")

    def survival(self, t: np.ndarray | float) -> np.ndarray | float:
        return np.exp(-self.intensity * np.asarray(t))


@dataclass(frozen=True)
class ExposureProfile:
    times: np.ndarray
    ee: np.ndarray

    def to_csv(self) -> str:
        """``t,EE`` rows; for a batch the mean exposure per time is written."""
        ee = self.ee if self.ee.ndim == 1 else self.ee.mean(axis=0)
        lines = ["t,EE"] + [f"{t!r},{e!r}" for t, e in zip(self.times.tolist(), ee.tolist())]
        return "\n".join(lines) + "\n"


def reach_probabilities(valuation: LatticeValuation, step: ScaledStep,
                        swap_orientation: bool = False, cut_at_exercise: bool = True) -> list[np.ndarray]:
    """Probability of reaching each node with the option still alive.

    Node ``(i+1, k)`` is entered by an up-move from ``(i, k-1)`` and a down-move
    from ``(i, k)``; only predecessors labelled C pass their mass on.
    ``swap_orientation`` attaches the branch probabilities the other way round,
    kept as a diagnostic. With ``cut_at_exercise=False`` labels are ignored
    and the result is the plain binomial mass at every level.
    """
    if cut_at_exercise and valuation.labels is None:
        raise DomainError("reach probabilities need an American (labelled) valuation")
    p = np.asarray(step.p_up, dtype=np.float64)[..., None]
    up, down = (1.0 - p, p) if swap_orientation else (p, 1.0 - p)
    first = valuation.node_values[0]
    probs = [np.ones(first.shape)]
    for i in range(valuation.depth):
        alive = probs[i] * valuation.labels[i] if cut_at_exercise else probs[i]
        nxt = np.zeros(first.shape[:-1] + (i + 2,))
        nxt[..., 1:] += up * alive
        nxt[..., :-1] += down * alive
        probs.append(nxt)
    return probs


def expected_exposure(valuation: LatticeValuation, probabilities: list[np.ndarray],
                      market: MarketParams, n_steps: int) -> ExposureProfile:
    """``EE(t_i) = sum_k P_i(k) V_i(k)`` for i = 1..N (undiscounted)."""
    if len(probabilities) != n_steps + 1 or valuation.depth != n_steps:
        raise DomainError("probabilities and valuation must cover the same depth")
    dt = market.dt(n_steps)
    ee = np.stack([np.sum(probabilities[i] * valuation.node_values[i], axis=-1)
                   for i in range(1, n_steps + 1)], axis=-1)
    times = dt * np.arange(1, n_steps + 1, dtype=np.float64)
    return ExposureProfile(times=times, ee=ee)


def cva_single_tree(profile: ExposureProfile, default_model: DefaultModel, rate: float) -> np.ndarray | float:
    """``(1-R) sum_i e^{-r t_i} EE(t_i) (S(t_{i-1}) - S(t_i))`` with survival ``S``."""
    t = profile.times
    t_prev = np.concatenate([[0.0], t[:-1]])
    default_increments = default_model.survival(t_prev) - default_model.survival(t)
    weights = np.exp(-rate * t) * default_increments
    out = (1.0 - default_model.recovery) * np.sum(profile.ee * weights, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _check_mode(exposure: str) -> None:
    if exposure not in EXPOSURE_MODES:
        raise DomainError(f"exposure must be one of {EXPOSURE_MODES}, got {exposure!r}")


def tree_exposure(market: MarketParams, step: ScaledStep, n_steps: int, exposure: str = "unconditional",
                  swap_orientation: bool = False) -> ExposureProfile:
    _check_mode(exposure)
    valuation = american_tree_value(step, market, n_steps, put_payoff(market.strike))
    probs = reach_probabilities(valuation, step, swap_orientation=swap_orientation,
                                cut_at_exercise=exposure == "alive")
    return expected_exposure(valuation, probs, market, n_steps)


def tree_cva(market: MarketParams, step: ScaledStep, n_steps: int, default_model: DefaultModel,
             exposure: str = "unconditional", swap_orientation: bool = False) -> np.ndarray | float:
    profile = tree_exposure(market, step, n_steps, exposure, swap_orientation)
    return cva_single_tree(profile, default_model, market.rate)


def mc_tree_cva(market: MarketParams, cfg: RunConfig, default_model: DefaultModel,
                workers: int = 1, exposure: str = "unconditional",
                swap_orientation: bool = False) -> PricingResult:
    """Mean, sd and CI of the per-tree CVA over bias-corrected MC-Tree draws."""
    _check_mode(exposure)

    def chunk(lo: int, hi: int) -> np.ndarray:
        step = one_step_from_theta(draw_thetas(cfg, lo, hi))
        scaled = scale_to_market(step, market, cfg.depth, bias_correct=True)
        return np.asarray(tree_cva(market, scaled, cfg.depth, default_model, exposure, swap_orientation))

    parts = rng.map_chunks(chunk, cfg.draws, workers=workers, chunk_size=cva_chunk_size(cfg.depth))
    return PricingResult.from_values(np.concatenate(parts), cfg.depth, "CVA")


def exposure_profile(market: MarketParams, cfg: RunConfig, workers: int = 1,
                     exposure: str = "unconditional") -> ExposureProfile:
    """Mean expected-exposure profile across MC-Tree draws, for plotting."""
    _check_mode(exposure)

    def chunk(lo: int, hi: int) -> np.ndarray:
        step = one_step_from_theta(draw_thetas(cfg, lo, hi))
        scaled = scale_to_market(step, market, cfg.depth, bias_correct=True)
        return tree_exposure(market, scaled, cfg.depth, exposure).ee

    parts = rng.map_chunks(chunk, cfg.draws, workers=workers, chunk_size=cva_chunk_size(cfg.depth))
    ee = np.concatenate(parts, axis=0)
    total = np.array([math.fsum(col) for col in ee.T.tolist()]) / ee.shape[0]
    return ExposureProfile(times=market.dt(cfg.depth) * np.arange(1, cfg.depth + 1, dtype=np.float64),
                           ee=total)
