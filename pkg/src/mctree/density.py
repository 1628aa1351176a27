"""Compound density of the depth-N tree outcome under a mixing density.

For a fixed tree parameter ``tau`` the additive terminal value ``x_{N,k}``
is monotone in ``tau``, so integrating the binomial CDF against the mixing
density and differentiating gives ``q(x) = sum_k C_k(x)`` with one term per
terminal node. Terms are evaluated in log space; the tail of ``q`` decays only
polynomially, so ``exp`` never underflows for realistic arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gammaln, logsumexp, xlogy

from mctree.mixing import MixingDensity, normalization_constant
from mctree.tree import ArrayLike, DomainError, MarketParams

GAUSSIAN_ENTROPY = 0.5 * math.log(2.0 * math.pi * math.e)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def tau_inverse(x: ArrayLike, k: int, n: int) -> ArrayLike:
    """The tree parameter at which terminal node ``k`` sits at ``x``."""
    xa = np.asarray(x, dtype=np.float64)
    if not 0 <= k <= n:
        raise DomainError(f"node index {k} outside 0..{n}")
    if k == 0:
        if not np.all(xa < 0.0):
            raise DomainError("node 0 only reaches x < 0")
        out = -xa / n
    elif k == n:
        if not np.all(xa > 0.0):
            raise DomainError("node N only reaches x > 0")
        out = n / xa
    else:
        out = _tau_k(xa, float(k), n)
    return float(out) if np.ndim(out) == 0 else out


def y_k(x: ArrayLike, k: int, n: int) -> ArrayLike:
    out = np.sqrt(np.asarray(x, dtype=np.float64) ** 2 + 4.0 * k * (n - k))
    return float(out) if np.ndim(out) == 0 else out


def _tau_k(x: np.ndarray, k: np.ndarray | float, n: int) -> np.ndarray:
    y = np.sqrt(x * x + 4.0 * k * (n - k))
    # two algebraically equal forms; pick the one without cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0.0, 2.0 * k / (x + y), (y - x) / (2.0 * (n - k)))


def _log1p_sq(t: np.ndarray) -> np.ndarray:
    """``log(1 + t^2)`` without overflow for huge ``t``."""
    big = t > 1.0
    ts = np.where(big, t, 1.0)
    return np.where(big, 2.0 * np.log(ts) + np.log1p(1.0 / (ts * ts)), np.log1p(t * t))


def _log_mixing(tau: np.ndarray, m: int, log_c: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return log_c + xlogy(m - 1, tau) - m * _log1p_sq(tau)


@lru_cache(maxsize=None)
def _log_binom(n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=np.float64)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def log_q_direct(x: ArrayLike, n: int, m: int) -> ArrayLike:
    """Natural log of the compound density, summing all node terms."""
    if n < 1:
        raise DomainError("depth must be >= 1")
    xa = np.asarray(x, dtype=np.float64)
    log_c = math.log(normalization_constant(m))
    lb = _log_binom(n)
    xe = xa[..., None]
    terms = []
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if n > 1:
            k = np.arange(1, n, dtype=np.float64)
            y = np.sqrt(xe * xe + 4.0 * k * (n - k))
            # two algebraically equal forms of tau_k; pick the one without cancellation
            tau = np.where(xe > 0.0, (2.0 * k) / (xe + y), (y - xe) / (2.0 * (n - k)))
            # C_k = binom * tau^(2k+m) / (1+tau^2)^(N+m) * c / y
            inner = (lb[1:n] + log_c + (2.0 * k + m) * np.log(tau)
                     - (n + m) * np.log1p(tau * tau) - np.log(y))
            terms.append(inner)
        # boundary x == 0 belongs to the k = 0 term
        neg = xe <= 0.0
        tau0 = np.where(neg, -xe / n, 1.0)
        c0 = -n * _log1p_sq(tau0) + _log_mixing(tau0, m, log_c) - math.log(n)
        terms.append(np.where(neg, c0, -np.inf))
        pos = xe > 0.0
        xs = np.where(pos, xe, 1.0)
        taun = n / xs
        cn = (2.0 * n * np.log(taun) - n * _log1p_sq(taun) + _log_mixing(taun, m, log_c)
              + math.log(n) - 2.0 * np.log(xs))
        terms.append(np.where(pos, cn, -np.inf))
    out = logsumexp(np.concatenate(terms, axis=-1), axis=-1)
    return float(out) if out.ndim == 0 else out


def q_direct(x: ArrayLike, n: int, m: int) -> ArrayLike:
    out = np.exp(log_q_direct(x, n, m))
    return float(out) if np.ndim(out) == 0 else out


def scaled_pdf(z: ArrayLike, n: int, m: int) -> ArrayLike:
    """Density of ``X / sqrt(N)``: zero mean, unit variance."""
    rn = math.sqrt(n)
    out = rn * np.exp(log_q_direct(np.asarray(z, dtype=np.float64) * rn, n, m))
    return float(out) if np.ndim(out) == 0 else out


def log_scaled_pdf(z: ArrayLike, n: int, m: int) -> ArrayLike:
    rn = math.sqrt(n)
    return 0.5 * math.log(n) + log_q_direct(np.asarray(z, dtype=np.float64) * rn, n, m)


def _half_line(fn, tail_start: float = 12.0) -> float:
    """``2 * int_0^inf fn`` for an even integrand, split at ``tail_start``."""
    core, _ = integrate.quad(fn, 0.0, tail_start, epsabs=1e-12, epsrel=1e-12, limit=400,
                             points=(1.0, 2.0, 3.0, 4.0, 6.0))
    tail, _ = integrate.quad(fn, tail_start, np.inf, epsabs=1e-13, epsrel=1e-10, limit=400)
    return 2.0 * (core + tail)


def density_moments(n: int, m: int) -> tuple[float, float, float]:
    """Mass, mean and second moment of ``q`` by quadrature in the scaled coordinate."""
    rn = math.sqrt(n)

    def s(z):
        return scaled_pdf(z, n, m)

    mass = _half_line(s)
    # odd integrand: integrate each half-line separately
    pos, _ = integrate.quad(lambda z: z * s(z), 0.0, np.inf, epsabs=1e-13, limit=400)
    neg, _ = integrate.quad(lambda z: z * s(z), -np.inf, 0.0, epsabs=1e-13, limit=400)
    second = _half_line(lambda z: z * z * s(z))
    return mass, (pos + neg) * rn, second * n


def density_metrics(n: int, m: int) -> tuple[float, float, float]:
    """Entropy of the scaled density and its KL divergence and L1 distance to N(0, 1)."""
    def ent(z):
        ls = log_scaled_pdf(z, n, m)
        return -math.exp(ls) * ls

    def kl(z):
        ls = log_scaled_pdf(z, n, m)
        return math.exp(ls) * (ls + _LOG_SQRT_2PI + 0.5 * z * z)

    def l1(z):
        return abs(scaled_pdf(z, n, m) - math.exp(-0.5 * z * z - _LOG_SQRT_2PI))

    return _half_line(ent), _half_line(kl), _half_line(l1)


def tree_coordinate(log_price: ArrayLike, market: MarketParams, n: int) -> ArrayLike:
    """Map a terminal log-price to the additive unit-variance tree coordinate."""
    dt = market.dt(n)
    drift = (market.rate - 0.5 * market.sigma ** 2) * market.maturity
    return (np.asarray(log_price) - math.log(market.s0) - drift) / (market.sigma * math.sqrt(dt))


def log_correction_factor(log_price: ArrayLike, market: MarketParams, n: int, m: int) -> ArrayLike:
    """Log of the Gaussian-to-compound density ratio at a terminal log-price.

    The Jacobian of the change of variables cancels between the two densities
    up to the factor ``sigma sqrt(dt)`` relative to ``sigma sqrt(T)``.
    """
    return log_correction_weight(tree_coordinate(log_price, market, n), n, m)


def log_correction_weight(xi: ArrayLike, n: int, m: int) -> ArrayLike:
    """Same ratio expressed in the tree coordinate ``xi``; independent of the market."""
    xi = np.asarray(xi, dtype=np.float64)
    z = xi / math.sqrt(n)
    # f(log S) = phi(z) / (sigma sqrt T);  q'(log S) = q(xi) / (sigma sqrt dt)
    log_f = -0.5 * z * z - _LOG_SQRT_2PI - 0.5 * math.log(n)
    return log_f - log_q_direct(xi, n, m)


def correction_factor(log_price: ArrayLike, market: MarketParams, n: int, m: int,
                      diagnostics: dict | None = None) -> ArrayLike:
    """Importance weight turning compound-density expectations into Gaussian ones.

    Weights whose compound density underflows are set to zero and counted in
    ``diagnostics["clamped"]`` when a dict is supplied.
    """
    lw = np.asarray(log_correction_factor(log_price, market, n, m))
    bad = ~np.isfinite(lw)
    w = np.where(bad, 0.0, np.exp(np.where(bad, 0.0, lw)))
    if diagnostics is not None:
        diagnostics["clamped"] = diagnostics.get("clamped", 0) + int(np.count_nonzero(bad))
    return float(w) if w.ndim == 0 else w


@dataclass(frozen=True)
class CompoundDensity:
    """``q`` at depth ``depth`` under ``mixing``; ``mode`` is 'direct' or 'rational'."""

    depth: int
    mixing: MixingDensity
    mode: str = "direct"
    _numerator: object = field(default=None, repr=False, compare=False)

    @classmethod
    def of(cls, depth: int, m: int, mode: str = "direct") -> "CompoundDensity":
        if mode not in ("direct", "rational"):
            raise DomainError(f"unknown evaluation mode {mode!r}")
        numerator = None
        if mode == "rational":
            from mctree.rational import rational_numerator
            numerator = rational_numerator(depth, m)
        return cls(depth=depth, mixing=MixingDensity.of(m), mode=mode, _numerator=numerator)

    @property
    def numerator(self):
        return self._numerator

    def __call__(self, x: ArrayLike) -> ArrayLike:
        if self.mode == "rational":
            return self._numerator.density(x)
        return q_direct(x, self.depth, self.mixing.m)
