"""Mixing densities ``p_m(tau) = c_m tau^(m-1) / (1 + tau^2)^m`` for the tree parameter.

In the angle coordinate ``theta = arctan(tau)`` the density is
``c_m (cos(theta) sin(theta))^(m-1)`` on ``(0, pi/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import betaln

from mctree.tree import ArrayLike, DomainError

HALF_PI = math.pi / 2
BISECTION_TOL = 1e-12


@lru_cache(maxsize=None)
def normalization_constant(m: int) -> float:
    """``1 / int_0^inf tau^(m-1)/(1+tau^2)^m dtau`` by adaptive Gauss-Kronrod quadrature.

    The integral is taken in the angle coordinate where the integrand is a
    bounded trigonometric polynomial on a finite interval.
    """
    _check_m(m)
    value, _ = integrate.quad(lambda t: (math.cos(t) * math.sin(t)) ** (m - 1), 0.0, HALF_PI,
                              epsabs=0.0, epsrel=1e-13, limit=200)
    return 1.0 / value


def normalization_constant_beta(m: int) -> float:
    """Closed form ``2 / B(m/2, m/2)`` of the same constant."""
    _check_m(m)
    return 2.0 * math.exp(-betaln(m / 2.0, m / 2.0))


@dataclass(frozen=True)
class MixingDensity:
    m: int
    c_m: float

    @classmethod
    def of(cls, m: int) -> "MixingDensity":
        return cls(m=m, c_m=normalization_constant(m))

    def pdf(self, point: ArrayLike, coordinate: str = "theta") -> ArrayLike:
        return pdf(self.m, point, coordinate)

    def cdf(self, theta: ArrayLike) -> ArrayLike:
        return cdf_theta(self.m, theta)

    def sample(self, draws: ArrayLike) -> ArrayLike:
        return sample_theta(self.m, draws)


def pdf(m: int, point: ArrayLike, coordinate: str = "theta") -> ArrayLike:
    """Mixing density in the ``tau`` or ``theta`` coordinate; zero off the support."""
    c = normalization_constant(m)
    x = np.asarray(point, dtype=np.float64)
    if coordinate == "theta":
        inside = (x > 0.0) & (x < HALF_PI)
        xs = np.where(inside, x, 1.0)
        out = c * (np.cos(xs) * np.sin(xs)) ** (m - 1)
    elif coordinate == "tau":
        inside = (x > 0.0) & np.isfinite(x)
        xs = np.where(inside, x, 1.0)
        out = c * np.exp((m - 1) * np.log(xs) - m * np.log1p(xs * xs))
    else:
        raise DomainError(f"unknown coordinate {coordinate!r}")
    out = np.where(inside, out, 0.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _primitive_terms(m: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Frequencies, amplitudes and linear-term weight of the trigonometric primitive.

    ``(cos t sin t)^(m-1)`` expands into ``exp(i (4s - 2(m-1)) t)`` modes;
    integrating term by term gives sines (odd m) or cosines (even m) plus a
    linear term from the zero-frequency mode, which only exists for odd m.
    """
    n = m - 1
    freqs, amps = [], []
    linear = 0.0
    for s in range(n + 1):
        coef = math.comb(n, s) * (-1) ** (n - s)
        if 2 * s == n:
            linear = float(math.comb(n, n // 2))
            continue
        freqs.append(4 * s - 2 * n)
        amps.append(coef / (4 * s - 2 * n))
    return np.array(freqs, dtype=np.float64), np.array(amps, dtype=np.float64), linear


def _primitive(m: int, theta: np.ndarray) -> np.ndarray:
    freqs, amps, linear = _primitive_terms(m)
    # sign convention: (-1)^((m-1)/2) for odd m, (-1)^(m/2) for even m; any
    # overall constant is removed by the normalization in cdf_theta.
    t = theta[..., None] * freqs
    if m % 2 == 1:
        sign = (-1) ** ((m - 1) // 2)
        return sign * np.sum(amps * np.sin(t), axis=-1) + linear * theta
    sign = (-1) ** (m // 2)
    return sign * np.sum(amps * np.cos(t), axis=-1)


def cdf_theta(m: int, theta: ArrayLike) -> ArrayLike:
    """Closed-form CDF of the mixing angle, pinned to F(0)=0 and F(pi/2)=1."""
    _check_m(m)
    th = np.clip(np.asarray(theta, dtype=np.float64), 0.0, HALF_PI)
    lo = _primitive(m, np.zeros(1))[0]
    hi = _primitive(m, np.full(1, HALF_PI))[0]
    out = (_primitive(m, th) - lo) / (hi - lo)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def sample_theta(m: int, uniform_draw: ArrayLike) -> ArrayLike:
    """Invert :func:`cdf_theta` by bisection on ``(0, pi/2)``."""
    u = np.asarray(uniform_draw, dtype=np.float64)
    if not np.all((u > 0.0) & (u < 1.0)):
        raise DomainError("uniform draws must lie strictly inside (0, 1)")
    lo = np.zeros_like(u)
    hi = np.full_like(u, HALF_PI)
    iterations = math.ceil(math.log2(HALF_PI / BISECTION_TOL))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = cdf_theta(m, mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    th = 0.5 * (lo + hi)
    # keep the angle strictly inside the support
    th = np.clip(th, np.finfo(float).tiny, np.nextafter(HALF_PI, 0.0))
    return float(th) if th.ndim == 0 else th


def _check_m(m: int) -> None:
    if int(m) != m or m < 1:
        raise DomainError(f"mixing index must be a positive integer, got {m!r}")
