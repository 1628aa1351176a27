"""Exact rational numerator of the compound density for odd mixing index.

For odd ``m`` the compound density is ``c_m A(x) / (x^2 + N^2)^(N+m)`` with
``A`` an even polynomial of degree at most ``2(N+m-1)`` and rational
coefficients. Each paired node term ``C_k + C_{N-k}`` contributes an even
polynomial that is recovered by interpolation at points where both ``x`` and
``y_k = sqrt(x^2 + 4k(N-k))`` are rational: pick a rational ``z`` and set
``x = 2k(N-k)/z - z/2``, ``y_k = x + z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from mctree.mixing import normalization_constant
from mctree.tree import ArrayLike, DomainError

MAX_EXACT_SIZE = 120


@dataclass(frozen=True)
class RationalNumerator:
    """``A(x) = sum_j a_{2j} x^{2j}``; ``even_coefficients[j]`` is ``a_{2j}``."""

    depth: int
    m: int
    even_coefficients: tuple[Fraction, ...]

    @property
    def coefficients(self) -> list[Fraction]:
        """All coefficients ``a_0 .. a_{2(N+m-1)}`` including the zero odd ones."""
        out = []
        for j, a in enumerate(self.even_coefficients):
            out.append(a)
            if j < len(self.even_coefficients) - 1:
                out.append(Fraction(0))
        return out

    @property
    def degree(self) -> int:
        for j in range(len(self.even_coefficients) - 1, -1, -1):
            if self.even_coefficients[j] != 0:
                return 2 * j
        return 0

    def numerator_at(self, x: Fraction | int) -> Fraction:
        w = Fraction(x) ** 2
        acc = Fraction(0)
        for a in reversed(self.even_coefficients):
            acc = acc * w + a
        return acc

    def density_exact(self, x: Fraction | int) -> Fraction:
        """``A(x) / (x^2+N^2)^(N+m)``, i.e. the density divided by ``c_m``."""
        x = Fraction(x)
        return self.numerator_at(x) / (x * x + self.depth ** 2) ** (self.depth + self.m)

    def density(self, x: ArrayLike) -> ArrayLike:
        """Compound density at float arguments, evaluated exactly then rounded."""
        c = normalization_constant(self.m)
        xa = np.asarray(x, dtype=np.float64)
        flat = [c * float(self.density_exact(Fraction(float(v)))) for v in xa.ravel()]
        out = np.array(flat).reshape(xa.shape)
        return float(out) if out.ndim == 0 else out

    def horner(self, x: ArrayLike) -> ArrayLike:
        """Float evaluation of the density from coefficients rescaled by ``N^2``.

        With ``x = N t`` the density is ``c_m N^-(2N+2m) sum_j b_j t^(2j) / (1+t^2)^(N+m)``
        where ``b_j = a_{2j} N^(2j)``; the ``b_j`` are moderate in size.
        """
        n, m = self.depth, self.m
        scale = Fraction(n * n)
        b = [float(a * scale ** j / Fraction(n) ** (2 * n + 2 * m))
             for j, a in enumerate(self.even_coefficients)]
        t = np.asarray(x, dtype=np.float64) / n
        t2 = t * t
        acc = np.zeros_like(t2)
        for bj in reversed(b):
            acc = acc * t2 + bj
        out = normalization_constant(m) * acc / (1.0 + t2) ** (n + m)
        return float(out) if np.ndim(out) == 0 else out

    def to_text(self) -> str:
        lines = [f"{self.depth} {self.m}"]
        lines += [f"{a.numerator}/{a.denominator}" for a in self.even_coefficients]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RationalNumerator":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        n, m = (int(v) for v in lines[0].split())
        coefs = tuple(Fraction(ln) for ln in lines[1:])
        if len(coefs) != n + m:
            raise ValueError(f"expected {n + m} coefficients, found {len(coefs)}")
        return cls(depth=n, m=m, even_coefficients=coefs)


def paired_term_numerator(x: Fraction, y: Fraction, k: int, n: int, m: int) -> Fraction:
    """``N~(x, y_k) / d_k``: the numerator of ``(C_k + C_{N-k}) / c_m`` over ``(x^2+N^2)^(N+m)``."""
    a = 4 * (n - k) ** 2
    e = n + m
    f = 2 * k + m
    num = (a + (y - x) ** 2) ** e * (x + y) ** f + (a + (x + y) ** 2) ** e * (y - x) ** f
    d_k = Fraction(2 ** (2 * n + 2 * k + 3 * m) * (n - k) ** (2 * k + m), math.comb(n, k))
    return num / y / d_k


def paired_term_direct(x: Fraction, y: Fraction, k: int, n: int, m: int) -> Fraction:
    """``(C_k + C_{N-k})(x) / c_m`` straight from the node-term definition, in exact arithmetic."""
    tau_k = (y - x) / (2 * (n - k))
    tau_nk = (y - x) / (2 * k)

    def term(j: int, tau: Fraction) -> Fraction:
        t2 = tau * tau
        return math.comb(n, j) * t2 ** j * tau ** (m - 1) * tau / ((1 + t2) ** (n + m) * y)

    return term(k, tau_k) + term(n - k, tau_nk)


def interpolation_points(k: int, n: int, count: int, denominator: int = 64) -> list[tuple[Fraction, Fraction]]:
    """Rational ``(x, y_k)`` pairs near an equispaced grid on ``(0, 2 sqrt(N))``.

    Rounding ``z`` can collide two points; the grid is then refined by doubling
    the denominator, so the selection is deterministic.
    """
    q = 4 * k * (n - k)
    span = 2.0 * math.sqrt(n)
    while True:
        pts = []
        seen = set()
        for i in range(1, count + 1):
            xh = span * i / (count + 1)
            zh = -xh + math.sqrt(xh * xh + q)
            z = Fraction(max(1, round(zh * denominator)), denominator)
            x = Fraction(q, 2) / z - z / 2
            if x * x in seen:
                break
            seen.add(x * x)
            pts.append((x, x + z))
        if len(pts) == count:
            return pts
        denominator *= 2


def solve_vandermonde(nodes: Sequence[Fraction], values: Sequence[Fraction]) -> list[Fraction]:
    """Exact ``a`` with ``sum_j a_j w_i^j = f_i`` (Bjorck-Pereyra, O(n^2) rational ops)."""
    w = [Fraction(v) for v in nodes]
    c = [Fraction(v) for v in values]
    n = len(w)
    if len(set(w)) != n:
        raise DomainError("interpolation nodes must be distinct")
    for k in range(n - 1):
        for i in range(n - 1, k, -1):
            c[i] = (c[i] - c[i - 1]) / (w[i] - w[i - k - 1])
    for k in range(n - 2, -1, -1):
        for i in range(k, n - 1):
            c[i] = c[i] - w[k] * c[i + 1]
    return c


def solve_exact(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    """General exact solve by fraction-free (Bareiss) elimination on an integer matrix."""
    n = len(matrix)
    rows = []
    for r, b in zip(matrix, rhs):
        entries = [Fraction(v) for v in r] + [Fraction(b)]
        lcm = 1
        for v in entries:
            lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
        rows.append([int(v * lcm) for v in entries])
    prev = 1
    for k in range(n):
        pivot = next((i for i in range(k, n) if rows[i][k] != 0), None)
        if pivot is None:
            raise DomainError("singular system")
        rows[k], rows[pivot] = rows[pivot], rows[k]
        pk = rows[k][k]
        for i in range(k + 1, n):
            rik = rows[i][k]
            rows[i] = [(pk * rows[i][j] - rik * rows[k][j]) // prev for j in range(n + 1)]
        prev = pk
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = Fraction(rows[i][n]) - sum(rows[i][j] * x[j] for j in range(i + 1, n))
        x[i] = s / rows[i][i]
    return x


def paired_polynomial(k: int, n: int, m: int, count: int | None = None) -> list[Fraction]:
    """Even-power coefficients of the numerator contributed by the pair ``(k, N-k)``."""
    count = n + m if count is None else count
    pts = interpolation_points(k, n, count)
    return solve_vandermonde([x * x for x, _ in pts],
                             [paired_term_numerator(x, y, k, n, m) for x, y in pts])


@lru_cache(maxsize=16)
def rational_numerator(n: int, m: int) -> RationalNumerator:
    if m % 2 == 0 or m < 1:
        raise DomainError("the rational form requires an odd mixing index")
    if n < 1 or n + m > MAX_EXACT_SIZE:
        raise DomainError(f"exact reconstruction supports 1 <= N and N+m <= {MAX_EXACT_SIZE}")
    size = n + m
    total = [Fraction(0)] * size
    # k = 0 pairs with k = N in closed form: N^(2N+m) x^(m-1)
    total[(m - 1) // 2] += Fraction(n) ** (2 * n + m)
    for k in range(1, n // 2 + 1):
        weight = Fraction(1, 2) if 2 * k == n else Fraction(1)
        for j, a in enumerate(paired_polynomial(k, n, m)):
            total[j] += weight * a
    return RationalNumerator(depth=n, m=m, even_coefficients=tuple(total))
