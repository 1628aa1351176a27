import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mctree.density import q_direct
from mctree.rational import (
    RationalNumerator,
    interpolation_points,
    paired_polynomial,
    paired_term_direct,
    paired_term_numerator,
    rational_numerator,
    solve_exact,
    solve_vandermonde,
)
from mctree.tree import DomainError


@pytest.mark.parametrize("n, m", [(1, 1), (2, 3), (4, 3), (7, 5), (10, 9)])
def test_rational_form_matches_direct(n, m):
    num = rational_numerator(n, m)
    rnd = random.Random(n * 100 + m)
    xs = np.array([rnd.uniform(-4, 4) * n ** 0.5 for _ in range(20)])
    np.testing.assert_allclose(num.density(xs), q_direct(xs, n, m), rtol=1e-12)
    np.testing.assert_allclose(num.horner(xs), q_direct(xs, n, m), rtol=1e-12)


@pytest.mark.parametrize("n, m", [(4, 3), (10, 9)])
def test_odd_coefficients_vanish_and_degree_bound(n, m):
    num = rational_numerator(n, m)
    coefs = num.coefficients
    assert len(coefs) == 2 * (n + m - 1) + 1
    assert all(c == 0 for c in coefs[1::2])
    assert num.degree <= 2 * (n + m - 1)
    assert all(isinstance(c, Fraction) for c in coefs)


@pytest.mark.parametrize("n, k, m", [(5, 1, 3), (6, 3, 1), (10, 4, 9)])
def test_paired_numerator_equals_direct_terms(n, k, m):
    for x, y in interpolation_points(k, n, 6):
        assert y * y == x * x + 4 * k * (n - k)
        lhs = paired_term_numerator(x, y, k, n, m) / (x * x + n * n) ** (n + m)
        assert lhs == paired_term_direct(x, y, k, n, m)


def test_interpolation_points_distinct_and_deterministic():
    a = interpolation_points(3, 20, 29)
    assert a == interpolation_points(3, 20, 29)
    assert len({x * x for x, _ in a}) == 29


def test_extra_point_leaves_a_zero_top_coefficient():
    n, m, k = 8, 5, 3
    base = paired_polynomial(k, n, m)
    extended = paired_polynomial(k, n, m, count=n + m + 1)
    assert extended[-1] == 0
    assert extended[:-1] == base


fractions = st.fractions(min_value=-20, max_value=20, max_denominator=50)


@settings(max_examples=30, deadline=None)
@given(st.lists(fractions, min_size=1, max_size=7, unique=True), st.data())
def test_bjorck_pereyra_matches_bareiss(nodes, data):
    values = data.draw(st.lists(fractions, min_size=len(nodes), max_size=len(nodes)))
    matrix = [[w ** j for j in range(len(nodes))] for w in nodes]
    assert solve_vandermonde(nodes, values) == solve_exact(matrix, values)


def test_vandermonde_rejects_repeated_nodes():
    with pytest.raises(DomainError):
        solve_vandermonde([Fraction(1), Fraction(1)], [Fraction(0), Fraction(1)])


def test_bareiss_general_system():
    a = [[Fraction(2), Fraction(1), Fraction(-1)], [Fraction(-3), Fraction(-1), Fraction(2)],
         [Fraction(-2), Fraction(1), Fraction(2)]]
    assert solve_exact(a, [Fraction(8), Fraction(-11), Fraction(-3)]) == [2, 3, -1]
    with pytest.raises(DomainError):
        solve_exact([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]], [Fraction(1), Fraction(2)])


def test_text_round_trip():
    num = rational_numerator(6, 3)
    back = RationalNumerator.from_text(num.to_text())
    assert back == num
    with pytest.raises(ValueError):
        RationalNumerator.from_text("6 3\n1/2\n")


@pytest.mark.parametrize("n, m", [(5, 2), (0, 3), (200, 9)])
def test_rational_numerator_domain(n, m):
    with pytest.raises(DomainError):
        rational_numerator(n, m)


def test_single_tree_closed_form():
    # N=1, m=1: q(x) = (2/pi) / (1 + x^2)^2, so A(x) == 1
    assert rational_numerator(1, 1).even_coefficients == (Fraction(1), Fraction(0))
