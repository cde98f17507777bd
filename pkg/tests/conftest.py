import random
from fractions import Fraction

import pytest

from hamiltonize import Chart, Expr, Tensor, normalize
from hamiltonize.expr import _nf_of


@pytest.fixture
def chart3():
    return Chart(("x", "y", "z"))


@pytest.fixture
def chart2():
    return Chart(("x", "y"))


def expr_is_zero(e) -> bool:
    """Exact zero test on the rational fragment (helper for assertions)."""
    return _nf_of(normalize(e)).is_zero()


def tensor_is_zero(T) -> bool:
    return all(expr_is_zero(c) for c in T.entries.values())


def assert_tensor_equal(A, B):
    diff = A - B
    bad = {
        idx: str(normalize(c))
        for idx, c in diff.entries.items()
        if not expr_is_zero(c)
    }
    assert not bad, f"tensors differ at {bad}"


def random_fraction(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-3, 3), rng.choice([1, 1, 2]))


def random_poly(rng: random.Random, chart: Chart, degree: int = 2, terms: int = 3) -> Expr:
    """Sparse random polynomial with small rational coefficients."""
    total = Expr.number(0)
    for _ in range(rng.randint(1, terms)):
        term = Expr.number(random_fraction(rng))
        for _ in range(rng.randint(0, degree)):
            term = term * Expr.coord(rng.choice(chart.coords))
        total = total + term
    return total


def random_vector(rng: random.Random, chart: Chart, degree: int = 2) -> Tensor:
    return Tensor.vector(
        chart, [random_poly(rng, chart, degree) for _ in chart.coords]
    )


def random_bivector(rng: random.Random, chart: Chart, degree: int = 2) -> Tensor:
    m = chart.m
    entries = {}
    for i in range(m):
        for j in range(i + 1, m):
            if rng.random() < 0.7:
                entries[(i, j)] = random_poly(rng, chart, degree)
    return Tensor.multivector(chart, 2, entries)
