"""Shared fixtures, the brute-force expectation oracle, random model factory."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from mdpvalues import (
    bernoulli_product_model,
    build_agreeing_ranking,
    likelihood_ratio_statistic,
    make_model,
    make_statistic,
)
from mdpvalues.registry import table1_ranking as build_table1_ranking


def brute_expectation(model, theta, fn):
    """Straight-line enumeration oracle: sum_x p_theta(x) * fn(x), exact."""
    row = model.probs(theta)
    return sum((row[pt.index] * fn(pt) for pt in model.support), Fraction(0))


def random_model_and_statistic(rng: random.Random, max_support: int = 64):
    """A random finite model with rational pmfs and a tie-rich statistic.

    The lexicographic tie-break then yields a random injective ranking, so
    the pair exercises the generic-agreement path of every claim.
    """
    n = rng.randint(2, max_support)
    labels = [f"x{i:03d}" for i in range(n)]
    w0 = [rng.randint(1, 99) for _ in range(n)]
    w1 = [rng.randint(1, 99) for _ in range(n)]
    model = make_model(
        labels,
        {"t0": "1/2", "t1": "3/4"},
        {
            "t0": [Fraction(w, sum(w0)) for w in w0],
            "t1": [Fraction(w, sum(w1)) for w in w1],
        },
    )
    values = [Fraction(rng.randint(0, 7)) for _ in range(n)]
    statistic = make_statistic(model, "s", values)
    return model, statistic


@pytest.fixture(scope="session")
def example1():
    """Five iid fair-vs-0.8 coins; the worked model behind the golden values."""
    return bernoulli_product_model(5, ["1/2", "4/5"])


@pytest.fixture(scope="session")
def lr(example1):
    return likelihood_ratio_statistic(example1, "theta0", "theta1")


@pytest.fixture(scope="session")
def lex_ranking(example1, lr):
    return build_agreeing_ranking(example1, lr)


@pytest.fixture(scope="session")
def table1_ranking(example1, lr):
    """The ranking whose first eight ranks match the reference table."""
    return build_table1_ranking(example1, lr)
