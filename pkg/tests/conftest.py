"""Shared instance factories for the test suite.

Small cities (n=4..6, modest demand) keep MILP solves in the millisecond
range; the larger reference instance mirrors the scale used by the
acceptance suite.
"""

from __future__ import annotations

import numpy as np
import pytest

from paracity.city import CityParams


def small_params(**overrides) -> CityParams:
    base = dict(
        n=4, T=30.0, g=0.5, Y=200.0, a=0.8,
        alpha=0.3, beta=0.4, gamma=0.3, K=10.0, mu=1.0,
    )
    base.update(overrides)
    return CityParams(**base)


def paper_params(**overrides) -> CityParams:
    base = dict(
        n=8, T=30.0, g=1.0 / 3.0, Y=24000.0, a=0.8,
        alpha=0.3, beta=0.4, gamma=0.3, K=100.0, mu=1.0,
    )
    base.update(overrides)
    return CityParams(**base)


def extreme_params(n: int, **overrides) -> CityParams:
    """Family with closed-form optima: g=1/n, K=Y, mu=1."""
    base = dict(
        n=n, T=30.0, g=1.0 / n, Y=1000.0, a=0.8,
        alpha=0.3, beta=0.4, gamma=0.3, K=1000.0, mu=1.0,
    )
    base.update(overrides)
    return CityParams(**base)


def random_params(rng: np.random.Generator, n_range=(4, 12), **overrides) -> CityParams:
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    shares = rng.dirichlet([2.0, 2.0, 2.0])
    shares = np.clip(shares, 0.02, None)
    shares = shares / shares.sum()
    base = dict(
        n=n,
        T=float(rng.uniform(5.0, 60.0)),
        g=float(rng.uniform(0.1, 2.0)),
        Y=float(rng.uniform(100.0, 5000.0)),
        a=float(rng.uniform(0.1, 0.9)),
        alpha=float(shares[0]),
        beta=float(shares[1]),
        gamma=float(shares[2]),
        K=float(rng.uniform(10.0, 500.0)),
        mu=float(rng.uniform(0.0, 1.0)),
    )
    base.update(overrides)
    return CityParams(**base)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260826)
