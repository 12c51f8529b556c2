"""Shared fixtures: cached configurations and harmonic-form bundles.

Building the harmonic-form bundle runs Sigma quadrature for the
normalization constant, so bundles are cached per (k, lam) for the whole
session.
"""

from __future__ import annotations

import numpy as np
import pytest

from ale_lab import gh, harmonic


@pytest.fixture(scope="session")
def canonical():
    cache: dict[tuple[int, float], gh.GHConfig] = {}

    def get(k: int, lam: float = 1.0) -> gh.GHConfig:
        key = (k, lam)
        if key not in cache:
            cache[key] = gh.GHConfig.canonical(k, lam)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def omega_bundle(canonical):
    cache: dict[tuple[int, float], harmonic.HarmonicFormBundle] = {}

    def get(k: int, lam: float = 1.0) -> harmonic.HarmonicFormBundle:
        key = (k, lam)
        if key not in cache:
            cache[key] = harmonic.build_omega(canonical(k, lam))
        return cache[key]

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
