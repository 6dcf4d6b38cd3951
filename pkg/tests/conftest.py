"""Shared fixtures: pipelines are expensive, build each config once."""

import numpy as np
import pytest

from nkschwarz import ExperimentConfig, build_pipeline

_CACHE = {}


def pipeline_for(**kwargs):
    """Session-cached pipeline for a configuration."""
    key = tuple(sorted(kwargs.items()))
    if key not in _CACHE:
        _CACHE[key] = build_pipeline(ExperimentConfig(**kwargs))
    return _CACHE[key]


# a moderate-contrast configuration used across the operator tests;
# conditioning is mild enough that identities hold at tight tolerances
MODERATE = dict(
    nx=8, ny=8, pattern="channels", rho=10.0, eps_factor=1e-4, seed=3,
    px=2, py=2, overlap=1, tau=1.25,
)


@pytest.fixture(scope="session")
def soras_pipeline():
    return pipeline_for(variant="soras2", **MODERATE)


@pytest.fixture(scope="session")
def as_pipeline():
    return pipeline_for(variant="as2", **MODERATE)


@pytest.fixture(scope="session")
def soras_inexact_pipeline():
    return pipeline_for(variant="soras2_inexact", inexact="scaled:2.0",
                        **MODERATE)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
