"""Pytest fixtures shared across the vwlab test suite."""

import numpy as np
import pytest

from vwlab.core import lattice as lat
from vwlab.core.domain.models import Configuration, Grid, PerturbationPack, TangentTriple
from vwlab.core.rng import stream
from vwlab.infrastructure.testing.adapters import MockFieldStore, MockReportRepository


@pytest.fixture
def rng() -> np.random.Generator:
    """Deterministic generator for ad-hoc test data."""
    return stream(0, "tests")


@pytest.fixture
def grid4() -> Grid:
    """Smallest grid that supports band-1 sampling."""
    return Grid(N=4)


@pytest.fixture
def grid3() -> Grid:
    return Grid(N=3)


@pytest.fixture
def config4(grid4: Grid) -> Configuration:
    """Band-limited random configuration on the N = 4 grid."""
    return lat.sample_config(grid4, 11, 1)


@pytest.fixture
def pack4(grid4: Grid) -> PerturbationPack:
    """Random perturbation pack with eps = 0.2 on the N = 4 grid."""
    return lat.sample_pack(grid4, 11, 1, 0.2)


@pytest.fixture
def tangent4(grid4: Grid) -> TangentTriple:
    return lat.sample_tangent(grid4, 11, 1)


@pytest.fixture
def report_repo() -> MockReportRepository:
    """In-memory report repository (no disk I/O)."""
    return MockReportRepository()


@pytest.fixture
def field_store() -> MockFieldStore:
    """In-memory field store (no disk I/O)."""
    return MockFieldStore()
