"""Shared test fixtures for qpm."""

import numpy as np
import pytest

from qpm.engine.registry import NodeRegistry
from qpm.lattice import StructureSpec


@pytest.fixture
def triplet_spec():
    """l = 10.25 um, N = 22, M = 9: the triplet double-matching lattice."""
    return StructureSpec(l=10.25, n=22, m=9)


@pytest.fixture
def opposite_spec():
    """Even M: twin peaks of opposite sign."""
    return StructureSpec(l=10.25, n=22, m=8)


@pytest.fixture
def four_photon_spec():
    return StructureSpec(l=2.2, n=32, m=13)


@pytest.fixture
def small_spec():
    """Few domains and blocks: broad peaks."""
    return StructureSpec(l=10.25, n=6, m=2)


@pytest.fixture
def single_spec():
    """One domain in one block: a plain uniform segment."""
    return StructureSpec(l=1.0, n=1, m=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def registry():
    reg = NodeRegistry()
    reg.discover()
    return reg
