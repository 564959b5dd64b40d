#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

import os

import numpy as np
import pytest

from levycouple.measures import construct_with_lazy_import
from levycouple.measures.atoms import DiscreteAtoms
from levycouple.measures.base import TruncationConfig

HERE = os.path.dirname(os.path.abspath(__file__))

@pytest.fixture(autouse=True)
def _single_worker_env(monkeypatch):
    monkeypatch.delenv('LEVY_COUPLE_THREADS', raising=False)

@pytest.fixture
def test_dir():
    return HERE

@pytest.fixture
def stable():
    """Cauchy-type measure: alpha = 1, c = 1, d = 1."""
    return construct_with_lazy_import({"kind": "stable", "alpha": 1.0, "c": 1.0, "dimension": 1})

@pytest.fixture
def stable2():
    return construct_with_lazy_import({"kind": "stable", "alpha": 1.0, "c": 1.0, "dimension": 2})

@pytest.fixture
def truncated():
    return construct_with_lazy_import(
        {"kind": "radial", "family": "truncated_stable", "alpha": 1.0, "c": 1.0, "range_bound": 0.2}
    )

@pytest.fixture
def coarse():
    return TruncationConfig(epsilon=0.05)

@pytest.fixture
def lattice_atoms():
    """Symmetric atoms on the lattice 0.25 Z, |k| <= 8."""
    return random_lattice_atoms(np.random.default_rng(12345))

def random_lattice_atoms(rng, count=8, spacing=0.25):
    ks = np.arange(1, count + 1)
    keep = ks[rng.random(count) < 0.8]
    if not len(keep):
        keep = ks[:1]
    masses = rng.uniform(0.1, 2.0, len(keep))
    pos = (keep * spacing)[:, None]
    return DiscreteAtoms(np.concatenate([pos, -pos]), np.concatenate([masses, masses]))

@pytest.fixture
def lattice_factory():
    return random_lattice_atoms
