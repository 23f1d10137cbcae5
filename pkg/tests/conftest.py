"""Shared fixtures: parsed fixture designs and deterministic RNG streams."""

from __future__ import annotations

import os

import numpy as np
import pytest

from hybroplace.bookshelf import parse_aux

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
TOY_AUX = os.path.join(FIXTURES, "toy", "toy.aux")
BENCH_AUX = os.path.join(FIXTURES, "bench", "bench.aux")


@pytest.fixture(scope="session")
def toy_design():
    return parse_aux(TOY_AUX)


@pytest.fixture(scope="session")
def bench_design():
    return parse_aux(BENCH_AUX)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.PCG64(20240817))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
