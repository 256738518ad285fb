from __future__ import annotations

import numpy as np
import pytest

from seirvax import ModelParams, SeirState


@pytest.fixture
def p1() -> ModelParams:
    """The workhorse parameter set used throughout the examples."""
    return ModelParams(N=1000.0, mu=0.01, omega=0.02, beta=0.9,
                       sigma=0.2, gamma=0.2)


@pytest.fixture
def mixed_state() -> SeirState:
    return SeirState(700.0, 100.0, 50.0, 150.0)


def random_conserved_state(rng: np.random.Generator, N: float) -> SeirState:
    """Random nonnegative state scaled to sum exactly-ish to N."""
    w = rng.dirichlet((1.0, 1.0, 1.0, 1.0)) * N
    return SeirState(*map(float, w))
