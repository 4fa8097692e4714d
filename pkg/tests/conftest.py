"""Shared fixtures: small random training tensors and one trained model.

The session-scoped model is trained on short synthetic days (120 slices)
so monitor/diagnose/persist tests share a single realistic model without
paying full-day training time in every file.
"""

from datetime import date, timedelta

import numpy as np
import pytest

from tvspc import TrainingTensor, default_scenario, generate_noc, train


@pytest.fixture
def make_tensor():
    """Factory for small random training tensors with per-slice scale/shift."""

    def _make(i_days=12, k_slices=6, n_vars=7, seed=0):
        rng = np.random.default_rng(seed)
        scale = rng.uniform(0.5, 3.0, size=(k_slices, n_vars))
        shift = rng.uniform(-5.0, 5.0, size=(k_slices, n_vars))
        x = rng.standard_normal((i_days, k_slices, n_vars)) * scale + shift
        day0 = date(2021, 6, 1)
        return TrainingTensor(
            x=x,
            day_ids=tuple(day0 + timedelta(days=i) for i in range(i_days)),
            variable_names=tuple("var%d" % j for j in range(n_vars)),
        )

    return _make


@pytest.fixture(scope="session")
def noc_tensor():
    return generate_noc(default_scenario(i_days=12, seed=4242), 120)


@pytest.fixture(scope="session")
def model(noc_tensor):
    return train(noc_tensor)
