import dataclasses

import numpy as np
import pytest

from delaysnn.config import RunConfig


def tiny_config(**overrides) -> RunConfig:
    """Small, fast configuration used across the unit tests."""
    base = RunConfig(
        time_steps=20, n_layers=2, n_neurons=12, n_inputs=8, n_classes=3,
        kernel_kind="conv", kernel_size=3, has_batchnorm=True,
        tau=2.0, reset_mode="hard", d_max=8.0, delay_init="uniform",
        sigma_init=1.0, sigma_decay=0.9, epochs=2, batch_size=4, seed=0,
    )
    return dataclasses.replace(base, **overrides).validate()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
