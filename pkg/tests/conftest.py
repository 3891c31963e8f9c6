from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit_sphere(rng, n):
    V = rng.standard_normal((n, 3))
    return V / np.linalg.norm(V, axis=1, keepdims=True)
