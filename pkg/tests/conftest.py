from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def brute_dist(p, pts) -> float:
    """Independent distance oracle: plain Python loop over the samples."""
    best = float("inf")
    for q in np.asarray(pts, dtype=float):
        best = min(best, float(np.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(p, q)))))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
