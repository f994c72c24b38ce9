import numpy as np
import pytest

from ckptplan import ExponentialFailureModel

# failure rate measured on the volunteer pool
MEASURED_RATE = 0.0000348074


@pytest.fixture
def measured_model():
    return ExponentialFailureModel(MEASURED_RATE)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


class ScriptedUniforms:
    """Random source replaying fixed uniforms; used to script failure times."""

    def __init__(self, values, fallback=0.5):
        self.values = list(values)
        self.fallback = fallback

    def random(self, size=None):
        if size is None:
            return self.values.pop(0) if self.values else self.fallback
        return np.array([self.random() for _ in range(int(np.prod(size)))]).reshape(size)

    def uniform(self, lo, hi):
        return 0.5 * (lo + hi)
