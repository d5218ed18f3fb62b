import numpy as np
import pytest

from mlip.model import GaitParams, WalkingMode
from mlip.simulator import Scenario
from mlip.io import packaged_config


def random_params(rng: np.random.Generator, allow_zero: bool = True) -> GaitParams:
    """Draw a valid gait; roughly a quarter of FA/OA durations are zero."""
    def dur(lo, hi):
        if allow_zero and rng.random() < 0.25:
            return 0.0
        return float(rng.uniform(lo, hi))

    return GaitParams(
        z0=float(rng.uniform(0.5, 1.2)),
        rho=float(rng.uniform(0.0, 0.25)),
        T_FA=dur(0.05, 0.4),
        T_UA=float(rng.uniform(0.05, 0.5)),
        T_OA=dur(0.02, 0.2),
        mode=list(WalkingMode)[int(rng.integers(3))],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def gait():
    return GaitParams()


@pytest.fixture
def base_scenario():
    return Scenario.from_dict(packaged_config("default.json"))
