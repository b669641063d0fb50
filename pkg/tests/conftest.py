import numpy as np
import pytest

from simfair.channels import build_channels
from simfair.geometry import ScenarioConfig


@pytest.fixture
def small_channels():
    cfg = ScenarioConfig(elements_per_layer=6, num_layers=2, num_users=3, num_bs_antennas=3)
    return build_channels(cfg, np.random.default_rng(11))
