import os

import pytest
from hypothesis import HealthCheck, settings

from gazebench import calib, nnmap

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Filled by test_acceptance.py; one line per criterion.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def gaze_model():
    return calib.SyntheticGazeModel()


@pytest.fixture(scope="session")
def regressor(gaze_model):
    """Screen-coordinate regressor trained on a simulated 9-point calibration."""
    ds = calib.run_calibration_sim(gaze_model, noise_std=0.5, seed=11)
    net = nnmap.init_network(nnmap.NetworkSpec(6, (32, 16), 2), seed=11)
    return nnmap.train(net, ds, nnmap.TrainConfig(seed=11))
