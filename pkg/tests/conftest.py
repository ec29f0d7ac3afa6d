import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pccc.geometry import CameraIntrinsics

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def k640():
    return CameraIntrinsics(500.0, 500.0, 320.0, 240.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, h=16, w=16, top=0.9):
    return rng.uniform(0.01, top, size=(h, w, 3))


# acceptance tests append "criterion N: PASS/FAIL ..." lines here
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
