import os
import warnings

import pytest
from hypothesis import HealthCheck, settings

from fylab.data import NormWarning, margin_certificate, pilot_dataset

settings.register_profile("ci", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", max_examples=20, deadline=None)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture(scope="session")
def pilot():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormWarning)
        return pilot_dataset()


@pytest.fixture(scope="session")
def pilot_cert(pilot):
    return margin_certificate(pilot)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
