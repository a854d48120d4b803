import time

import numpy as np
import pytest

from sharpwire.pipeline import extract
from sharpwire.synthgen import PRESETS, make_shape, sample_field

R = 0.02

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


class SuiteRun(dict):
    """``name -> (shape, cloud, result)`` plus the wall time of the run."""

    elapsed = 0.0


@pytest.fixture(scope="session")
def suite():
    """Every preset at r = 0.02 with its shape, cloud and extraction result."""
    out = SuiteRun()
    t0 = time.perf_counter()
    for name in PRESETS:
        shape = make_shape(name)
        cloud = sample_field(shape, R, seed=0)
        try:
            result = extract(cloud)
        except Exception as exc:  # recorded; tests decide what a failure means
            result = exc
        out[name] = (shape, cloud, result)
    out.elapsed = time.perf_counter() - t0
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
