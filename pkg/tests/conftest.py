import math

import numpy as np
import pytest

from vortwave.operator import Discretization
from vortwave.vorticity import VorticityModel

G = 9.81
TWO_PI = 2 * math.pi

MODELS = {
    "zero": VorticityModel.zero(),
    "constant": VorticityModel.constant(1.5),
    "affine": VorticityModel.affine(-2.0, 1.0),
    "sine": VorticityModel.sine(1.0, 1.0, 0.0, 0.5),
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_disc():
    return Discretization(TWO_PI, 1.0, 12, 64)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
