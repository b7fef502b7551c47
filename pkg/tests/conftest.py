import numpy as np
import pytest

from walkspectra import LatticeState, PeriodicOperator
from walkspectra.cli.presets import preset_steps


@pytest.fixture(scope="session")
def hadamard():
    return PeriodicOperator(preset_steps("hadamard-1d"))


@pytest.fixture(scope="session")
def grover():
    return PeriodicOperator(preset_steps("grover-2d"))


@pytest.fixture(scope="session")
def constant_coin():
    return PeriodicOperator(preset_steps("constant-coin"))


@pytest.fixture(scope="session")
def pure_shift():
    return PeriodicOperator(preset_steps("pure-shift"))


def random_unit(rng, D):
    v = rng.normal(size=D) + 1j * rng.normal(size=D)
    return v / np.linalg.norm(v)


def random_state(rng, d, D, n_sites=5, radius=3):
    sites = {tuple(rng.integers(-radius, radius + 1, size=d)) for _ in range(n_sites)}
    return LatticeState({s: rng.normal(size=D) + 1j * rng.normal(size=D) for s in sites})


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
