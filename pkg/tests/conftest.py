import math

import numpy as np
import pytest
from hypothesis import settings

from twotime import experiments as ex
from twotime import fixtures

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

KET0 = np.diag([1.0, 0.0])
KET1 = np.diag([0.0, 1.0])
PLUS = np.full((2, 2), 0.5)
MINUS = np.array([[0.5, -0.5], [-0.5, 0.5]])


def random_hermitian(rng, d, real=False):
    a = rng.normal(size=(d, d))
    if not real:
        a = a + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_state(rng, d, real=False):
    a = rng.normal(size=(d, d))
    if not real:
        a = a + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture
def zfam():
    return ex.z_family(2)


@pytest.fixture(scope="session")
def fixture_models():
    return {name: fixtures.load_fixture(name) for name in fixtures.FIXTURES
            if name != "qubit_corrupted"}


@pytest.fixture(scope="session")
def random_symmetric_models():
    rng = np.random.default_rng(7)
    models = [ex.random_symmetric_model(rng, kind=("projective", "grw")[i % 2]) for i in range(20)]
    return models


PI = math.pi


ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: int(k)):
            terminalreporter.write_line(ACCEPTANCE[key])
