"""Bundled model configs and the code that generates them.

The JSON files under ``twotime/data`` are written by :func:`write_all`; the
test-suite checks they still match.
"""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

import numpy as np

from .config import load_model, save_model
from .experiments import SIGMA_X, SIGMA_Y, beam_splitter_model, z_family
from .linalg import HilbertSpace
from .model import TwoTimeModel, build_grw_family, CollapseFamily, OutcomeGrid

PLUS = np.full((2, 2), 0.5)


def qubit_symmetric() -> TwoTimeModel:
    """Two Z collapses under ``sigma_x``; every ingredient real symmetric."""
    times = (0.0, math.pi / 4, math.pi / 2, 2.0)
    return TwoTimeModel(SIGMA_X, z_family(2), times, np.diag([1.0, 0.0]), PLUS,
                        HilbertSpace(2, ("up", "down")))


def qubit_sigma_y() -> TwoTimeModel:
    """Same as :func:`qubit_symmetric` but driven by ``sigma_y``."""
    times = (0.0, math.pi / 4, math.pi / 2, 2.0)
    return TwoTimeModel(SIGMA_Y, z_family(2), times, np.diag([1.0, 0.0]), PLUS,
                        HilbertSpace(2, ("up", "down")))


def qubit_two_event() -> TwoTimeModel:
    """Two Z collapses under ``sigma_x`` with an uninformative final condition."""
    return TwoTimeModel(SIGMA_X, z_family(2), (0.0, 0.3, 0.8, 1.2),
                        np.diag([1.0, 0.0]), np.eye(2), HilbertSpace(2, ("up", "down")))


def _chain(d: int) -> np.ndarray:
    return np.diag(np.full(d - 1, -1.0), 1) + np.diag(np.full(d - 1, -1.0), -1) + 2 * np.eye(d)


def grw_uniform_final() -> TwoTimeModel:
    """Five-site GRW chain, pure initial state, ``rho_F = 1``."""
    x = np.arange(5) - 2.0
    family = build_grw_family(np.linspace(-4.0, 4.0, 9), np.diag(x), 1.0)
    psi = np.exp(-0.5 * (x + 1.0) ** 2)
    psi /= np.linalg.norm(psi)
    return TwoTimeModel(0.5 * _chain(5), family, (0.0, 0.4, 0.9, 1.5, 2.0),
                        np.outer(psi, psi), np.eye(5),
                        HilbertSpace(5, tuple(f"x={v:g}" for v in x)))


def grw_uniform_initial() -> TwoTimeModel:
    """Five-site GRW chain, maximally mixed past, localized final condition."""
    m = grw_uniform_final()
    rho_F = np.diag([0.0, 0.0, 1.0, 0.5, 0.0])
    return TwoTimeModel(m.H, m.family, m.schedule, np.eye(5) / 5, rho_F, m.space)


def qubit_corrupted() -> TwoTimeModel:
    """Z projectors with halved quadrature weights: incomplete on purpose."""
    ops = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    family = CollapseFamily(OutcomeGrid([0.0, 1.0], [0.5, 0.5]), ops, check=False)
    return TwoTimeModel(SIGMA_X, family, (0.0, 1.0, 2.0), np.diag([1.0, 0.0]), np.eye(2))


FIXTURES = {
    "qubit_symmetric": qubit_symmetric,
    "qubit_sigma_y": qubit_sigma_y,
    "qubit_two_event": qubit_two_event,
    "beam_splitter": beam_splitter_model,
    "grw_uniform_final": grw_uniform_final,
    "grw_uniform_initial": grw_uniform_initial,
    "qubit_corrupted": qubit_corrupted,
}


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("twotime") / "data" / f"{name}.json"))


def load_fixture(name: str, *, check: bool = True) -> TwoTimeModel:
    return load_model(fixture_path(name), check=check)


def write_all(directory=None) -> None:
    directory = Path(directory) if directory else Path(__file__).parent / "data"
    directory.mkdir(parents=True, exist_ok=True)
    for name, build in FIXTURES.items():
        save_model(build(), directory / f"{name}.json")


if __name__ == "__main__":
    write_all()
