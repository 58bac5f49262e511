"""Ready-made models: the beam-splitter experiment, the shielding sweep and
random models satisfying (or violating) the symmetry conditions."""

from __future__ import annotations

import math

import numpy as np

from . import engine, oracle
from .forward import sample_batch
from .linalg import HilbertSpace
from .model import TwoTimeModel, build_grw_family, build_projective_family

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=float) / math.sqrt(2)


def z_family(d: int = 2):
    """Projective measurement in the distinguished basis."""
    return build_projective_family([np.diag(np.eye(d)[i]) for i in range(d)])


def beam_splitter_model() -> TwoTimeModel:
    """Qubit version of the source / beam splitter / detector experiment.

    Basis state 0 is the path joining the source S to the detector D and
    basis state 1 joins the floor F to the ceiling C; the beam splitter is a
    Hadamard.  ``H = (pi/2)(1 - Hadamard)`` gives ``U(1) = Hadamard`` and
    ``U(2) = 1``, so on the schedule ``(0, 2, 3, 5)``:

    * event 1 (t=2) is the particle's interaction on the source side,
      outcome 0 = S, 1 = F;
    * the particle then crosses the beam splitter;
    * event 2 (t=3) is the detection, outcome 0 = D, 1 = C.

    The particle leaves the source (``rho_I = |0><0|``) and the final
    condition is uninformative (``rho_F = 1``).
    """
    H = 0.5 * math.pi * (np.eye(2) - HADAMARD)
    space = HilbertSpace(2, ("S-D", "F-C"))
    return TwoTimeModel(H, z_family(2), (0.0, 2.0, 3.0, 5.0),
                        np.diag([1.0, 0.0]), np.eye(2), space)


def beam_splitter_experiment(n_samples: int = 100_000, seed: int = 0, workers: int = 1) -> dict:
    """Forward detection statistics and backward retrodiction at D."""
    model = beam_splitter_model()
    batch = sample_batch(model, n_samples, seed, workers=workers)
    freq_d = float(np.mean(batch.outcomes[:, 1] == 0))
    exact = oracle.enumerate_records(model)
    p_d = float(sum(p for r, p in zip(exact.records, exact.probabilities) if r[1] == 0))

    # retrodiction from a detection at D, in the reversed description
    reversed_cond = engine.conditional_next_collapse(model.reversed(), (0,))
    mirror = engine.conditional_previous_collapse(model, (0,))
    born = engine.born_analysis(model, 2, "backward", prefix=(0,))
    return {
        "samples": n_samples,
        "seed": seed,
        "forward_frequency_D": freq_d,
        "forward_sigma": math.sqrt(0.25 / n_samples),
        "exact_forward_P_D": p_d,
        "backward_P_source_given_D": float(reversed_cond.probabilities[0]),
        "backward_P_source_given_D_mirror": float(mirror.probabilities[0]),
        "backward_born": [float(x) for x in born.born],
        "backward_conditional": [float(x) for x in born.conditional],
        "backward_born_deviation": born.deviation,
    }


def shielding_sweep_model(k: int, dt: float = 0.6, rho_I=None) -> TwoTimeModel:
    """Qubit with one present event followed by ``k`` future Z collapses.

    ``H = sigma_x``, evenly spaced events ``dt`` apart and
    ``rho_F = |0><0|``.  The present event is event 1.
    """
    times = tuple(dt * i for i in range(k + 3))
    if rho_I is None:
        rho_I = np.diag([1.0, 0.0])
    return TwoTimeModel(SIGMA_X, z_family(2), times, rho_I, np.diag([1.0, 0.0]))


def _random_symmetric(rng, d: int) -> np.ndarray:
    a = rng.normal(size=(d, d))
    return (a + a.T) / 2


def _random_real_psd(rng, d: int) -> np.ndarray:
    a = rng.normal(size=(d, d))
    return a @ a.T


def random_projective_family(rng, d: int):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    m = int(rng.integers(2, d + 1)) if d > 1 else 1
    cuts = np.sort(rng.choice(np.arange(1, d), size=m - 1, replace=False)) if m > 1 else []
    groups = np.split(np.arange(d), cuts)
    return build_projective_family([q[:, g] @ q[:, g].T for g in groups])


def random_grw_family(rng, d: int, m: int | None = None):
    x = np.arange(d) - (d - 1) / 2
    m = m or int(rng.integers(3, 8))
    lattice = np.linspace(x[0] - 1.0, x[-1] + 1.0, m)
    return build_grw_family(lattice, np.diag(x), float(rng.uniform(0.5, 3.0)))


def random_symmetric_model(rng, *, d: int | None = None, kind: str | None = None,
                           events: int | None = None, max_records: int = 10**4) -> TwoTimeModel:
    """Random model whose ``H``, collapse operators and boundaries are real symmetric."""
    d = d or int(rng.integers(2, 7))
    kind = kind or ("projective", "grw")[int(rng.integers(2))]
    family = random_projective_family(rng, d) if kind == "projective" else random_grw_family(rng, d)
    events = events or int(rng.integers(1, 5))
    while events > 1 and family.m ** events > max_records:
        events -= 1
    times = np.cumsum(rng.uniform(0.1, 1.5, size=events + 2)) - 1.0
    rho_I = _random_real_psd(rng, d)
    rho_I /= np.trace(rho_I)
    rho_F = _random_real_psd(rng, d)
    rho_F /= np.linalg.eigvalsh(rho_F)[-1]
    return TwoTimeModel(_random_symmetric(rng, d), family, tuple(times), rho_I, rho_F)


def sigma_y_model(times=(0.0, 0.7, 1.5, 2.0), rho_I=None, rho_F=None) -> TwoTimeModel:
    """Qubit driven by ``sigma_y``, which breaks the symmetry conditions."""
    rho_I = np.diag([1.0, 0.0]) if rho_I is None else rho_I
    rho_F = np.array([[0.5, 0.5], [0.5, 0.5]]) if rho_F is None else rho_F
    return TwoTimeModel(SIGMA_Y, z_family(2), times, rho_I, rho_F)
