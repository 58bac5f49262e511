"""Forward-in-time collapse dynamics at the density-operator level.

A collapse with outcome ``a`` maps ``rho -> K_a rho K_a`` with
``K_a = sqrt(w_a) L_a``, so the trace of a history operator is directly the
probability mass of its (discrete) record.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelValidityError, NumericalError, ValidationError
from .linalg import DEFAULT_TOL, DensityOperator, as_matrix, normalize_history, propagator
from .model import CollapseFamily, CollapseRecord, TwoTimeModel

CHUNK = 4096


def collapse_distribution(rho, family: CollapseFamily) -> np.ndarray:
    """Outcome probabilities ``p_a = w_a tr[L_a^2 rho]`` for a unit-trace state."""
    r = as_matrix(rho)
    p = np.einsum("aij,ji->a", family.effects, r)
    return _checked_probabilities(p)


def _checked_probabilities(p: np.ndarray) -> np.ndarray:
    if np.max(np.abs(p.imag), initial=0.0) > DEFAULT_TOL.imag:
        raise ModelValidityError(
            f"outcome probabilities have imaginary parts up to {np.max(np.abs(p.imag)):.3e}")
    p = p.real
    if np.min(p) < -DEFAULT_TOL.negative_probability:
        raise ModelValidityError(f"negative outcome probability {np.min(p):.3e}")
    return np.clip(p, 0.0, None)


def evolve_history(rho0, H, times, steps, kraus, outcomes, t: float) -> np.ndarray:
    """Sandwich ``rho0`` with propagators and the collapses at ``t_i < t``.

    ``steps[k-1]`` must be ``U(times[k] - times[k-1])``; it is reused when
    ``t`` lands exactly on a schedule time so that every route through a
    given time multiplies by the same matrices.
    """
    if not times[0] <= t <= times[-1]:
        raise ValidationError(f"time {t} outside [{times[0]}, {times[-1]}]")
    pi = as_matrix(rho0)
    k = 1
    while k < len(times) - 1 and times[k] < t:
        v = steps[k - 1]
        kr = kraus[outcomes[k - 1]]
        pi = kr @ (v @ pi @ v.conj().T) @ kr
        k += 1
    if t == times[k]:
        v = steps[k - 1]
    elif t == times[k - 1]:
        return pi
    else:
        v = propagator(H, t - times[k - 1]).matrix
    return v @ pi @ v.conj().T


def history_operator(model: TwoTimeModel, record, t: float) -> DensityOperator:
    """Unnormalized history ``pi_t`` for ``record`` at time ``t``.

    Only collapses strictly before ``t`` are included, so at ``t = t_j``
    the operator is the pre-collapse history of event ``j``.
    """
    rec = model.record(record)
    pi = evolve_history(model.rho_I.matrix, model.H.matrix, model.schedule.times,
                        model.steps, model.family.kraus, rec.outcomes, t)
    return DensityOperator(pi, "unnormalized_history", model.space)


def state_at(model: TwoTimeModel, record, t: float) -> DensityOperator:
    """Normalized forward state ``pi_t / tr[pi_t]``."""
    return normalize_history(history_operator(model, record, t))[0]


@dataclass
class TrajectoryOutput:
    record: CollapseRecord
    weight: float
    states: list | None = None


def trajectory_seed(base_seed: int, index: int) -> int:
    """Independent 64-bit seed for trajectory ``index`` of a batch."""
    digest = hashlib.blake2b(f"{int(base_seed)}:{int(index)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _run(model: TwoTimeModel, uniforms: np.ndarray, keep_states: bool = False):
    """Advance a stack of trajectories driven by pre-drawn uniforms.

    Row ``r`` of the result depends only on row ``r`` of ``uniforms``.
    """
    n_traj, n_events = uniforms.shape
    fam = model.family
    rho = np.broadcast_to(model.rho_I.matrix, (n_traj, model.dim, model.dim)).copy()
    outcomes = np.zeros((n_traj, n_events), dtype=np.int64)
    weights = np.ones(n_traj)
    states = []
    for k in range(n_events):
        v = model.steps[k]
        rho = v @ rho @ v.conj().T
        p = np.einsum("aij,nji->na", fam.effects, rho)
        if np.max(np.abs(p.imag)) > DEFAULT_TOL.imag or np.min(p.real) < -DEFAULT_TOL.negative_probability:
            _checked_probabilities(p.ravel())
        p = np.clip(p.real, 0.0, None)
        cdf = np.cumsum(p, axis=1)
        if np.any(cdf[:, -1] <= DEFAULT_TOL.zero):
            raise ModelValidityError(f"every outcome of event {k + 1} has zero probability")
        idx = np.minimum((cdf <= uniforms[:, k:k + 1] * cdf[:, -1:]).sum(axis=1), fam.m - 1)
        kr = fam.kraus[idx]
        rho = kr @ rho @ kr
        tr = np.einsum("nii->n", rho).real
        rho /= tr[:, None, None]
        weights *= tr
        outcomes[:, k] = idx
        if keep_states:
            states.append(rho.copy())
    return outcomes, weights, states


def _cross_check(model: TwoTimeModel, outcomes: np.ndarray, weights: np.ndarray) -> None:
    seen = {}
    for row, w in zip(outcomes, weights):
        key = tuple(int(z) for z in row)
        if key not in seen:
            pi = evolve_history(model.rho_I.matrix, model.H.matrix, model.schedule.times,
                                model.steps, model.family.kraus, key, model.schedule.times[-1])
            seen[key] = np.trace(pi).real
        ref = seen[key]
        if abs(w - ref) > 1e-9 * max(abs(ref), DEFAULT_TOL.zero):
            raise NumericalError(
                f"sampled weight {w!r} disagrees with history trace {ref!r} for record {key}")


def sample_trajectory(model: TwoTimeModel, seed: int, *, keep_states: bool = False,
                      verify: bool = True) -> TrajectoryOutput:
    """Sample one forward trajectory (``rho_F`` plays no role here).

    Outcomes are drawn by inverse CDF over ascending outcome indices, one
    uniform per event from ``numpy.random.default_rng(seed)``.
    """
    rng = np.random.default_rng(int(seed))
    u = rng.random(model.schedule.num_events)[None, :]
    outcomes, weights, states = _run(model, u, keep_states)
    if verify:
        _cross_check(model, outcomes, weights)
    rec = model.record(outcomes[0])
    kept = None
    if keep_states:
        kept = [DensityOperator(s[0], "state", model.space) for s in states]
    return TrajectoryOutput(rec, float(weights[0]), kept)


@dataclass
class TrajectoryBatch:
    """Column-oriented output of :func:`sample_batch`."""

    base_seed: int
    seeds: np.ndarray
    outcomes: np.ndarray
    weights: np.ndarray
    schedule: object = field(repr=False, default=None)

    def __len__(self):
        return len(self.seeds)

    def records(self) -> list[tuple[int, ...]]:
        return [tuple(int(z) for z in row) for row in self.outcomes]

    def frequencies(self) -> dict[tuple[int, ...], float]:
        keys, counts = np.unique(self.outcomes, axis=0, return_counts=True)
        return {tuple(int(z) for z in k): c / len(self) for k, c in zip(keys, counts)}


def _sample_chunk(model: TwoTimeModel, base_seed: int, start: int, stop: int, verify: bool):
    seeds = [trajectory_seed(base_seed, i) for i in range(start, stop)]
    n_events = model.schedule.num_events
    u = np.array([np.random.default_rng(s).random(n_events) for s in seeds]).reshape(
        len(seeds), n_events)
    outcomes, weights, _ = _run(model, u)
    if verify:
        _cross_check(model, outcomes, weights)
    return np.array(seeds, dtype=np.uint64), outcomes, weights


def sample_batch(model: TwoTimeModel, n_samples: int, base_seed: int, *,
                 workers: int = 1, verify: bool = True) -> TrajectoryBatch:
    """Sample ``n_samples`` independent trajectories.

    Trajectory ``i`` is exactly ``sample_trajectory(model,
    trajectory_seed(base_seed, i))``; ``workers`` only changes how the work
    is spread over processes, never the result.
    """
    if n_samples < 1:
        raise ValidationError("need at least one sample")
    bounds = [(s, min(s + CHUNK, n_samples)) for s in range(0, n_samples, CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_chunk, *zip(*[
                (model, base_seed, a, b, verify) for a, b in bounds])))
    else:
        parts = [_sample_chunk(model, base_seed, a, b, verify) for a, b in bounds]
    seeds, outcomes, weights = (np.concatenate(x) for x in zip(*parts))
    return TrajectoryBatch(int(base_seed), seeds, outcomes, weights, model.schedule)


def format_outcomes(outcomes) -> str:
    return ";".join(str(int(z)) for z in outcomes)


def write_trajectory_csv(batch: TrajectoryBatch, stream) -> None:
    """One row per trajectory: ``seed,outcomes,weight`` with a header."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["seed", "outcomes", "weight"])
    for seed, row, weight in zip(batch.seeds, batch.outcomes, batch.weights):
        w.writerow([int(seed), format_outcomes(row), repr(float(weight))])


def read_trajectory_csv(stream) -> list[tuple[int, tuple[int, ...], float]]:
    rows = []
    for rec in csv.DictReader(stream):
        outs = tuple(int(z) for z in rec["outcomes"].split(";")) if rec["outcomes"] else ()
        rows.append((int(rec["seed"]), outs, float(rec["weight"])))
    return rows
