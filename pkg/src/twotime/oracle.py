"""Brute-force reference results.

Everything here is computed the slow, obvious way from the model's raw
ingredients and the primitives in :mod:`twotime.linalg` only: each record's
history is rebuilt from scratch, with propagators recomputed per interval.
Nothing is shared with :mod:`twotime.forward` or :mod:`twotime.engine`, so
agreement between the two is evidence rather than tautology.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ValidationError
from .linalg import as_matrix, propagator, trace_product

CAP = 10**6


@dataclass
class ExactDistribution:
    records: list
    probabilities: np.ndarray
    weights: np.ndarray
    denominator: float

    def as_dict(self) -> dict:
        return dict(zip(self.records, self.probabilities))


def _collapse_ops(model):
    w = np.asarray(model.family.grid.weights, dtype=float)
    return [math.sqrt(wa) * as_matrix(op) for wa, op in zip(w, model.family.operators)]


def naive_weight(model, outcomes) -> float:
    """``tr[rho_F pi_n]`` for one record, rebuilt from nothing."""
    ts = model.schedule.times
    ops = _collapse_ops(model)
    rho = as_matrix(model.rho_I).copy()
    for k in range(1, len(ts)):
        u = as_matrix(propagator(model.H, ts[k] - ts[k - 1]))
        rho = u @ rho @ u.conj().T
        if k < len(ts) - 1:
            op = ops[outcomes[k - 1]]
            rho = op @ rho @ op
    return trace_product(model.rho_F, rho).real


def enumerate_records(model) -> ExactDistribution:
    """Every record with its probability under both boundary conditions."""
    n_events = len(model.schedule.times) - 2
    m = len(model.family.operators)
    if m ** n_events > CAP:
        raise CapacityError(f"{m ** n_events} records exceed the oracle cap {CAP}")
    records = list(itertools.product(range(m), repeat=n_events))
    weights = np.array([naive_weight(model, r) for r in records])
    den = float(weights.sum())
    if den <= 0:
        raise ValidationError("boundary conditions admit no record")
    return ExactDistribution(records, weights / den, weights, den)


def draw(exact: ExactDistribution, n: int, seed: int) -> list:
    """``n`` records sampled directly from an exact distribution."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(exact.records), size=n, p=exact.probabilities)
    return [exact.records[i] for i in idx]


@dataclass
class EmpiricalReport:
    tv_distance: float
    chi2: float
    dof: int
    n: float


def compare_counts(counts, exact: ExactDistribution) -> EmpiricalReport:
    """Compare (possibly fractional) record counts with an exact distribution.

    Categories whose expected count is below 5 are pooled into one.
    """
    total = float(sum(counts.values()))
    if total <= 0:
        raise ValidationError("no samples to compare")
    probs = exact.as_dict()
    keys = set(probs) | set(counts)
    tv = 0.5 * sum(abs(counts.get(k, 0) / total - probs.get(k, 0.0)) for k in keys)

    chi2, cats = 0.0, 0
    pooled_obs = pooled_exp = 0.0
    for k in sorted(keys):
        expected = probs.get(k, 0.0) * total
        observed = counts.get(k, 0)
        if expected < 5:
            pooled_obs += observed
            pooled_exp += expected
            continue
        chi2 += (observed - expected) ** 2 / expected
        cats += 1
    if pooled_exp > 0:
        chi2 += (pooled_obs - pooled_exp) ** 2 / pooled_exp
        cats += 1
    return EmpiricalReport(tv, chi2, max(cats - 1, 0), total)


def compare_empirical(samples, exact: ExactDistribution) -> EmpiricalReport:
    """Total-variation distance and Pearson chi-square of sampled records."""
    if len(samples) == 0:
        raise ValidationError("empty sample set")
    return compare_counts(Counter(tuple(int(z) for z in s) for s in samples), exact)


def estimate_denominator(model, n_samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate of ``P(rho_F | rho_I)`` and its standard error.

    Trajectories follow the forward dynamics alone; each contributes
    ``tr[rho_F rho_n]``.  This is the fallback when exact enumeration is
    beyond reach.
    """
    rng = np.random.default_rng(seed)
    ts = model.schedule.times
    ops = _collapse_ops(model)
    values = np.empty(n_samples)
    for s in range(n_samples):
        rho = as_matrix(model.rho_I).copy()
        for k in range(1, len(ts)):
            u = as_matrix(propagator(model.H, ts[k] - ts[k - 1]))
            rho = u @ rho @ u.conj().T
            if k < len(ts) - 1:
                p = np.array([trace_product(op @ op, rho).real for op in ops])
                a = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
                a = min(a, len(ops) - 1)
                rho = ops[a] @ rho @ ops[a]
                rho = rho / np.trace(rho).real
        values[s] = trace_product(model.rho_F, rho).real
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n_samples))
