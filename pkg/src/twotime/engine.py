"""Record probabilities under an initial state and a final POVM condition.

Forward quantities condition on the past (``rho_I`` and earlier outcomes);
their backward mirrors condition on the future (``rho_F`` and later
outcomes) and are expressed in the reversed labelling, where backward event
``j`` is original event ``n - j``.
"""

from __future__ import annotations

import csv
import itertools
import threading
from dataclasses import dataclass

import numpy as np

from .errors import (CapacityError, IncompatibleBoundaryError, ModelValidityError, NumericalError,
                     ValidationError)
from .forward import collapse_distribution, evolve_history, format_outcomes
from .linalg import DEFAULT_TOL, DensityOperator, conjugate_in_basis, real_probability
from .model import TwoTimeModel, reverse_record

ENUMERATION_CAP = 10**6
ROUTE_TOL = 1e-10

_cache: dict = {}
_cache_lock = threading.Lock()


def _cached(key, compute):
    with _cache_lock:
        if key in _cache:
            return _cache[key]
    value = compute()
    with _cache_lock:
        if len(_cache) > 512:
            _cache.clear()
        _cache[key] = value
    return value


def _check_cap(count: int, what: str = "records") -> None:
    if count > ENUMERATION_CAP:
        raise CapacityError(
            f"exact enumeration needs {count} {what} (cap {ENUMERATION_CAP}); "
            "estimate with oracle.estimate_denominator (Monte Carlo) instead")


def _clamp(value: complex, what: str) -> float:
    x = real_probability(value, what)
    if x < -1e-12:
        raise ModelValidityError(f"{what} is negative ({x:.3e})")
    return max(x, 0.0)


# -- enumeration ----------------------------------------------------------------

def _suffix_weights(model: TwoTimeModel, post: np.ndarray, k: int) -> np.ndarray:
    """``tr[rho_F pi_n]`` for every completion of events ``k..n-1``.

    ``post`` is the history just after event ``k - 1``.  Completions are
    returned in lexicographic order, earliest event most significant.
    """
    n = model.n
    kraus = model.family.kraus
    if k > n - 1:
        v = model.steps[n - 1]
        return np.array([np.einsum("ij,ji->", model.rho_F.matrix, v @ post @ v.conj().T)])
    v = model.steps[k - 1]
    y = v @ post @ v.conj().T
    if k == n - 1:
        vn = model.steps[n - 1]
        g = kraus @ (vn.conj().T @ model.rho_F.matrix @ vn) @ kraus
        return np.einsum("aij,ji->a", g, y)
    children = kraus @ y @ kraus
    return np.concatenate([_suffix_weights(model, c, k + 1) for c in children])


def record_weights(model: TwoTimeModel) -> np.ndarray:
    """Joint weights ``tr[rho_F pi_n]`` of every record, lexicographic order."""
    _check_cap(model.num_records)

    def compute():
        w = _suffix_weights(model, model.rho_I.matrix, 1)
        if np.max(np.abs(w.imag), initial=0.0) > DEFAULT_TOL.imag:
            raise ModelValidityError("record weights have non-negligible imaginary parts")
        w = w.real
        if np.min(w) < -1e-12:
            raise ModelValidityError(f"negative record weight {np.min(w):.3e}")
        w = np.clip(w, 0.0, None)
        w.setflags(write=False)
        return w

    return _cached(("weights", model.key), compute)


def denominator(model: TwoTimeModel) -> float:
    """Sum of joint weights over all records, i.e. ``P(rho_F | rho_I)``."""
    return float(np.sum(record_weights(model)))


def all_records(model: TwoTimeModel):
    return itertools.product(range(model.m), repeat=model.schedule.num_events)


# -- record probabilities ------------------------------------------------------

def joint_record_weight(model: TwoTimeModel, record) -> float:
    """``tr[rho_F pi_n]`` for one record, quadrature weights included."""
    rec = model.record(record)
    pi = evolve_history(model.rho_I.matrix, model.H.matrix, model.schedule.times,
                        model.steps, model.family.kraus, rec.outcomes, model.schedule.times[-1])
    return _clamp(complex(np.einsum("ij,ji->", model.rho_F.matrix, pi)), "record weight")


def record_probability(model: TwoTimeModel, record) -> float:
    """Probability of a complete record given both boundary conditions."""
    num = joint_record_weight(model, record)
    den = denominator(model)
    if den <= DEFAULT_TOL.zero:
        raise IncompatibleBoundaryError(
            f"no record is compatible with the boundary conditions (denominator {den:.3e})")
    return num / den


def probability_table(model: TwoTimeModel):
    """``(outcomes, weight, probability)`` for every record."""
    w = record_weights(model)
    den = float(np.sum(w))
    if den <= DEFAULT_TOL.zero:
        raise IncompatibleBoundaryError(
            f"no record is compatible with the boundary conditions (denominator {den:.3e})")
    return [(rec, float(wi), float(wi / den)) for rec, wi in zip(all_records(model), w)]


def write_probability_csv(rows, stream) -> None:
    out = csv.writer(stream, lineterminator="\n")
    out.writerow(["outcomes", "weight", "probability"])
    for rec, weight, prob in rows:
        out.writerow([format_outcomes(rec), repr(float(weight)), repr(float(prob))])


# -- backward histories and the symmetry theorem --------------------------------

def backward_history(model: TwoTimeModel, record, t_bar: float) -> DensityOperator:
    """Backward history ``pi_bar`` at reversed time ``t_bar``.

    Built exactly like the forward history, starting from ``rho_F*`` at
    ``-t_n`` and applying the reversed record on the reversed schedule.
    """
    rec = model.record(record)
    rev = reverse_record(rec)
    pi = evolve_history(conjugate_in_basis(model.rho_F.matrix), model.H.matrix,
                        rev.schedule.times, model.steps[::-1], model.family.kraus,
                        rev.outcomes, t_bar)
    return DensityOperator(pi, "unnormalized_history", model.space)


def symmetry_weights(model: TwoTimeModel, record) -> tuple[complex, complex]:
    """Forward weight ``tr[rho_F pi_n]`` and backward ``tr[rho_I* pi_bar_n]``."""
    rec = model.record(record)
    ts = model.schedule.times
    pi = evolve_history(model.rho_I.matrix, model.H.matrix, ts, model.steps,
                        model.family.kraus, rec.outcomes, ts[-1])
    pib = backward_history(model, rec, -ts[0]).matrix
    fwd = complex(np.einsum("ij,ji->", model.rho_F.matrix, pi))
    bwd = complex(np.einsum("ij,ji->", conjugate_in_basis(model.rho_I.matrix), pib))
    return fwd, bwd


def time_symmetry_residual(model: TwoTimeModel, record) -> float:
    """``|tr[rho_F pi_n] - tr[rho_I* pi_bar_n(reversed record)]|``.

    Vanishes up to roundoff whenever ``H`` and the collapse operators are
    real symmetric in the distinguished basis.
    """
    fwd, bwd = symmetry_weights(model, record)
    return abs(fwd - bwd)


# -- conditionals ---------------------------------------------------------------

@dataclass
class ConditionalDistribution:
    """Distribution of one outcome with its unnormalized numerators.

    ``denominator`` is the joint weight of the conditioning data together
    with ``rho_F``; ``route_gap`` is the largest difference between the
    enumeration and contraction evaluations of ``probabilities``.
    """

    event: int
    direction: str
    prefix: tuple[int, ...]
    probabilities: np.ndarray
    numerators: np.ndarray
    denominator: float
    route_gap: float


def _channel(kraus: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("aij,jk,akl->il", kraus, x, kraus)


def _normalize(numerators: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    den = float(np.sum(numerators))
    if den <= DEFAULT_TOL.zero:
        raise IncompatibleBoundaryError(f"{what} has zero weight ({den:.3e})")
    return numerators / den, den


def _agree(a: np.ndarray, b: np.ndarray) -> float:
    gap = float(np.max(np.abs(a - b)))
    if gap > ROUTE_TOL:
        raise NumericalError(f"enumeration and contraction routes disagree by {gap:.3e}")
    return gap


def _forward_event(model: TwoTimeModel, prefix) -> tuple[int, tuple[int, ...]]:
    prefix = tuple(int(z) for z in prefix)
    j = len(prefix) + 1
    if j > model.n - 1:
        raise ValidationError(f"prefix of length {len(prefix)} leaves no event to predict")
    if any(not 0 <= z < model.m for z in prefix):
        raise ValidationError("prefix outcome index out of range")
    return j, prefix


def pre_collapse_history(model: TwoTimeModel, prefix) -> np.ndarray:
    """Forward history at ``t_j`` (before collapse ``j``) for outcomes ``z_1..z_{j-1}``."""
    j, prefix = _forward_event(model, prefix)
    return evolve_history(model.rho_I.matrix, model.H.matrix, model.schedule.times,
                          model.steps, model.family.kraus, prefix, model.schedule.times[j])


def future_effect(model: TwoTimeModel, j: int) -> np.ndarray:
    """``rho_F`` pulled back to just after ``t_j``, summed over later outcomes.

    This is the adjoint-channel image of ``rho_F``; under the symmetry
    conditions it equals the conjugate of the aggregated backward history.
    """
    def compute():
        kraus = model.family.kraus
        v = model.steps[model.n - 1]
        e = v.conj().T @ model.rho_F.matrix @ v
        for k in range(model.n - 1, j, -1):
            e = _channel(kraus, e)
            v = model.steps[k - 1]
            e = v.conj().T @ e @ v
        return e

    return _cached(("effect", model.key, j), compute)


def conditional_next_collapse(model: TwoTimeModel, prefix=()) -> ConditionalDistribution:
    """Distribution of ``z_j`` given ``rho_I``, ``rho_F`` and ``z_1..z_{j-1}``.

    ``j = len(prefix) + 1``.  Evaluated twice: by summing complete-record
    weights over every future completion, and by contracting the pre-collapse
    history with the aggregated future; the routes must agree to 1e-10.
    """
    j, prefix = _forward_event(model, prefix)
    _check_cap(model.m ** (model.n - j), "completions")
    kraus = model.family.kraus
    rho_j = pre_collapse_history(model, prefix)

    # route 1: enumerate every completion
    v = model.steps[j - 1]
    post_prev = model.rho_I.matrix if j == 1 else None
    if post_prev is None:
        post_prev = evolve_history(model.rho_I.matrix, model.H.matrix, model.schedule.times,
                                   model.steps, model.family.kraus, prefix,
                                   model.schedule.times[j - 1])
        kr = kraus[prefix[-1]]
        post_prev = kr @ post_prev @ kr
    enumerated = np.array([
        np.sum(_suffix_weights(model, c, j + 1))
        for c in kraus @ (v @ post_prev @ v.conj().T) @ kraus])

    # route 2: contract with the aggregated future
    e = future_effect(model, j)
    contracted = np.einsum("ij,ajk,kl,ali->a", e, kraus, rho_j, kraus)

    num_c = np.array([_clamp(complex(x), "conditional weight") for x in contracted])
    num_e = np.array([_clamp(complex(x), "conditional weight") for x in enumerated])
    probs, den = _normalize(num_c, "conditioning data")
    gap = _agree(probs, _normalize(num_e, "conditioning data")[0])
    return ConditionalDistribution(j, "forward", prefix, probs, num_c, den, gap)


def _backward_event(model: TwoTimeModel, prefix_bar) -> tuple[int, int, tuple[int, ...]]:
    prefix_bar = tuple(int(z) for z in prefix_bar)
    j = len(prefix_bar) + 1
    if j > model.n - 1:
        raise ValidationError(f"prefix of length {len(prefix_bar)} leaves no event to retrodict")
    if any(not 0 <= z < model.m for z in prefix_bar):
        raise ValidationError("prefix outcome index out of range")
    return j, model.n - j, prefix_bar


def backward_pre_collapse_history(model: TwoTimeModel, prefix_bar) -> np.ndarray:
    """Backward history at ``t_bar_j`` given the later outcomes ``z_bar_1..z_bar_{j-1}``."""
    j, _, prefix_bar = _backward_event(model, prefix_bar)
    times = model.schedule.reversed().times
    return evolve_history(conjugate_in_basis(model.rho_F.matrix), model.H.matrix, times,
                          model.steps[::-1], model.family.kraus, prefix_bar, times[j])


def past_aggregate(model: TwoTimeModel, e: int) -> np.ndarray:
    """Forward history at ``t_e`` summed over all outcomes ``z_1..z_{e-1}``."""
    def compute():
        kraus = model.family.kraus
        p = model.rho_I.matrix
        for k in range(1, e):
            v = model.steps[k - 1]
            p = _channel(kraus, v @ p @ v.conj().T)
        v = model.steps[e - 1]
        return v @ p @ v.conj().T

    return _cached(("past", model.key, e), compute)


def conditional_previous_collapse(model: TwoTimeModel, prefix_bar=()) -> ConditionalDistribution:
    """Backward mirror of :func:`conditional_next_collapse`.

    Distribution of ``z_bar_j`` (original event ``n - j``) given ``rho_I``,
    ``rho_F`` and the later outcomes ``z_bar_1..z_bar_{j-1}``, i.e.
    ``z_{n-1}, ..., z_{n-j+1}``.
    """
    j, e, prefix_bar = _backward_event(model, prefix_bar)
    _check_cap(model.m ** e, "histories")
    kraus = model.family.kraus
    later = prefix_bar[::-1]  # z_{e+1} .. z_{n-1}

    # route 1: enumerate every past, evaluating complete forward records
    enumerated = np.zeros(model.m, dtype=complex)
    for past in itertools.product(range(model.m), repeat=e - 1):
        for a in range(model.m):
            outs = past + (a,) + later
            pi = evolve_history(model.rho_I.matrix, model.H.matrix, model.schedule.times,
                                model.steps, kraus, outs, model.schedule.times[-1])
            enumerated[a] += np.einsum("ij,ji->", model.rho_F.matrix, pi)

    # route 2: aggregated past against rho_F pulled back through the fixed future
    g = model.rho_F.matrix
    for k in range(model.n, e, -1):
        v = model.steps[k - 1]
        g = v.conj().T @ g @ v
        if k - 1 > e:
            kr = kraus[later[k - 2 - e]]
            g = kr @ g @ kr
    p = past_aggregate(model, e)
    contracted = np.einsum("ij,ajk,kl,ali->a", g, kraus, p, kraus)

    num_c = np.array([_clamp(complex(x), "conditional weight") for x in contracted])
    num_e = np.array([_clamp(complex(x), "conditional weight") for x in enumerated])
    probs, den = _normalize(num_c, "conditioning data")
    gap = _agree(probs, _normalize(num_e, "conditioning data")[0])
    return ConditionalDistribution(j, "backward", prefix_bar, probs, num_c, den, gap)


# -- shielding and Born analysis ------------------------------------------------

def _direction(direction: str) -> str:
    d = {"forward": "forward", "fwd": "forward", "backward": "backward", "bwd": "backward"}.get(direction)
    if d is None:
        raise ValidationError(f"direction must be forward/fwd or backward/bwd, got {direction!r}")
    return d


def shielding_operator(model: TwoTimeModel, j: int, direction: str = "forward") -> np.ndarray:
    """Opposite-boundary history at event ``j`` summed over the events beyond it.

    Forward: the backward history at ``t_bar_{n-j}`` summed over
    ``z_bar_1..z_bar_{n-j-1}``.  Backward: the forward history at
    ``t_{n-j}`` summed over ``z_1..z_{n-j-1}``.
    """
    direction = _direction(direction)
    if not 1 <= j <= model.n - 1:
        raise ValidationError(f"event index {j} outside 1..{model.n - 1}")

    def compute():
        kraus = model.family.kraus
        if direction == "forward":
            x, steps = conjugate_in_basis(model.rho_F.matrix), model.steps[::-1]
        else:
            x, steps = model.rho_I.matrix, model.steps
        for k in range(model.n - j - 1):
            v = steps[k]
            x = _channel(kraus, v @ x @ v.conj().T)
        v = steps[model.n - j - 1]
        return v @ x @ v.conj().T

    return _cached(("shield", model.key, j, direction), compute)


def _proportionality_residual(m: np.ndarray, proj: np.ndarray | None = None) -> float:
    if proj is not None:
        m = proj @ m @ proj
        ident, rank = proj, float(np.trace(proj).real)
    else:
        ident, rank = np.eye(m.shape[0]), float(m.shape[0])
    tr = np.trace(m).real
    if tr <= DEFAULT_TOL.zero:
        raise IncompatibleBoundaryError("shielding operator has zero trace")
    return float(np.max(np.abs(m / (tr / rank) - ident)))


def shielding_residual(model: TwoTimeModel, j: int, direction: str = "forward") -> float:
    """How far the aggregated opposite boundary is from proportional to 1."""
    return _proportionality_residual(shielding_operator(model, j, direction))


def _reachable_projector(kraus: np.ndarray, rho: np.ndarray) -> np.ndarray:
    s = _channel(kraus, rho)
    s = 0.5 * (s + s.conj().T)
    evals, vecs = np.linalg.eigh(s)
    keep = evals > 1e-12 * max(evals.max(), DEFAULT_TOL.zero)
    v = vecs[:, keep]
    return v @ v.conj().T


@dataclass
class BornAnalysis:
    """Conditional outcome distribution at one event next to the Born rule.

    ``weak_shielding_residual`` is the shielding residual restricted to the
    span of the post-collapse states reachable at this event.
    """

    event_index: int
    direction: str
    prefix: tuple[int, ...]
    conditional: np.ndarray
    born: np.ndarray
    deviation: float
    shielding_residual: float
    weak_shielding_residual: float
    denominator: float

    def to_json(self) -> dict:
        return {
            "j": self.event_index,
            "direction": self.direction,
            "prefix": list(self.prefix),
            "conditional": [float(x) for x in self.conditional],
            "born": [float(x) for x in self.born],
            "deviation": self.deviation,
            "shielding_residual": self.shielding_residual,
            "weak_shielding_residual": self.weak_shielding_residual,
            "denominator": self.denominator,
        }


def born_analysis(model: TwoTimeModel, j: int, direction: str = "forward",
                  prefix=None) -> BornAnalysis:
    """Compare the two-time conditional at event ``j`` with the Born rule.

    ``prefix`` holds the conditioning outcomes: ``z_1..z_{j-1}`` forward or
    ``z_bar_1..z_bar_{j-1}`` backward; it defaults to all zeros.
    """
    direction = _direction(direction)
    if not 1 <= j <= model.n - 1:
        raise ValidationError(f"event index {j} outside 1..{model.n - 1}")
    prefix = (0,) * (j - 1) if prefix is None else tuple(int(z) for z in prefix)
    if len(prefix) != j - 1:
        raise ValidationError(f"event {j} needs a prefix of length {j - 1}, got {len(prefix)}")
    if direction == "forward":
        cond = conditional_next_collapse(model, prefix)
        rho = pre_collapse_history(model, prefix)
    else:
        cond = conditional_previous_collapse(model, prefix)
        rho = backward_pre_collapse_history(model, prefix)
    tr = real_probability(complex(np.trace(rho)), "history trace")
    if tr <= DEFAULT_TOL.zero:
        raise IncompatibleBoundaryError("conditioning outcomes have zero weight")
    born = collapse_distribution(rho / tr, model.family)
    shield = shielding_operator(model, j, direction)
    proj = _reachable_projector(model.family.kraus, rho / tr)
    return BornAnalysis(
        event_index=j, direction=direction, prefix=prefix,
        conditional=cond.probabilities, born=born,
        deviation=float(np.max(np.abs(cond.probabilities - born))),
        shielding_residual=_proportionality_residual(shield),
        weak_shielding_residual=_proportionality_residual(shield.conj(), proj),
        denominator=cond.denominator)
