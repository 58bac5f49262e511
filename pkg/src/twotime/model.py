"""Collapse-operator families, event schedules, records and two-time models."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .linalg import (DEFAULT_TOL, DensityOperator, HermitianOperator, HilbertSpace,
                     as_matrix, conjugate_in_basis, propagator)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OutcomeGrid:
    """Outcome values ``points`` with positive quadrature ``weights``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.size < 1:
            raise ValidationError("an outcome grid needs at least one point")
        if w.shape != pts.shape:
            raise ValidationError(f"{pts.size} points but {w.size} weights")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValidationError("grid points and weights must be finite")
        if np.any(w <= 0):
            raise ValidationError("quadrature weights must be positive")
        if np.unique(pts).size != pts.size:
            raise ValidationError("outcome points must be distinct")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def m(self) -> int:
        return self.points.size

    def __eq__(self, other):
        if not isinstance(other, OutcomeGrid):
            return NotImplemented
        return (np.array_equal(self.points, other.points)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None


def completeness_residual(family: CollapseFamily) -> float:
    """Max entrywise deviation of ``sum_a w_a L_a^2`` from the identity."""
    total = np.einsum("a,aij,ajk->ik", family.grid.weights, family.stack, family.stack)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


class CollapseFamily:
    """A finite family of Hermitian collapse operators on an outcome grid.

    ``operators[a]`` is applied when outcome ``a`` occurs.  The family must
    satisfy the completeness relation ``sum_a w_a L_a^2 = 1``; pass
    ``check=False`` to build a deliberately broken family (e.g. to test
    that :func:`completeness_residual` notices).

    ``recipe`` records how the family was built so it can be written back to
    a model config unchanged.
    """

    def __init__(self, grid: OutcomeGrid, operators: Sequence, space: HilbertSpace | None = None,
                 *, check: bool = True, recipe: dict | None = None):
        if len(operators) != grid.m:
            raise ValidationError(f"{len(operators)} operators for {grid.m} outcomes")
        ops = tuple(op if isinstance(op, HermitianOperator) and space is None
                    else HermitianOperator(as_matrix(op), space) for op in operators)
        space = space or ops[0].space
        if any(op.dim != space.dim for op in ops):
            raise ValidationError("collapse operators have inconsistent dimensions")
        self.grid = grid
        self.operators = ops
        self.space = space
        self.recipe = recipe
        self.stack = _readonly(np.stack([op.matrix for op in ops]))
        self.kraus = _readonly(np.sqrt(grid.weights)[:, None, None] * self.stack)
        # w_a L_a^2, the effect of outcome a
        self.effects = _readonly(np.einsum("a,aij,ajk->aik", grid.weights, self.stack, self.stack))
        if check:
            res = completeness_residual(self)
            if res > DEFAULT_TOL.complete:
                raise ValidationError(
                    f"collapse family is not complete (residual {res:.3e})")

    @property
    def m(self) -> int:
        return self.grid.m

    @property
    def dim(self) -> int:
        return self.space.dim

    def with_weights(self, weights) -> CollapseFamily:
        """Same operators, new quadrature weights, completeness not enforced."""
        grid = OutcomeGrid(self.grid.points, weights)
        return CollapseFamily(grid, self.operators, check=False, recipe=None)

    def __repr__(self):
        kind = (self.recipe or {}).get("kind", "explicit")
        return f"CollapseFamily(kind={kind!r}, m={self.m}, dim={self.dim})"


def build_projective_family(projectors: Sequence) -> CollapseFamily:
    """Family of orthogonal projectors with unit weights.

    Raises ``ValidationError`` unless the projectors are idempotent,
    mutually orthogonal and resolve the identity.
    """
    tol = DEFAULT_TOL.orthogonal
    ps = [as_matrix(p) for p in projectors]
    if not ps:
        raise ValidationError("need at least one projector")
    d = ps[0].shape[0]
    for a, p in enumerate(ps):
        if p.shape != (d, d):
            raise ValidationError("projectors have inconsistent dimensions")
        res = np.max(np.abs(p @ p - p))
        if res > tol:
            raise ValidationError(f"projector {a} is not idempotent (residual {res:.3e})")
    for a in range(len(ps)):
        for b in range(a + 1, len(ps)):
            res = np.max(np.abs(ps[a] @ ps[b]))
            if res > tol:
                raise ValidationError(
                    f"projectors {a} and {b} are not orthogonal (overlap {res:.3e})")
    res = np.max(np.abs(sum(ps) - np.eye(d)))
    if res > tol:
        raise ValidationError(f"projectors do not sum to the identity (residual {res:.3e})")
    grid = OutcomeGrid(np.arange(len(ps)), np.ones(len(ps)))
    recipe = {"kind": "projective", "projectors": [p.copy() for p in ps]}
    return CollapseFamily(grid, ps, recipe=recipe)


def lattice_weights(lattice: np.ndarray) -> np.ndarray:
    """Cell widths of a strictly increasing 1-D lattice (Riemann-sum measure).

    Interior points own half the gap to each neighbour; the end points
    mirror their single neighbouring half-gap, so a uniform lattice of
    spacing ``h`` gets ``h`` everywhere.  A one-point lattice gets weight 1.
    """
    if lattice.size == 1:
        return np.ones(1)
    half = 0.5 * np.diff(lattice)
    left = np.concatenate([half[:1], half])
    right = np.concatenate([half, half[-1:]])
    return left + right


def build_grw_family(lattice: Sequence[float], x_op, alpha: float) -> CollapseFamily:
    """Discretized one-dimensional GRW localization family.

    ``L_a = exp(-(alpha/2) (x - z_a)^2)`` for each lattice point ``z_a``,
    renormalized so completeness holds exactly for every position
    eigenstate.

    Parameters
    ----------
    lattice : sequence of float
        Strictly increasing outcome positions; must cover the spectrum of
        ``x_op``.
    x_op : array_like
        Position operator, diagonal in the distinguished basis.
    alpha : float
        Localization strength (inverse length squared).
    """
    z = np.asarray(lattice, dtype=float).reshape(-1)
    x_mat = as_matrix(x_op)
    if alpha <= 0 or not np.isfinite(alpha):
        raise ValidationError(f"alpha must be positive, got {alpha!r}")
    off = x_mat - np.diag(np.diag(x_mat))
    if np.max(np.abs(off), initial=0.0) > DEFAULT_TOL.herm:
        raise ValidationError("position operator must be diagonal in the distinguished basis")
    diag = np.diag(x_mat)
    if np.max(np.abs(diag.imag), initial=0.0) > DEFAULT_TOL.herm:
        raise ValidationError("position operator must have real eigenvalues")
    x = diag.real
    if z.size < 1 or np.any(np.diff(z) <= 0):
        raise ValidationError("lattice must be strictly increasing")
    if z[0] > x.min() or z[-1] < x.max():
        raise ValidationError(
            f"lattice [{z[0]}, {z[-1]}] does not cover positions [{x.min()}, {x.max()}]")
    w = lattice_weights(z)

    raw = (alpha / np.pi) ** 0.25 * np.exp(-0.5 * alpha * (x[None, :] - z[:, None]) ** 2)
    sums = w @ raw**2
    if sums.min() <= 0 or sums.max() / sums.min() > 1e8:
        cond = np.inf if sums.min() <= 0 else sums.max() / sums.min()
        raise ValidationError(
            f"lattice too coarse or narrow to renormalize (condition number {cond:.3e})")
    c = 1.0 / np.sqrt(sums.mean())
    scaled = c * raw
    diag_ops = scaled / np.sqrt(w @ scaled**2)[None, :]
    ops = [np.diag(row).astype(complex) for row in diag_ops]
    recipe = {"kind": "grw", "lattice": z.copy(), "positions": x.copy(), "alpha": float(alpha)}
    return CollapseFamily(OutcomeGrid(z, w), ops, recipe=recipe)


@dataclass(frozen=True)
class SymmetryReport:
    h_asym: float
    l_asym: float
    passed: bool


def check_symmetry_conditions(H, family: CollapseFamily) -> SymmetryReport:
    """Test whether ``H`` and every ``L_a`` are symmetric matrices.

    For Hermitian operators, symmetric means real, which is exactly what
    makes ``U(t)* = U(-t)`` and ``L* = L`` in the distinguished basis.
    """
    h = as_matrix(H)
    h_asym = float(np.max(np.abs(h - h.T)))
    l_asym = float(np.max(np.abs(family.stack - family.stack.transpose(0, 2, 1))))
    tol = DEFAULT_TOL.sym
    return SymmetryReport(h_asym, l_asym, h_asym <= tol and l_asym <= tol)


@dataclass(frozen=True)
class EventSchedule:
    """Strictly increasing times ``t_0 < ... < t_n``; interior ones are events."""

    times: tuple[float, ...]

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        if len(ts) < 2:
            raise ValidationError("a schedule needs at least the two boundary times")
        if not all(np.isfinite(ts)):
            raise ValidationError("schedule times must be finite")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError(f"schedule times must be strictly increasing: {ts}")
        object.__setattr__(self, "times", ts)

    @property
    def n(self) -> int:
        return len(self.times) - 1

    @property
    def num_events(self) -> int:
        return len(self.times) - 2

    def reversed(self) -> EventSchedule:
        return EventSchedule(tuple(-t for t in reversed(self.times)))


@dataclass(frozen=True)
class CollapseRecord:
    """Outcome indices ``(z_1, ..., z_{n-1})`` on a schedule."""

    outcomes: tuple[int, ...]
    schedule: EventSchedule

    def __post_init__(self):
        outs = tuple(int(z) for z in self.outcomes)
        if len(outs) != self.schedule.num_events:
            raise ValidationError(
                f"record has {len(outs)} outcomes for {self.schedule.num_events} events")
        if any(z < 0 for z in outs):
            raise ValidationError("outcome indices must be nonnegative")
        object.__setattr__(self, "outcomes", outs)


def reverse_record(record: CollapseRecord) -> CollapseRecord:
    """Relabel a record for the time-reversed description.

    Times map to ``-t_{n-j}`` and outcomes to ``z_{n-j}``; this is an
    involution.
    """
    return CollapseRecord(record.outcomes[::-1], record.schedule.reversed())


class TwoTimeModel:
    """Hamiltonian, collapse family, schedule and the boundary pair.

    ``rho_I`` is the initial state at ``t_0``; ``rho_F`` is the POVM element
    the final state is conditioned on at ``t_n``.
    """

    def __init__(self, H, family: CollapseFamily, schedule: EventSchedule | Sequence[float],
                 rho_I, rho_F, space: HilbertSpace | None = None):
        space = space or family.space
        if not isinstance(schedule, EventSchedule):
            schedule = EventSchedule(tuple(schedule))
        self.space = space
        self.H = HermitianOperator(as_matrix(H), space)
        self.family = family
        self.schedule = schedule
        self.rho_I = DensityOperator(as_matrix(rho_I), "state", space)
        self.rho_F = DensityOperator(as_matrix(rho_F), "povm_element", space)
        if family.dim != space.dim:
            raise ValidationError("family and model live on different spaces")
        ts = schedule.times
        # V_k = U(t_k - t_{k-1}) for k = 1..n
        self.steps = tuple(propagator(self.H, b - a).matrix for a, b in zip(ts, ts[1:]))
        self._key = None

    @property
    def n(self) -> int:
        return self.schedule.n

    @property
    def m(self) -> int:
        return self.family.m

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def num_records(self) -> int:
        return self.m ** self.schedule.num_events

    @property
    def key(self) -> str:
        """Value-equality fingerprint, used to key caches."""
        if self._key is None:
            h = hashlib.sha256()
            for arr in (self.H.matrix, self.family.kraus, self.rho_I.matrix,
                        self.rho_F.matrix, np.asarray(self.schedule.times)):
                h.update(np.ascontiguousarray(arr).tobytes())
                h.update(b"|")
            self._key = h.hexdigest()
        return self._key

    def record(self, outcomes) -> CollapseRecord:
        """Bind ``outcomes`` to this model's schedule, checking index ranges."""
        if isinstance(outcomes, CollapseRecord):
            if outcomes.schedule != self.schedule:
                raise ValidationError("record belongs to a different schedule")
            rec = outcomes
        else:
            rec = CollapseRecord(tuple(outcomes), self.schedule)
        if any(z >= self.m for z in rec.outcomes):
            raise ValidationError(f"outcome index out of range for {self.m} outcomes")
        return rec

    def reversed(self) -> TwoTimeModel:
        """The same physics described in reversed time.

        Boundaries swap and are conjugated; ``rho_F*`` is normalized to a
        state, which leaves every conditioned probability unchanged.
        """
        rf = conjugate_in_basis(self.rho_F.matrix)
        tr = np.trace(rf).real
        if tr <= DEFAULT_TOL.zero:
            raise ValidationError("cannot reverse a model whose final condition is zero")
        return TwoTimeModel(self.H, self.family, self.schedule.reversed(),
                            rf / tr, conjugate_in_basis(self.rho_I.matrix), self.space)

    def __repr__(self):
        return (f"TwoTimeModel(dim={self.dim}, m={self.m}, n={self.n}, "
                f"times={self.schedule.times})")
