"""Dense complex linear algebra on a fixed finite Hilbert space.

Operators are thin, immutable wrappers around ``numpy`` arrays.  Every
wrapper implements ``__array__`` so the functions here (and the rest of the
package) accept either a wrapper or a plain array.  The distinguished basis
used for complex conjugation is the storage basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ModelValidityError, NumericalError, ValidationError, ZeroWeightError


@dataclass(frozen=True)
class Tolerances:
    """Every numerical tolerance used for validation, in one place."""

    herm: float = 1e-12
    unitary: float = 1e-10
    psd: float = 1e-10
    trace: float = 1e-10
    zero: float = 1e-14
    complete: float = 1e-10
    sym: float = 1e-10
    imag: float = 1e-9
    orthogonal: float = 1e-10
    negative_probability: float = 1e-10


DEFAULT_TOL = Tolerances()


def as_matrix(a: Any) -> np.ndarray:
    """Return ``a`` as a square complex ``ndarray`` (no copy if possible)."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    return m


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex, copy=True)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class HilbertSpace:
    """A ``dim``-dimensional space with named distinguished basis states."""

    dim: int
    basis_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError(f"dim must be a positive integer, got {self.dim!r}")
        labels = tuple(str(s) for s in self.basis_labels) or tuple(
            str(i) for i in range(self.dim))
        if len(labels) != self.dim:
            raise ValidationError(
                f"{len(labels)} basis labels given for dimension {self.dim}")
        if len(set(labels)) != len(labels):
            raise ValidationError("basis labels must be distinct")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "basis_labels", labels)


def _space_for(space: HilbertSpace | None, dim: int) -> HilbertSpace:
    if space is None:
        return HilbertSpace(dim)
    if space.dim != dim:
        raise ValidationError(
            f"operator of dimension {dim} does not live on a {space.dim}-dim space")
    return space


@dataclass(frozen=True, eq=False)
class _Operator:
    matrix: np.ndarray
    space: HilbertSpace | None = None

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if not np.all(np.isfinite(m)):
            raise ValidationError("operator has non-finite entries")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "space", _space_for(self.space, m.shape[0]))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.matrix, other.matrix)

    __hash__ = None


def hermiticity_residual(a) -> float:
    m = as_matrix(a)
    return float(np.max(np.abs(m - m.conj().T), initial=0.0))


class HermitianOperator(_Operator):
    """A Hermitian matrix, checked entrywise to ``Tolerances.herm``."""

    def __post_init__(self):
        super().__post_init__()
        res = hermiticity_residual(self.matrix)
        if res > DEFAULT_TOL.herm:
            raise ValidationError(f"operator is not Hermitian (residual {res:.3e})")


class UnitaryOperator(_Operator):
    """A unitary matrix, ``U U^dagger = 1`` to ``Tolerances.unitary``."""

    def __post_init__(self):
        super().__post_init__()
        m = self.matrix
        res = float(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))))
        if res > DEFAULT_TOL.unitary:
            raise ValidationError(f"operator is not unitary (residual {res:.3e})")


@dataclass(frozen=True, eq=False)
class PureState:
    """A nonzero (not necessarily normalized) state vector."""

    amplitudes: np.ndarray
    space: HilbertSpace | None = None

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex, copy=True).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValidationError("state has non-finite amplitudes")
        if np.linalg.norm(v) == 0.0:
            raise ValidationError("zero vector is not a state")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "space", _space_for(self.space, v.size))

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    def density(self) -> DensityOperator:
        v = self.amplitudes / np.linalg.norm(self.amplitudes)
        return DensityOperator(np.outer(v, v.conj()), "state", self.space)


ROLES = ("state", "povm_element", "unnormalized_history")


class DensityOperator(HermitianOperator):
    """A positive operator playing one of three roles.

    ``state``
        positive semidefinite with unit trace.
    ``povm_element``
        eigenvalues in ``[0, 1]`` so that ``{E, 1 - E}`` is a complete POVM.
    ``unnormalized_history``
        positive semidefinite, any nonnegative trace.
    """

    def __init__(self, matrix, role: str = "state", space: HilbertSpace | None = None):
        object.__setattr__(self, "role", role)
        super().__init__(matrix, space)

    def __post_init__(self):
        super().__post_init__()
        if self.role not in ROLES:
            raise ValidationError(f"unknown density-operator role {self.role!r}")
        tol = DEFAULT_TOL
        m = self.matrix
        evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        scale = max(1.0, float(np.max(np.abs(evals), initial=0.0)))
        if evals[0] < -tol.psd * scale:
            raise ValidationError(
                f"{self.role} is not positive semidefinite (min eigenvalue {evals[0]:.3e})")
        if self.role == "state":
            tr = float(np.trace(m).real)
            if abs(tr - 1.0) > tol.trace:
                raise ValidationError(f"state trace is {tr!r}, expected 1")
        elif self.role == "povm_element" and evals[-1] > 1.0 + tol.psd:
            raise ValidationError(
                f"POVM element has eigenvalue {evals[-1]:.6g} above 1")

    def __repr__(self):
        return f"DensityOperator(role={self.role!r}, dim={self.dim})"

    @property
    def op(self) -> HermitianOperator:
        return HermitianOperator(self.matrix, self.space)


def propagator(H, dt: float) -> UnitaryOperator:
    """Return ``exp(-i H dt)`` via the Hermitian eigendecomposition of ``H``.

    ``dt`` may be negative; ``propagator(H, -dt)`` is the inverse.
    """
    h = as_matrix(H)
    res = hermiticity_residual(h)
    if res > DEFAULT_TOL.herm:
        raise ValidationError(f"Hamiltonian is not Hermitian (residual {res:.3e})")
    if not np.isfinite(dt):
        raise ValidationError(f"time step must be finite, got {dt!r}")
    try:
        evals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    u = (vecs * np.exp(-1j * evals * dt)) @ vecs.conj().T
    space = getattr(H, "space", None)
    return UnitaryOperator(u, space)


def conjugate_in_basis(a):
    """Entrywise complex conjugate in the distinguished basis.

    Wrapper types are preserved (a ``DensityOperator`` keeps its role).
    """
    if isinstance(a, DensityOperator):
        return DensityOperator(a.matrix.conj(), a.role, a.space)
    if isinstance(a, _Operator):
        return type(a)(a.matrix.conj(), a.space)
    return np.conj(np.asarray(a))


def trace_product(a, b) -> complex:
    """``tr[a @ b]`` without forming the product."""
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise ValidationError(f"shape mismatch {ma.shape} vs {mb.shape}")
    return complex(np.einsum("ij,ji->", ma, mb))


def real_probability(value: complex, what: str = "probability") -> float:
    """Drop the imaginary part of a trace, refusing if it is not negligible."""
    if abs(value.imag) > DEFAULT_TOL.imag:
        raise ModelValidityError(
            f"{what} has imaginary part {value.imag:.3e}; the model is not valid")
    return value.real


def normalize_history(pi) -> tuple[DensityOperator, float]:
    """Split an unnormalized history into ``(state, weight)``.

    Raises
    ------
    ZeroWeightError
        if ``tr[pi]`` does not exceed ``Tolerances.zero``; the branch is
        impossible rather than broken.
    """
    m = as_matrix(pi)
    weight = real_probability(complex(np.trace(m)), "history trace")
    if weight <= DEFAULT_TOL.zero:
        raise ZeroWeightError(f"history has weight {weight:.3e}; branch is impossible")
    return DensityOperator(m / weight, "state", getattr(pi, "space", None)), weight


# -- JSON ---------------------------------------------------------------------

def operator_to_json(a) -> dict:
    m = as_matrix(a)
    return {"dim": int(m.shape[0]),
            "re": [[float(x) for x in row] for row in m.real],
            "im": [[float(x) for x in row] for row in m.imag]}


def operator_from_json(obj: dict) -> np.ndarray:
    """Inverse of :func:`operator_to_json`; returns a complex array."""
    try:
        d = int(obj["dim"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed operator: {exc}") from exc
    if re.shape != (d, d) or im.shape != (d, d):
        raise ValidationError(
            f"operator declares dim {d} but has shapes {re.shape} / {im.shape}")
    out = np.empty((d, d), dtype=complex)
    out.real = re
    out.imag = im
    return out
