import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from twotime.errors import ValidationError, ZeroWeightError
from twotime.linalg import (DensityOperator, HermitianOperator, HilbertSpace, PureState,
                            UnitaryOperator, conjugate_in_basis, normalize_history,
                            operator_from_json, operator_to_json, propagator, trace_product)

from conftest import KET0, KET1, PLUS, random_hermitian

SX = np.array([[0, 1], [1, 0]])

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def hermitians(draw, max_dim=5):
    d = draw(st.integers(1, max_dim))
    re = draw(arrays(float, (d, d), elements=finite))
    im = draw(arrays(float, (d, d), elements=finite))
    a = re + 1j * im
    return (a + a.conj().T) / 2


class TestPropagator:
    def test_zero_generator(self):
        np.testing.assert_array_equal(propagator(np.zeros((2, 2)), 1.7).matrix, np.eye(2))

    def test_pauli_x_half_period(self):
        u = propagator(SX, np.pi).matrix
        np.testing.assert_allclose(u, -np.eye(2), atol=1e-10)

    def test_diagonal(self):
        u = propagator(np.diag([0.0, 2.0]), 0.5).matrix
        np.testing.assert_allclose(u, np.diag([1, np.exp(-1j)]), atol=1e-14)

    def test_returns_unitary(self):
        assert isinstance(propagator(SX, 0.3), UnitaryOperator)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError, match="residual"):
            propagator(np.array([[0, 1], [0, 0]]), 1.0)

    def test_rejects_infinite_step(self):
        with pytest.raises(ValidationError):
            propagator(SX, np.inf)

    @given(hermitians(), st.floats(-10, 10))
    def test_dagger_is_time_reversal(self, h, t):
        u = propagator(h, t).matrix
        np.testing.assert_allclose(u.conj().T, propagator(h, -t).matrix, atol=1e-10)
        np.testing.assert_allclose(u @ propagator(h, -t).matrix, np.eye(len(h)), atol=1e-10)


class TestConjugate:
    def test_real_fixed(self):
        a = np.array([[1, 2], [2, 3]])
        np.testing.assert_array_equal(conjugate_in_basis(a), a)

    def test_sigma_y(self):
        sy = np.array([[0, -1j], [1j, 0]])
        np.testing.assert_array_equal(conjugate_in_basis(sy), [[0, 1j], [-1j, 0]])

    def test_multiplicative(self, rng):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        np.testing.assert_allclose(conjugate_in_basis(a @ b),
                                   conjugate_in_basis(a) @ conjugate_in_basis(b), atol=1e-12)

    @given(hermitians())
    def test_involution(self, h):
        np.testing.assert_array_equal(conjugate_in_basis(conjugate_in_basis(h)), h)

    def test_preserves_wrapper(self):
        rho = DensityOperator(np.eye(2), "povm_element")
        out = conjugate_in_basis(rho)
        assert isinstance(out, DensityOperator) and out.role == "povm_element"


class TestTraceProduct:
    def test_identity_with_state(self, rng):
        from conftest import random_state
        assert trace_product(np.eye(3), random_state(rng, 3)) == pytest.approx(1.0)

    def test_orthogonal_projectors(self):
        assert trace_product(KET0, KET1) == 0

    def test_idempotent(self):
        assert trace_product(PLUS, PLUS) == pytest.approx(1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            trace_product(np.eye(2), np.eye(3))

    @given(hermitians(max_dim=4), st.integers(0, 2**32 - 1))
    def test_cyclic(self, a, seed):
        b = np.random.default_rng(seed).normal(size=a.shape)
        assert abs(trace_product(a, b) - trace_product(b, a)) <= 1e-12 * max(1, np.abs(a).sum() * np.abs(b).sum())


class TestNormalizeHistory:
    def test_scalar_rescale(self):
        rho, w = normalize_history(0.25 * KET0)
        assert w == 0.25
        np.testing.assert_array_equal(rho.matrix, KET0)
        assert rho.role == "state"

    def test_zero(self):
        with pytest.raises(ZeroWeightError):
            normalize_history(np.zeros((2, 2)))

    def test_maximally_mixed(self):
        rho, w = normalize_history(0.5 * np.eye(2))
        assert w == 1.0
        np.testing.assert_array_equal(rho.matrix, np.eye(2) / 2)

    def test_round_trip(self, rng):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        pi = 0.37 * a @ a.conj().T
        rho, w = normalize_history(pi)
        np.testing.assert_allclose(w * rho.matrix, pi, atol=1e-12)


class TestTypes:
    def test_hermitian_rejects(self):
        with pytest.raises(ValidationError, match="residual"):
            HermitianOperator(np.array([[0, 1], [0, 0]]))

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            HermitianOperator(np.array([[np.nan, 0], [0, 0]]))

    def test_space_labels(self):
        assert HilbertSpace(3).basis_labels == ("0", "1", "2")
        with pytest.raises(ValidationError):
            HilbertSpace(2, ("a", "a"))
        with pytest.raises(ValidationError):
            HilbertSpace(2, ("a",))
        with pytest.raises(ValidationError):
            HilbertSpace(0)

    def test_space_mismatch(self):
        with pytest.raises(ValidationError):
            HermitianOperator(np.eye(2), HilbertSpace(3))

    def test_pure_state(self):
        with pytest.raises(ValidationError):
            PureState(np.zeros(2))
        rho = PureState([1, 1]).density()
        np.testing.assert_allclose(rho.matrix, PLUS)

    def test_density_roles(self):
        DensityOperator(np.eye(2) / 2, "state")
        with pytest.raises(ValidationError, match="trace"):
            DensityOperator(np.eye(2), "state")
        DensityOperator(np.eye(2), "povm_element")
        with pytest.raises(ValidationError, match="above 1"):
            DensityOperator(2 * np.eye(2), "povm_element")
        DensityOperator(3 * np.eye(2), "unnormalized_history")
        with pytest.raises(ValidationError, match="semidefinite"):
            DensityOperator(np.diag([1.5, -0.5]), "state")
        with pytest.raises(ValidationError):
            DensityOperator(np.eye(2), "mystery")

    def test_unitary_check(self):
        with pytest.raises(ValidationError):
            UnitaryOperator(2 * np.eye(2))

    def test_immutable(self):
        op = HermitianOperator(np.eye(2))
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 5


class TestJson:
    def test_round_trip_bit_exact(self, rng):
        h = random_hermitian(rng, 4)
        obj = json.loads(json.dumps(operator_to_json(h)))
        back = operator_from_json(obj)
        assert back.tobytes() == h.astype(complex).tobytes()
        assert obj["dim"] == 4 and len(obj["re"]) == 4

    def test_shape_checked(self):
        with pytest.raises(ValidationError):
            operator_from_json({"dim": 3, "re": [[1]], "im": [[0]]})
