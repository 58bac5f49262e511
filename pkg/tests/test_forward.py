import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twotime import experiments as ex
from twotime import oracle
from twotime.errors import ValidationError, ZeroWeightError
from twotime.forward import (collapse_distribution, history_operator, read_trajectory_csv,
                             sample_batch, sample_trajectory, state_at, trajectory_seed,
                             write_trajectory_csv)
from twotime.model import TwoTimeModel, build_grw_family

from conftest import KET0, KET1, PI, PLUS, random_state

POSITIONS = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
LATTICE = np.linspace(-6, 6, 41)


def grw_by_hand(alpha=1.0):
    """Renormalized GRW diagonals computed directly from the Gaussian formula."""
    w = np.full(LATTICE.size, LATTICE[1] - LATTICE[0])
    raw = np.exp(-0.5 * alpha * (POSITIONS[None, :] - LATTICE[:, None]) ** 2)
    site_sums = (w[:, None] * raw**2).sum(axis=0)
    return w, raw / np.sqrt(site_sums)[None, :]


def qubit(H, times, rho_I, rho_F=None, fam=None):
    return TwoTimeModel(H, fam or ex.z_family(2), times, rho_I,
                        np.eye(2) if rho_F is None else rho_F)


class TestCollapseDistribution:
    def test_plus(self, zfam):
        np.testing.assert_allclose(collapse_distribution(PLUS, zfam), [0.5, 0.5])

    def test_eigenstate(self, zfam):
        np.testing.assert_array_equal(collapse_distribution(KET0, zfam), [1, 0])

    def test_grw_maximally_mixed(self):
        fam = build_grw_family(LATTICE, np.diag(POSITIONS), 1.0)
        w, diag = grw_by_hand()
        expected = w * (diag**2).sum(axis=1) / 5
        np.testing.assert_allclose(collapse_distribution(np.eye(5) / 5, fam), expected,
                                   atol=1e-12, rtol=0)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_sums_to_one(self, seed, d):
        rng = np.random.default_rng(seed)
        fam = ex.random_grw_family(rng, d) if seed % 2 else ex.random_projective_family(rng, d)
        p = collapse_distribution(random_state(rng, d), fam)
        assert abs(p.sum() - 1) <= 1e-10 and np.all(p >= 0)


class TestHistory:
    def test_no_events(self):
        m = qubit(np.zeros((2, 2)), (0.0, 1.0), PLUS)
        np.testing.assert_array_equal(history_operator(m, (), 1.0).matrix, PLUS)

    def test_occupied_branch(self):
        m = qubit(np.zeros((2, 2)), (0.0, 1.0, 2.0), KET0)
        pi = history_operator(m, (0,), 2.0)
        np.testing.assert_array_equal(pi.matrix, KET0)
        assert pi.role == "unnormalized_history"

    def test_impossible_branch(self):
        m = qubit(np.zeros((2, 2)), (0.0, 1.0, 2.0), KET0)
        pi = history_operator(m, (1,), 2.0)
        np.testing.assert_array_equal(pi.matrix, np.zeros((2, 2)))
        with pytest.raises(ZeroWeightError):
            state_at(m, (1,), 2.0)

    def test_out_of_range(self):
        m = qubit(np.zeros((2, 2)), (0.0, 1.0, 2.0), KET0)
        with pytest.raises(ValidationError):
            history_operator(m, (0,), 2.5)

    def test_collapse_applies_strictly_after_event(self):
        m = qubit(np.zeros((2, 2)), (0.0, 1.0, 2.0), PLUS)
        np.testing.assert_allclose(history_operator(m, (0,), 1.0).matrix, PLUS)
        np.testing.assert_allclose(history_operator(m, (0,), 1.0 + 1e-9).matrix, 0.5 * KET0)

    def test_matches_explicit_product(self, rng):
        m = ex.random_symmetric_model(rng, d=3, kind="grw", events=3)
        rec = (1, 0, 2)
        ts = m.schedule.times
        t = 0.5 * (ts[2] + ts[3])
        from scipy.linalg import expm
        u = lambda dt: expm(-1j * m.H.matrix * dt)
        k = [np.sqrt(w) * op.matrix for w, op in zip(m.family.grid.weights, m.family.operators)]
        a = u(t - ts[2]) @ k[rec[1]] @ u(ts[2] - ts[1]) @ k[rec[0]] @ u(ts[1] - ts[0])
        expected = a @ m.rho_I.matrix @ a.conj().T
        np.testing.assert_allclose(history_operator(m, rec, t).matrix, expected, atol=1e-12)


class TestStateAt:
    def test_projective_update(self):
        m = qubit(np.zeros((2, 2)), (0.0, 1.0, 2.0), PLUS)
        np.testing.assert_allclose(state_at(m, (0,), 1.0 + 1e-6).matrix, KET0)

    def test_rabi_half_period(self):
        m = qubit(ex.SIGMA_X, (0.0, PI), KET0)
        np.testing.assert_allclose(state_at(m, (), PI / 2).matrix, KET1, atol=1e-10)

    def test_grw_localization(self):
        fam = build_grw_family(LATTICE, np.diag(POSITIONS), 1.0)
        rho0 = np.eye(5) / 5
        m = TwoTimeModel(np.zeros((5, 5)), fam, (0.0, 1.0, 2.0), rho0, np.eye(5))
        a = 23
        _, diag = grw_by_hand()
        expected = np.diag(rho0) * diag[a] ** 2
        got = np.diag(state_at(m, (a,), 2.0).matrix).real
        np.testing.assert_allclose(got, expected / expected.sum(), atol=1e-12)

    def test_continuity(self, rng):
        m = ex.random_symmetric_model(rng, d=4, kind="projective", events=2)
        ts = m.schedule.times
        for t in (0.5 * (ts[0] + ts[1]), 0.3 * ts[1] + 0.7 * ts[2]):
            rec = (0, 0)
            a = state_at(m, rec, t).matrix
            b = state_at(m, rec, t + 1e-8).matrix
            assert np.linalg.norm(a - b) <= 1e-6


class TestSampling:
    def test_frozen_eigenstate(self):
        m = qubit(np.zeros((2, 2)), (0, 1, 2, 3, 4), KET0)
        for seed in range(20):
            out = sample_trajectory(m, seed)
            assert out.record.outcomes == (0, 0, 0) and out.weight == 1.0

    def test_born_equal_superposition(self):
        m = qubit(np.zeros((2, 2)), (0.0, 1.0, 2.0), PLUS)
        batch = sample_batch(m, 100_000, 11)
        assert abs(np.mean(batch.outcomes[:, 0] == 0) - 0.5) <= 0.005

    def test_single_event_against_oracle(self):
        m = qubit(ex.SIGMA_X, (0.0, 0.3, 1.0), KET0)
        exact = oracle.enumerate_records(m)
        batch = sample_batch(m, 100_000, 3)
        assert oracle.compare_empirical(batch.records(), exact).tv_distance <= 0.01

    def test_reproducible(self, fixture_models):
        m = fixture_models["grw_uniform_final"]
        a, b = sample_trajectory(m, 99), sample_trajectory(m, 99)
        assert a.record == b.record and a.weight == b.weight

    def test_batch_rows_are_single_trajectories(self, fixture_models):
        m = fixture_models["grw_uniform_final"]
        batch = sample_batch(m, 50, 1234)
        for i in range(50):
            one = sample_trajectory(m, trajectory_seed(1234, i))
            assert int(batch.seeds[i]) == trajectory_seed(1234, i)
            assert one.record.outcomes == tuple(batch.outcomes[i])
            assert one.weight == batch.weights[i]

    def test_workers_do_not_change_output(self, fixture_models):
        m = fixture_models["qubit_two_event"]
        one = sample_batch(m, 9000, 5, workers=1)
        two = sample_batch(m, 9000, 5, workers=2)
        assert one.seeds.tobytes() == two.seeds.tobytes()
        assert one.outcomes.tobytes() == two.outcomes.tobytes()
        assert one.weights.tobytes() == two.weights.tobytes()

    def test_weight_is_history_trace(self, fixture_models):
        m = fixture_models["grw_uniform_final"]
        for seed in range(10):
            out = sample_trajectory(m, seed, keep_states=True)
            ref = np.trace(history_operator(m, out.record, m.schedule.times[-1]).matrix).real
            assert out.weight == pytest.approx(ref, rel=1e-9)
            assert len(out.states) == m.schedule.num_events
            assert out.weight > 0

    def test_stored_states_match_state_at(self, fixture_models):
        m = fixture_models["qubit_symmetric"]
        out = sample_trajectory(m, 8, keep_states=True)
        ts = m.schedule.times
        for k, st_k in enumerate(out.states, start=1):
            t_after = 0.5 * (ts[k] + ts[k + 1])
            ref = state_at(m, out.record, ts[k] + 1e-12).matrix
            np.testing.assert_allclose(st_k.matrix, ref, atol=1e-9)

    def test_csv(self, fixture_models):
        m = fixture_models["qubit_two_event"]
        batch = sample_batch(m, 20, 2)
        buf = io.StringIO()
        write_trajectory_csv(batch, buf)
        text = buf.getvalue()
        assert text.splitlines()[0] == "seed,outcomes,weight"
        rows = read_trajectory_csv(io.StringIO(text))
        assert [r[1] for r in rows] == batch.records()
        assert [r[2] for r in rows] == list(batch.weights)


@given(st.integers(0, 2**32 - 1))
def test_unconditioned_records_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    m = ex.random_symmetric_model(rng, max_records=300)
    m = TwoTimeModel(m.H, m.family, m.schedule, m.rho_I, np.eye(m.dim))
    import itertools
    total = sum(np.trace(history_operator(m, r, m.schedule.times[-1]).matrix).real
                for r in itertools.product(range(m.m), repeat=m.schedule.num_events))
    assert abs(total - 1) <= 1e-9
