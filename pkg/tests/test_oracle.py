import math
from collections import Counter

import numpy as np
import pytest

from twotime import engine, oracle
from twotime import experiments as ex
from twotime.errors import CapacityError, ValidationError
from twotime.forward import sample_batch
from twotime.model import TwoTimeModel

from conftest import KET0, PI, PLUS


def test_single_event_superposition():
    m = TwoTimeModel(np.zeros((2, 2)), ex.z_family(2), (0, 1, 2), PLUS, np.eye(2) / 2)
    np.testing.assert_allclose(oracle.enumerate_records(m).probabilities, [0.5, 0.5], atol=1e-15)


def test_two_event_frozen():
    m = TwoTimeModel(np.zeros((2, 2)), ex.z_family(2), (0, 1, 2, 3), KET0, np.eye(2) / 2)
    exact = oracle.enumerate_records(m)
    assert exact.as_dict() == {(0, 0): 1.0, (0, 1): 0.0, (1, 0): 0.0, (1, 1): 0.0}


def test_rabi_spread_matches_engine():
    m = TwoTimeModel(ex.SIGMA_X, ex.z_family(2), (0, PI / 4, PI / 2, 2.0), KET0, np.eye(2))
    exact = oracle.enumerate_records(m)
    assert np.min(exact.probabilities) > 0.05
    for rec, p in zip(exact.records, exact.probabilities):
        assert abs(engine.record_probability(m, rec) - p) <= 1e-10


def test_equivalence_random_models(random_symmetric_models, fixture_models):
    models = list(random_symmetric_models) + list(fixture_models.values())
    assert len(models) >= 20
    for m in models:
        exact = oracle.enumerate_records(m)
        for rec, p in zip(exact.records, exact.probabilities):
            assert abs(engine.record_probability(m, rec) - p) <= 1e-10
        assert engine.denominator(m) == pytest.approx(exact.denominator, rel=1e-12)


def test_cap():
    m = TwoTimeModel(ex.SIGMA_X, ex.z_family(2), tuple(range(22)), KET0, np.eye(2))
    with pytest.raises(CapacityError):
        oracle.enumerate_records(m)


class TestCompareEmpirical:
    def test_self_draws(self, fixture_models):
        exact = oracle.enumerate_records(fixture_models["qubit_symmetric"])
        report = oracle.compare_empirical(oracle.draw(exact, 100_000, 4), exact)
        assert report.tv_distance <= 0.01
        assert report.n == 100_000

    def test_degenerate(self):
        m = TwoTimeModel(np.zeros((2, 2)), ex.z_family(2), (0, 1, 2), PLUS, np.eye(2))
        exact = oracle.enumerate_records(m)
        assert oracle.compare_empirical([(0,)] * 200, exact).tv_distance == pytest.approx(0.5)

    def test_exact_counts(self, fixture_models):
        exact = oracle.enumerate_records(fixture_models["qubit_two_event"])
        counts = {r: p * 1e5 for r, p in zip(exact.records, exact.probabilities)}
        report = oracle.compare_counts(counts, exact)
        assert report.chi2 == pytest.approx(0, abs=1e-12)
        assert report.tv_distance == pytest.approx(0, abs=1e-12)

    def test_empty(self, fixture_models):
        exact = oracle.enumerate_records(fixture_models["qubit_two_event"])
        with pytest.raises(ValidationError):
            oracle.compare_empirical([], exact)

    def test_rare_categories_pooled(self, fixture_models):
        exact = oracle.enumerate_records(fixture_models["grw_uniform_final"])
        report = oracle.compare_empirical(oracle.draw(exact, 2000, 1), exact)
        assert report.dof < len(exact.records) - 1


@pytest.mark.parametrize("name", ["qubit_two_event", "grw_uniform_final"])
def test_sampler_against_oracle(fixture_models, name):
    m = fixture_models[name]
    exact = oracle.enumerate_records(m)
    n = 50_000
    batch = sample_batch(m, n, 21)
    report = oracle.compare_empirical(batch.records(), exact)
    assert report.tv_distance <= 3 * math.sqrt(len(exact.records) / n)


def test_estimate_denominator(fixture_models):
    m = fixture_models["grw_uniform_initial"]
    mean, se = oracle.estimate_denominator(m, 3000, 2)
    exact = oracle.enumerate_records(m).denominator
    assert se > 0 and abs(mean - exact) <= 4 * se


def test_draw_is_seeded(fixture_models):
    exact = oracle.enumerate_records(fixture_models["qubit_two_event"])
    assert oracle.draw(exact, 50, 9) == oracle.draw(exact, 50, 9)
    assert Counter(oracle.draw(exact, 50, 9)) != Counter(oracle.draw(exact, 50, 10))
