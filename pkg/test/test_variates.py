import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.tools.variates import (
    GEParams,
    InvalidParameterError,
    Rng,
    exp_sample,
    ge_sample,
    ge_samples,
    ge_tau,
    replication_seed,
    sample_scv,
)


class FixedUniform:
    def __init__(self, u: float):
        self.u = u

    def uniform(self) -> float:
        return self.u


# ---------- ge_tau ----------
@pytest.mark.parametrize(
    "rate, scv, expected",
    [(1.0, 1.0, 1.0), (17e5, 4.0, 0.4), (5e5, 10.0, 2.0 / 11.0)],
)
def test_ge_tau(rate, scv, expected):
    assert ge_tau(GEParams(rate=rate, scv=scv)) == pytest.approx(expected, rel=1e-12)


def test_ge_params_reject_invalid_values():
    with pytest.raises(ValidationError):
        GEParams(rate=1.0, scv=0.5)
    with pytest.raises(ValidationError):
        GEParams(rate=0.0, scv=1.0)


def test_ge_tau_rejects_unvalidated_params():
    with pytest.raises(InvalidParameterError):
        ge_tau(GEParams.model_construct(rate=1.0, scv=0.5))
    with pytest.raises(InvalidParameterError):
        ge_tau(GEParams.model_construct(rate=-1.0, scv=2.0))


# ---------- exp_sample ----------
def test_exp_sample_inverse_transform():
    assert exp_sample(1.0, FixedUniform(math.exp(-1.0))) == pytest.approx(1.0, rel=1e-15)
    assert exp_sample(4.0, FixedUniform(math.exp(-2.0))) == pytest.approx(0.5, rel=1e-15)


def test_exp_sample_rejects_bad_rate():
    with pytest.raises(InvalidParameterError):
        exp_sample(0.0, Rng(1))


def test_exp_sample_moments():
    rng = Rng(11)
    draws = np.array([exp_sample(2.0, rng) for _ in range(200_000)])
    assert np.all(draws > 0) and np.all(np.isfinite(draws))
    assert draws.mean() == pytest.approx(0.5, rel=0.02)
    assert sample_scv(draws) == pytest.approx(1.0, rel=0.05)


# ---------- ge_sample ----------
def test_ge_with_unit_scv_is_the_exponential_stream():
    params = GEParams(rate=3.0, scv=1.0)
    a, b = Rng(5), Rng(5)
    assert [ge_sample(params, a) for _ in range(1000)] == [exp_sample(3.0, b) for _ in range(1000)]


def test_ge_sample_zero_atom_and_mean():
    params = GEParams(rate=17e5, scv=4.0)
    rng = Rng(3)
    draws = np.array([ge_sample(params, rng) for _ in range(200_000)])
    assert np.mean(draws == 0.0) == pytest.approx(0.6, abs=0.006)
    assert draws.mean() == pytest.approx(1 / 17e5, rel=0.03)


def test_ge_samples_moments():
    params = GEParams(rate=17e5, scv=4.0)
    draws = ge_samples(params, Rng(2024), 1_000_000)
    assert draws.mean() == pytest.approx(params.mean, rel=0.01)
    assert sample_scv(draws) == pytest.approx(4.0, rel=0.05)
    assert np.mean(draws == 0.0) == pytest.approx(0.6, abs=0.003)


def test_ge_batch_sizes_are_geometric_with_mean_inverse_tau():
    params = GEParams(rate=5e5, scv=10.0)
    draws = ge_samples(params, Rng(8), 500_000)
    # every non-zero gap opens a batch; the zero gaps that follow join it
    batches = np.count_nonzero(draws)
    assert draws.size / batches == pytest.approx(1 / ge_tau(params), rel=0.02)


def test_ge_samples_fills_given_buffer():
    out = np.full(100, -1.0)
    result = ge_samples(GEParams(rate=1.0, scv=2.0), Rng(1), 100, out=out)
    assert result is out
    assert np.all(out >= 0.0)


def test_ge_samples_rejects_negative_size():
    with pytest.raises(InvalidParameterError):
        ge_samples(GEParams(rate=1.0), Rng(1), -1)


@pytest.mark.slow
def test_ge_acceptance_moments_at_ten_million_draws():
    params = GEParams(rate=17e5, scv=4.0)
    draws = ge_samples(params, Rng(1), 10_000_000)
    assert abs(draws.mean() - 1 / 17e5) / (1 / 17e5) <= 0.005
    assert abs(sample_scv(draws) - 4.0) / 4.0 <= 0.02
    assert abs(np.mean(draws == 0.0) - 0.6) <= 0.005


@pytest.mark.slow
def test_exp_acceptance_moments_at_ten_million_draws():
    draws = Rng(1).generator.exponential(0.5, 10_000_000)
    assert abs(draws.mean() - 0.5) / 0.5 <= 0.005
    assert abs(sample_scv(draws) - 1.0) <= 0.02


# ---------- Rng ----------
def test_same_seed_same_stream():
    a, b = Rng(42), Rng(42)
    assert [a.uniform() for _ in range(10_000)] == [b.uniform() for _ in range(10_000)]


def test_different_seeds_differ_and_look_uniform():
    a, b = Rng(1), Rng(2)
    xs = np.array([a.uniform() for _ in range(50_000)])
    ys = np.array([b.uniform() for _ in range(50_000)])
    assert not np.array_equal(xs, ys)
    for u in (xs, ys):
        assert np.all((u > 0.0) & (u < 1.0))
        assert u.mean() == pytest.approx(0.5, abs=0.01)
        counts, _ = np.histogram(u, bins=10, range=(0.0, 1.0))
        assert counts.min() > 4500 and counts.max() < 5500


def test_substream_does_not_depend_on_parent_draws():
    fresh = Rng(9)
    used = Rng(9)
    for _ in range(100):
        used.uniform()
    a, b = fresh.substream(3), used.substream(3)
    assert [a.uniform() for _ in range(100)] == [b.uniform() for _ in range(100)]
    c = fresh.substream(4)
    assert Rng(9).substream(3).uniform() != c.uniform()


def test_replication_seed_is_deterministic_and_keyed():
    first = Rng(replication_seed(7, (0, 1)))
    again = Rng(replication_seed(7, (0, 1)))
    other = Rng(replication_seed(7, (1, 0)))
    x = [first.uniform() for _ in range(10)]
    assert x == [again.uniform() for _ in range(10)]
    assert x != [other.uniform() for _ in range(10)]


def test_seed_range_is_checked():
    with pytest.raises(InvalidParameterError):
        Rng(-1)
    with pytest.raises(InvalidParameterError):
        replication_seed(2**64, (0, 0))
    Rng(2**64 - 1)


def test_sample_scv_of_all_zero_sample_is_undefined():
    with pytest.raises(InvalidParameterError):
        sample_scv(np.zeros(10))
