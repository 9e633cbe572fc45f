import math

import numpy as np
import pytest

from deconvclust import theory
from deconvclust.clustering import ClusteringAssignment
from deconvclust.exceptions import DomainError, ParameterError
from deconvclust.selection import PenaltyConfig
from deconvclust.theory import RateParams

from oracles import nested_penalty


def test_sobolev_seminorm():
    assert theory.sobolev_seminorm(np.zeros(5), 1.3) == 0.0
    assert theory.sobolev_seminorm([1.0, 0, 0], 2.0) == 1.0
    theta = 1.0 / np.arange(1, 257)
    direct = sum((1.0 / j) ** 2 * j ** 0.8 for j in range(1, 257))
    assert theory.sobolev_seminorm(theta, 0.4) == pytest.approx(direct, rel=1e-12)
    assert theory.in_sobolev_ball([0.5], 1.0, 1.0)


def test_rate_clustered_hand_evaluation():
    p = RateParams(r=1, gamma=1, M=100, K=2, delta=0.01)
    expected = (1e-4 * math.log(2)) ** 0.5 + (1e-4 * 2 / 100) ** 0.4
    assert theory.rate_clustered(p) == pytest.approx(expected, rel=1e-13)


def test_rate_clustered_single_cluster():
    p = RateParams(r=1.5, gamma=0.5, M=50, K=1, delta=0.05)
    assert theory.rate_clustered(p) == pytest.approx((0.0025 / 50) ** (3 / 5), rel=1e-13)
    s = RateParams(r=1, gamma=1, alpha=1, beta=2, M=50, K=1, delta=0.05)
    assert theory.rate_clustered(s) == pytest.approx(1 / math.log(50 / 0.0025), rel=1e-13)


def test_rate_unclustered_hand_evaluation():
    p = RateParams(r=2, gamma=1, M=7, K=3, delta=0.1)
    assert theory.rate_unclustered(p) == pytest.approx(0.01 ** (4 / 7), rel=1e-13)
    assert theory.rate_unclustered(p) == theory.rate_unclustered(RateParams(r=2, gamma=1, M=900, K=30, delta=0.1))
    s1 = RateParams(r=1, alpha=1, beta=2, M=10, K=2, delta=0.1)
    s2 = RateParams(r=1, alpha=1, beta=2, M=10, K=2, delta=0.01)
    assert theory.rate_unclustered(s1) == pytest.approx(1 / math.log(10))
    assert theory.rate_unclustered(s2) < theory.rate_unclustered(s1)


def test_severe_rate_hand_evaluation():
    p = RateParams(r=1, gamma=1, alpha=1, beta=2, M=1000, K=4, delta=0.01)
    expected = 1 / math.log(1 / (1e-4 * math.log(4))) + 1 / math.log(1000 / (1e-4 * 4))
    assert theory.rate_clustered(p) == pytest.approx(expected, rel=1e-13)


def test_domain_and_parameter_errors():
    with pytest.raises(DomainError):
        theory.rate_clustered(RateParams(r=1, alpha=1, beta=1, M=2, K=2, delta=2.0))
    with pytest.raises(ParameterError):
        RateParams(r=1, alpha=1, beta=0)
    with pytest.raises(ParameterError):
        RateParams(r=1, M=2, K=3)
    with pytest.raises(ParameterError):
        RateParams(r=0)


def test_advantage_single_cluster_power_law():
    for M in (10, 1000):
        p = RateParams(r=1, gamma=1, M=M, K=1, delta=0.01)
        assert theory.clustering_advantage(p) == pytest.approx(M ** (-0.4), rel=1e-12)


@pytest.mark.parametrize("regime", [dict(), dict(alpha=1.0, beta=2.0)])
def test_rates_nonincreasing_in_M(regime):
    vals = [theory.rate_clustered(RateParams(r=1, gamma=1, M=M, K=3, delta=0.01, **regime)) for M in (10, 100, 10**4, 10**6)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_polynomial_single_cluster_fastest():
    for K in (2, 5, 10):
        p1 = RateParams(r=1, gamma=1, M=100, K=1, delta=0.05)
        pK = RateParams(r=1, gamma=1, M=100, K=K, delta=0.05)
        assert theory.rate_clustered(p1) <= theory.rate_clustered(pK)


def test_advantage_below_one_when_many_objects_per_cluster():
    for delta in (0.01, 0.001):
        for K in (1, 2, 5):
            for M in (10 * K, 100 * K, 10**4):
                assert theory.clustering_advantage(RateParams(r=1, gamma=1, M=M, K=K, delta=delta)) <= 1.0


def test_advantage_can_exceed_one_at_large_noise():
    # the ln K term alone is 0.8 of the unclustered rate here
    assert theory.clustering_advantage(RateParams(r=1, gamma=1, M=50, K=5, delta=0.1)) > 1.0


def test_rate_sweep_csv():
    rows = theory.rate_sweep([RateParams(r=1, gamma=1, M=100, K=2, delta=0.1)])
    text = theory.rate_sweep_csv(rows, header_comment="rates v1")
    lines = text.splitlines()
    assert lines[0] == "# rates v1"
    assert lines[1].split(",") == list(theory.RATE_COLUMNS)
    vals = dict(zip(theory.RATE_COLUMNS, lines[2].split(",")))
    assert float(vals["ratio"]) == pytest.approx(float(vals["rate_clustered"]) / float(vals["rate_unclustered"]))


def test_bias_term_two_ways(rng):
    n, M = 10, 6
    Theta = rng.standard_normal((n, 3))
    a = ClusteringAssignment([0, 1, 2, 0, 1, 2])
    G = Theta[:, a.labels]
    for L in (0, 3, 10):
        tail = sum(a.sizes[k] * np.sum(Theta[L:, k] ** 2) for k in range(3))
        assert theory.bias_term(G, a, L) == pytest.approx(tail, rel=1e-12, abs=1e-12)
    assert theory.bias_term(G, a, n) == pytest.approx(0.0, abs=1e-12)


def test_oracle_bound_rhs_and_min(rng):
    n, M = 8, 4
    nu = np.linspace(1, 2, n)
    G = rng.standard_normal((n, M))
    a = ClusteringAssignment([0, 0, 1, 1])
    cfg = PenaltyConfig(delta=0.1)
    for L in (1, 5, 8):
        expected = 3 * theory.bias_term(G, a, L) + 4 * nested_penalty(L, 2, M, nu, 0.1)
        assert theory.oracle_bound_rhs(G, a, L, 2, nu, cfg) == pytest.approx(expected, rel=1e-12)
    value, (idx, L) = theory.oracle_bound_min(G, [a], nu, cfg)
    assert value == pytest.approx(min(theory.oracle_bound_rhs(G, a, l, 2, nu, cfg) for l in range(1, n + 1)))
    assert idx == 0


def test_quadratic_tail_threshold_identity():
    p, x = 9, 1.0
    assert theory.quadratic_tail_threshold(np.eye(p), x) == pytest.approx(p + 2 * math.sqrt(p * x) + 2 * x)


def test_gaussian_quadratic_tail_cases():
    assert theory.gaussian_quadratic_tail(np.zeros((5, 5)), 1.0, 10_000, 0) == 0.0
    freq = theory.gaussian_quadratic_tail(np.eye(10), 1.0, 20_000, 1)
    assert freq <= theory.tail_tolerance(1.0, 20_000)
    D = np.diag([10.0] + [0.01] * 9)
    assert theory.gaussian_quadratic_tail(D, 2.0, 20_000, 2) <= theory.tail_tolerance(2.0, 20_000)
    with pytest.raises(ParameterError):
        theory.gaussian_quadratic_tail(np.eye(2), -1.0, 100, 0)
