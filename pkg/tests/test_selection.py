import json

import numpy as np
import pytest

from deconvclust.clustering import ClusteringAssignment, KMeansConfig
from deconvclust.exceptions import DimensionError, ParameterError
from deconvclust.forward_model import OperatorSpectrum
from deconvclust.selection import (
    PenaltyConfig,
    element_thresholds,
    hard_threshold_elements,
    hard_threshold_rows,
    joint_objective,
    objective_curve,
    penalty,
    penalty_nested,
    row_thresholds,
    solve_joint,
    universal_level,
)

from oracles import brute_force_joint, nested_penalty, projection


def test_penalty_hand_evaluation():
    nu = np.array([1.0, 2.0, 3.0, 4.0])
    cfg = PenaltyConfig(delta=0.5, tau=2.0)
    J = [0, 2]
    # 2 delta^2 [26 K (1 + 9) + 39 * 9 * (M ln K + 2 ln(4e/2) + ln(M n / delta^2))]
    expected = 2 * 0.25 * (26 * 3 * 10 + 39 * 9 * (6 * np.log(3) + 2 * np.log(4 * np.e / 2) + np.log(6 * 4 / 0.25)))
    assert penalty(J, 3, 6, nu, cfg) == pytest.approx(expected, rel=1e-13)


def test_nested_penalty_against_formula():
    nu = np.linspace(1, 5, 9)
    cfg = PenaltyConfig(delta=0.1, C_psi=1.0, tau=2.0)
    for L in (1, 4, 9):
        assert penalty_nested(L, 2, 7, nu, cfg) == pytest.approx(nested_penalty(L, 2, 7, nu, 0.1), rel=1e-13)


def test_penalty_cutoff_and_validation():
    nu = np.ones(4)
    assert PenaltyConfig.delta_cutoff(0.1).n == 100
    a = penalty_nested(2, 1, 3, nu, PenaltyConfig(delta=0.1, n=100))
    b = penalty_nested(2, 1, 3, nu, PenaltyConfig(delta=0.1))
    assert a - b == pytest.approx(2 * 0.01 * 39 * np.log(25), rel=1e-12)
    with pytest.raises(ParameterError):
        penalty([], 1, 3, nu, PenaltyConfig(delta=0.1))
    with pytest.raises(ParameterError):
        penalty([0], 4, 3, nu, PenaltyConfig(delta=0.1))
    with pytest.raises(ParameterError):
        PenaltyConfig(delta=0.0)


def test_hard_thresholds():
    G = np.array([[3.0, -0.5], [0.1, 0.2], [-2.0, 2.5]])
    out, kept = hard_threshold_rows(G, np.array([1.0, 1.0, 3.0]))
    np.testing.assert_array_equal(kept, [0, 2])
    np.testing.assert_array_equal(out[1], 0.0)
    el = hard_threshold_elements(G, np.array([1.0, 1.0, 2.2]))
    np.testing.assert_array_equal(el, [[3.0, 0.0], [0.0, 0.0], [0.0, 2.5]])
    with pytest.raises(DimensionError):
        hard_threshold_rows(G, np.ones(2))
    assert universal_level(16, 4, 1.0) == pytest.approx(np.sqrt(2 * np.log(64)))
    np.testing.assert_allclose(element_thresholds(0.5, [1.0, 2.0], 16, 4, 1.0), 0.5 * np.array([1, 2]) * np.sqrt(2 * np.log(64)))
    np.testing.assert_allclose(row_thresholds(0.5, [1.0], 4, 16, 4, 1.0), 0.5 * (2 + np.sqrt(2 * np.log(64))))


def test_objective_identity_against_dense_algebra(rng):
    n, M = 6, 5
    nu = np.linspace(1, 3, n)
    UY = rng.standard_normal((n, M))
    a = ClusteringAssignment([0, 1, 0, 2, 1])
    cfg = PenaltyConfig(delta=0.2)
    Pi = projection(a.labels, a.K)
    curve = objective_curve(UY, a, M, nu, cfg)
    for L in range(1, n + 1):
        W = np.diag((np.arange(n) < L).astype(float))
        dense = (
            np.linalg.norm((np.eye(n) - W) @ UY @ Pi) ** 2
            + np.linalg.norm(UY @ (np.eye(M) - Pi)) ** 2
            + nested_penalty(L, a.K, M, nu, 0.2)
        )
        assert curve[L - 1] == pytest.approx(dense, rel=1e-12)
        assert joint_objective(UY, a, L, nu, cfg) == pytest.approx(dense, rel=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_solve_joint_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    M, n = int(rng.integers(2, 7)), int(rng.integers(1, 7))
    nu = np.sort(rng.uniform(0.5, 3, n))
    lab = rng.integers(0, 3, M)
    Y = rng.normal(0, 3, (n, 3))[:, lab] / nu[:, None] + rng.normal(0, 0.5, (n, M))
    delta = float(rng.uniform(0.01, 0.3))
    res = solve_joint(Y, nu, PenaltyConfig(delta=delta), KMeansConfig(restarts=50, seed=seed), full_range=True)
    best = brute_force_joint(Y, nu, delta)
    assert res.objective == pytest.approx(best, rel=1e-9, abs=1e-9)


def test_solve_joint_result_fields(rng):
    n, M = 8, 6
    nu = np.linspace(1, 2, n)
    Y = np.repeat(rng.normal(0, 5, (n, 2)), 3, axis=1) + rng.normal(0, 0.1, (n, M))
    res = solve_joint(Y, OperatorSpectrum(nu), PenaltyConfig(delta=0.1), KMeansConfig(restarts=10))
    assert res.K_hat == 2
    np.testing.assert_array_equal(res.J_hat, np.arange(res.L_hat))
    assert np.all(res.G_hat[res.L_hat :] == 0)
    d = json.loads(res.to_json())
    assert d["K_hat"] == 2 and len(d["labels"]) == M


def test_solve_joint_uses_eigenvalue_signs():
    nu = np.ones(4)
    Y = np.tile(np.array([[5.0], [-4.0], [3.0], [2.0]]), (1, 3))
    plain = solve_joint(Y, OperatorSpectrum(nu), PenaltyConfig(delta=0.01), K_range=[1])
    flipped = solve_joint(Y, OperatorSpectrum(nu, signs=[1, -1, 1, -1]), PenaltyConfig(delta=0.01), K_range=[1])
    assert plain.objective == pytest.approx(flipped.objective)
    np.testing.assert_allclose(flipped.G_hat[1], -plain.G_hat[1])


def test_solve_joint_validation():
    with pytest.raises(DimensionError):
        solve_joint(np.zeros((3, 4)), np.ones(4), PenaltyConfig(delta=0.1))
    with pytest.raises(ParameterError):
        solve_joint(np.zeros((3, 4)), np.ones(3), PenaltyConfig(delta=0.1), K_range=[5])
