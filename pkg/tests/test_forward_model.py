import json

import numpy as np
import pytest

from deconvclust import signals, transforms
from deconvclust.clustering import ClusteringAssignment
from deconvclust.exceptions import DegenerateSpectrumError, DimensionError, ParameterError
from deconvclust.forward_model import (
    KernelSpec,
    OperatorSpectrum,
    build_instance,
    column_seeds,
    config_hash,
    discretize_kernel,
    estimate_noise_level,
    noise_amplification,
    periodic_convolve,
    scale_functions,
    simulate,
    spectrum_from_kernel,
    weighted_sequence,
)
from deconvclust.transforms import Basis

from oracles import circulant, fourier_matrix


@pytest.mark.parametrize("kernel", [KernelSpec("laplace", 5), KernelSpec("gaussian", 12), KernelSpec("laplace", 3, "unit_sum")])
def test_convolution_equals_dense_circulant(kernel, rng):
    n = 64
    x = rng.standard_normal(n)
    C = circulant(discretize_kernel(kernel, n))
    np.testing.assert_allclose(periodic_convolve(x, kernel), C @ x, atol=1e-12)


@pytest.mark.parametrize("kernel", [KernelSpec("laplace", 7), KernelSpec("gaussian", 10)])
def test_spectrum_diagonalizes_circulant(kernel):
    n = 32
    B = fourier_matrix(n)
    D = B.T @ circulant(discretize_kernel(kernel, n)) @ B
    spec = spectrum_from_kernel(kernel, n)
    np.testing.assert_allclose(D, np.diag(spec.signs / spec.nu), atol=1e-10 * np.abs(D).max())


def test_deconvolve_inverts_convolution_with_negative_gains(rng):
    kernel = KernelSpec("gaussian", 10)
    spec = spectrum_from_kernel(kernel, 32)
    assert np.any(spec.signs < 0)
    B = fourier_matrix(32)
    x = B[:, :6] @ rng.standard_normal(6)
    np.testing.assert_allclose(spec.deconvolve(B.T @ periodic_convolve(x, kernel)), B.T @ x, atol=1e-8)


def test_laplace_samples_and_periodization():
    g = discretize_kernel(KernelSpec("laplace", 5.0), 16)
    x = 0.25
    expected = 0.5 * (np.exp(-5 * abs(x - 1)) + np.exp(-5 * x) + np.exp(-5 * (x + 1)))
    assert g[4] == pytest.approx(expected, rel=1e-14)
    assert g[1] == pytest.approx(g[15], rel=1e-14)


def test_unit_sum_normalization():
    assert discretize_kernel(KernelSpec("gaussian", 10, "unit_sum"), 64).sum() == pytest.approx(1.0)


def test_delta_kernel_is_identity(rng):
    x = rng.standard_normal(16)
    np.testing.assert_allclose(periodic_convolve(x, KernelSpec("delta")), x, atol=1e-14)
    np.testing.assert_allclose(spectrum_from_kernel(KernelSpec("delta"), 16).nu, 1.0)


def test_kernel_spec_validation():
    with pytest.raises(ParameterError):
        KernelSpec("laplace", -1.0)
    with pytest.raises(ParameterError):
        KernelSpec("boxcar", 1.0)


def test_degenerate_spectrum_detected(monkeypatch):
    from deconvclust import forward_model

    monkeypatch.setattr(forward_model, "kernel_gains", lambda kernel, n: np.r_[1.0, np.zeros(n // 2)])
    with pytest.raises(DegenerateSpectrumError):
        forward_model.spectrum_from_kernel(KernelSpec("laplace", 5), 16)
    with pytest.raises(DegenerateSpectrumError):
        OperatorSpectrum(np.array([1.0, 0.0]))


def test_growth_condition_check():
    j = np.arange(1, 33)
    spec = OperatorSpectrum(2.0 * j**1.5, descriptors=dict(gamma=1.5, alpha=0, beta=0, aleph1=1, aleph2=3))
    assert spec.check_descriptors()
    assert not spec.satisfies_growth(1.5, 0, 0, 2.5, 3)


def _instance(snr=5.0, fset="smooth", basis="fourier", seed=0):
    a = ClusteringAssignment.balanced_random(12, 4, seed)
    return build_instance(signals.function_set(fset, 64), a, KernelSpec("laplace", 5), snr, Basis(basis, 64))


def test_build_instance_scaling_and_sigma():
    inst = _instance(snr=4.0)
    np.testing.assert_allclose(np.linalg.norm(inst.H, axis=0), 8.0)
    assert inst.sigma == pytest.approx(np.std(inst.F_true.ravel(), ddof=1) / 4.0)
    np.testing.assert_allclose(inst.F_true, inst.H[:, inst.assignment.labels])
    np.testing.assert_allclose(inst.G_true, fourier_matrix(64).T @ inst.F_true, atol=1e-12)


def test_instance_validation():
    a = ClusteringAssignment.balanced_random(8, 4, 0)
    with pytest.raises(ParameterError):
        build_instance(signals.function_set("smooth", 64), a, KernelSpec("laplace", 5), 0.0, Basis.fourier(64))
    with pytest.raises(DimensionError):
        build_instance(signals.function_set("smooth", 32), a, KernelSpec("laplace", 5), 5.0, Basis.fourier(64))


def test_instance_json_round_trip():
    inst = _instance()
    d = json.loads(inst.to_json())
    assert d["n"] == 64 and d["M"] == 12 and d["K"] == 4
    assert d["assignment"]["labels"] == inst.assignment.labels.tolist()
    assert d["kernel"] == {"family": "laplace", "lam": 5, "normalization": "grid"}


def test_simulate_reproducible_per_column():
    inst = _instance()
    X1, X2 = simulate(inst, 7), simulate(inst, 7)
    np.testing.assert_array_equal(X1, X2)
    col3 = inst.Q_true[:, 3] + inst.sigma * np.random.default_rng(column_seeds(7, 12)[3]).standard_normal(64)
    np.testing.assert_array_equal(X1[:, 3], col3)
    assert not np.array_equal(simulate(inst, 8), X1)


def test_noiseless_instance():
    inst = _instance(snr=np.inf)
    assert inst.sigma == 0.0
    np.testing.assert_array_equal(simulate(inst, 0), inst.Q_true)


def test_weighted_sequence_inverts_operator():
    inst = _instance(snr=np.inf, basis="daubechies8")
    UY = weighted_sequence(inst.Q_true, inst.spectrum, inst.basis)
    np.testing.assert_allclose(UY, inst.G_true, atol=1e-8 * np.abs(inst.G_true).max())


def test_noise_amplification_matches_monte_carlo():
    spec = spectrum_from_kernel(KernelSpec("laplace", 3), 32)
    basis = Basis.daubechies8(32)
    sd = noise_amplification(spec, basis)
    E = np.random.default_rng(1).standard_normal((32, 20000))
    emp = weighted_sequence(E, spec, basis).std(axis=1)
    np.testing.assert_allclose(emp, sd, rtol=0.03)
    np.testing.assert_allclose(noise_amplification(spec, Basis.fourier(32)), spec.nu)


def test_noise_level_estimate_on_pure_noise():
    X = 0.3 * np.random.default_rng(3).standard_normal((256, 40))
    assert estimate_noise_level(X) == pytest.approx(0.3, rel=0.03)


def test_scale_functions_and_hash():
    L = np.arange(1.0, 33.0).reshape(16, 2)
    np.testing.assert_allclose(np.linalg.norm(scale_functions(L), axis=0), 4.0)
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_function_sets():
    for name in ("smooth", "nonsmooth"):
        L = signals.function_set(name, 128)
        assert L.shape == (128, 4) and np.all(np.isfinite(L))
    x = signals.grid(8)
    assert x[0] == pytest.approx(1 / 8) and x[-1] == pytest.approx(1.0)
    np.testing.assert_allclose(signals.function_set("smooth", 8)[:, 2], (x - 0.5) ** 2)
    assert signals.wave(np.array([0.0]))[0] == pytest.approx(0.8)
    with pytest.raises(ParameterError):
        signals.function_set("rough", 64)
