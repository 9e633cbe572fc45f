"""scikit-learn style wrappers around the pipelines.

Following scikit-learn conventions, ``X`` has one *row* per observed
signal (shape ``(n_signals, n_samples)``); the functional API works with
columns.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import pipelines
from .clustering import KMeansConfig, project_columns
from .exceptions import DimensionError, ParameterError
from .forward_model import KernelSpec, spectrum_from_kernel, to_sequence
from .transforms import Basis


def _check_signals(X, n=None):
    X = check_array(X, dtype=float, ensure_min_samples=1)
    if n is not None and X.shape[1] != n:
        raise DimensionError(f"X has {X.shape[1]} samples per signal, expected {n}")
    Basis.fourier(X.shape[1])
    return X


class _DeconvolutionBase(BaseEstimator):
    def _config(self):
        if self.threshold not in (pipelines.ROWS, pipelines.ELEMENTS):
            raise ParameterError("threshold must be 'rows' or 'elements'")
        return pipelines.PipelineConfig(
            basis=self.basis,
            threshold=pipelines.ThresholdRule(self.threshold, self.kappa),
            cluster_on=getattr(self, "cluster_on", "Y"),
            kmeans=KMeansConfig(restarts=getattr(self, "n_init", 1), seed=self.random_state or 0),
            delta=self.noise_level,
        )

    def _spectrum(self, n):
        return spectrum_from_kernel(KernelSpec(self.kernel, self.lam), n)


class ClusteredDeconvolution(ClusterMixin, TransformerMixin, _DeconvolutionBase):
    """Cluster noisy blurred signals, then deconvolve each cluster average.

    Parameters
    ----------
    n_clusters : int or 'auto'
        ``'auto'`` chooses the number of clusters by penalized selection.
    kernel : {'laplace', 'gaussian', 'delta'}
    lam : float
        Kernel scale parameter.
    basis : {'fourier', 'daubechies8'}
    threshold : {'rows', 'elements'}
    kappa : float
        Threshold level constant.
    n_init : int
        k-means++ restarts.
    cluster_on : {'Y', 'UY'}
    noise_level : float, optional
        Known noise SD; estimated when ``None``.
    random_state : int, optional

    Attributes
    ----------
    labels_ : ndarray (n_signals,)
    components_ : ndarray (n_clusters_, n_samples)
        Deconvolved cluster representatives.
    n_clusters_ : int
    noise_level_ : float
    """

    def __init__(
        self, n_clusters=4, kernel="laplace", lam=5.0, basis="fourier", threshold="rows",
        kappa=3.0, n_init=10, cluster_on="Y", noise_level=None, random_state=None,
    ):
        self.n_clusters = n_clusters
        self.kernel = kernel
        self.lam = lam
        self.basis = basis
        self.threshold = threshold
        self.kappa = kappa
        self.n_init = n_init
        self.cluster_on = cluster_on
        self.noise_level = noise_level
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _check_signals(X)
        n = X.shape[1]
        spectrum = self._spectrum(n)
        out = pipelines.estimate_before(X.T, spectrum, self.n_clusters, self._config())
        a = out.assignment
        self.labels_ = a.labels.copy()
        self.n_clusters_ = a.K
        first = np.array([np.flatnonzero(a.labels == k)[0] for k in range(a.K)])
        self.components_ = out.F_hat[:, first].T
        Y = to_sequence(X.T, Basis.fourier(n))
        self.cluster_centers_ = project_columns(Y, a)[:, first].T
        self.noise_level_ = out.delta_hat
        self.n_features_in_ = n
        return self

    def predict(self, X):
        """Nearest fitted cluster center in the Fourier domain of the observations."""
        check_is_fitted(self, "cluster_centers_")
        X = _check_signals(X, self.n_features_in_)
        Y = to_sequence(X.T, Basis.fourier(self.n_features_in_)).T
        d2 = ((Y[:, None, :] - self.cluster_centers_[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)

    def transform(self, X):
        """Deconvolved estimate of each signal: the representative of its predicted cluster."""
        return self.components_[self.predict(X)]

    def fit_transform(self, X, y=None):
        self.fit(X)
        return self.components_[self.labels_]


class SeparateDeconvolution(TransformerMixin, _DeconvolutionBase):
    """Threshold-based deconvolution of every signal on its own.

    Parameters are as in :class:`ClusteredDeconvolution`; thresholding is
    always element-wise.
    """

    def __init__(self, kernel="laplace", lam=5.0, basis="fourier", kappa=3.0, noise_level=None):
        self.kernel = kernel
        self.lam = lam
        self.basis = basis
        self.kappa = kappa
        self.noise_level = noise_level

    threshold = pipelines.ELEMENTS
    random_state = None

    def fit(self, X, y=None):
        X = _check_signals(X)
        self.n_features_in_ = X.shape[1]
        self.spectrum_ = self._spectrum(X.shape[1])
        return self

    def transform(self, X):
        check_is_fitted(self, "spectrum_")
        X = _check_signals(X, self.n_features_in_)
        out = pipelines.estimate_none(X.T, self.spectrum_, self._config())
        self.noise_level_ = out.delta_hat
        return out.F_hat.T
