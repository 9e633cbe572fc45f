"""The three estimators of a family of deconvolution problems.

``clustering_before``
    cluster the observed columns, average the deconvolved coefficients
    within clusters, threshold, synthesize.
``no_clustering``
    threshold each deconvolved column on its own.
``clustering_after``
    run ``no_clustering`` and then K-means on the recovered signals,
    replacing each one by its cluster mean.

Thresholding happens in the Fourier domain, where the noise of every
deconvolved coefficient has SD ``delta * nu_j / sqrt(N)`` with ``N`` the
size of the cluster being averaged (1 without clustering).  With the
wavelet basis the surviving Fourier coefficients fix, per column, a
low-pass cutoff (the last frequency that passed); the cut-off data are
moved to the Daubechies-8 basis and thresholded element by element at the
exact noise SD of each wavelet coefficient.  Without the cutoff the
wavelet coefficients would carry the full amplified noise of the highest
frequencies.
"""

from dataclasses import dataclass, field

import numpy as np

from . import transforms
from .clustering import ClusteringAssignment, KMeansConfig, kmeans_columns, miss_rate, project_columns
from .exceptions import DimensionError, ParameterError
from .forward_model import estimate_noise_level, to_sequence
from .selection import (
    PenaltyConfig,
    element_thresholds,
    hard_threshold_elements,
    hard_threshold_rows,
    row_thresholds,
    solve_joint,
    universal_level,
)
from .transforms import Basis

ROWS = "rows"
ELEMENTS = "elements"


@dataclass(frozen=True)
class ThresholdRule:
    """Hard-threshold structure and level constant.

    ``mode='rows'`` keeps or drops whole rows of the cluster-averaged
    coefficients (one index set shared by all clusters); ``'elements'``
    decides every coefficient separately.  Levels use
    ``sqrt(2 kappa ln(nM))`` (see :func:`selection.universal_level`).
    """

    mode: str = ROWS
    kappa: float = 3.0

    def __post_init__(self):
        if self.mode not in (ROWS, ELEMENTS):
            raise ParameterError(f"threshold mode must be 'rows' or 'elements', got {self.mode!r}")
        if not self.kappa > 0:
            raise ParameterError("kappa must be positive")


@dataclass(frozen=True)
class PipelineConfig:
    """Settings shared by the three pipelines.

    Parameters
    ----------
    basis : {'fourier', 'daubechies8'}
    threshold : ThresholdRule
    cluster_on : {'Y', 'UY'}
        Columns clustered by ``clustering_before``: raw coefficients ``Y``
        or deconvolved ones ``Upsilon Y``.
    selection : {'threshold', 'penalty'}
        How ``clustering_before`` picks the kept coefficients: hard
        thresholding, or the penalized nested cutoff of ``solve_joint``.
    delta : float, optional
        Known noise level; estimated from the data when ``None``.
    """

    basis: str = transforms.FOURIER
    threshold: ThresholdRule = field(default_factory=ThresholdRule)
    cluster_on: str = "Y"
    selection: str = "threshold"
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)
    delta: float = None
    tau: float = 2.0
    C_psi: float = 1.0
    K_range: tuple = None

    def __post_init__(self):
        if self.cluster_on not in ("Y", "UY"):
            raise ParameterError("cluster_on must be 'Y' or 'UY'")
        if self.selection not in ("threshold", "penalty"):
            raise ParameterError("selection must be 'threshold' or 'penalty'")

    @classmethod
    def for_function_set(cls, name, **kwargs):
        """Fourier basis with row thresholding for 'smooth', Daubechies-8 with elements for 'nonsmooth'."""
        if name == "smooth":
            return cls(basis=transforms.FOURIER, threshold=ThresholdRule(ROWS), **kwargs)
        if name == "nonsmooth":
            return cls(basis=transforms.DAUBECHIES8, threshold=ThresholdRule(ELEMENTS), **kwargs)
        raise ParameterError(f"unknown function set {name!r}")


@dataclass
class PipelineOutput:
    """Estimated signals with optional clustering and error metrics."""

    F_hat: np.ndarray
    assignment: ClusteringAssignment = None
    error: float = None
    miss_rate: float = None
    K_hat: int = None
    delta_hat: float = None


def relative_error(F_hat, F_true):
    """``||F_hat - F_true||_F / sqrt(M n)``."""
    F_hat = np.asarray(F_hat, dtype=float)
    F_true = np.asarray(F_true, dtype=float)
    if F_hat.shape != F_true.shape:
        raise DimensionError(f"shapes differ: {F_hat.shape} vs {F_true.shape}")
    return float(np.linalg.norm(F_hat - F_true) / np.sqrt(F_true.size))


def _prefix_mask(mask):
    # extend each column's mask to everything up to its last True entry
    n = mask.shape[0]
    any_kept = mask.any(axis=0)
    last = np.where(any_kept, n - 1 - np.argmax(mask[::-1], axis=0), -1)
    return np.arange(n)[:, None] <= last[None, :]


def threshold_estimate(P, nu, delta, basis, rule, assignment=None):
    """Threshold deconvolved Fourier coefficients and return the signal estimate.

    Parameters
    ----------
    P : ndarray (n, M)
        Deconvolved Fourier coefficients, cluster-averaged if ``assignment``
        is given.
    nu : ndarray (n,)
    delta : float
    basis : Basis
        Basis in which the final element thresholding is done.
    rule : ThresholdRule
    assignment : ClusteringAssignment, optional
        Clustering used to form ``P``; ``None`` means no averaging.

    Returns
    -------
    F_hat : ndarray (n, M)
    G_hat : ndarray (n, M)
        Thresholded coefficients in ``basis``.
    """
    n, M = P.shape
    if assignment is None:
        assignment = ClusteringAssignment.singletons(M)
    size = assignment.sizes[assignment.labels].astype(float)
    nu = np.asarray(nu, dtype=float)
    if rule.mode == ROWS:
        G, kept = hard_threshold_rows(P, row_thresholds(delta, nu, assignment.K, n, M, rule.kappa))
        mask = np.zeros(P.shape, dtype=bool)
        mask[kept] = True
    else:
        t = element_thresholds(delta, nu[:, None] / np.sqrt(size)[None, :], n, M, rule.kappa)
        G = hard_threshold_elements(P, t)
        mask = np.abs(P) > t
    fourier = Basis.fourier(n)
    if basis.variant == transforms.FOURIER:
        return transforms.synthesize_columns(G, fourier), G

    cut = _prefix_mask(mask)
    T = transforms.fourier_to_basis(basis)
    C = T @ np.where(cut, P, 0.0)
    sd = np.sqrt((T**2) @ np.where(cut, (nu**2)[:, None], 0.0)) / np.sqrt(size)[None, :]
    C = hard_threshold_elements(C, delta * sd * universal_level(n, M, rule.kappa))
    return transforms.synthesize_columns(C, basis), C


def _prepare(X, spectrum, cfg):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"observations must be an (n, M) matrix, got shape {X.shape}")
    n = X.shape[0]
    if spectrum.n != n:
        raise DimensionError(f"spectrum has length {spectrum.n} but observations have {n} rows")
    basis = Basis(cfg.basis, n)
    delta = cfg.delta if cfg.delta is not None else estimate_noise_level(X)
    Y = to_sequence(X, Basis.fourier(n))
    return X, basis, delta, Y, spectrum.deconvolve(Y)


def _metrics(out, truth_F, truth_assignment):
    if truth_F is not None:
        out.error = relative_error(out.F_hat, truth_F)
    if truth_assignment is not None and out.assignment is not None:
        out.miss_rate = miss_rate(out.assignment, truth_assignment)
    return out


def estimate_before(X, spectrum, K, cfg=None):
    """Clustering-before estimate from raw observations.

    ``K='auto'`` picks the number of clusters with :func:`selection.solve_joint`.
    Returns a :class:`PipelineOutput` without error metrics.
    """
    cfg = cfg or PipelineConfig()
    X, basis, delta, Y, UY = _prepare(X, spectrum, cfg)
    M = X.shape[1]
    auto = isinstance(K, str)
    if auto and K != "auto":
        raise ParameterError(f"K must be an integer or 'auto', got {K!r}")
    if not auto and not 1 <= K <= M:
        raise ParameterError(f"K must satisfy 1 <= K <= M={M}, got {K}")

    if auto or cfg.selection == "penalty":
        pcfg = PenaltyConfig(delta=delta, C_psi=cfg.C_psi, tau=cfg.tau)
        K_range = (cfg.K_range or None) if auto else [K]
        sel = solve_joint(Y, spectrum, pcfg, cfg.kmeans, K_range=K_range)
        a = sel.assignment
        if cfg.selection == "penalty":
            F_hat = transforms.synthesize_columns(sel.G_hat, Basis.fourier(X.shape[0]))
            return PipelineOutput(F_hat=F_hat, assignment=a, K_hat=sel.K_hat, delta_hat=delta)
    else:
        a, _ = kmeans_columns(Y if cfg.cluster_on == "Y" else UY, K, cfg.kmeans)
    F_hat, _ = threshold_estimate(project_columns(UY, a), spectrum.nu, delta, basis, cfg.threshold, a)
    return PipelineOutput(F_hat=F_hat, assignment=a, K_hat=a.K, delta_hat=delta)


def estimate_none(X, spectrum, cfg=None):
    """No-clustering estimate: element thresholding of every deconvolved column."""
    cfg = cfg or PipelineConfig()
    X, basis, delta, Y, UY = _prepare(X, spectrum, cfg)
    rule = ThresholdRule(ELEMENTS, cfg.threshold.kappa)
    F_hat, _ = threshold_estimate(UY, spectrum.nu, delta, basis, rule)
    return PipelineOutput(F_hat=F_hat, delta_hat=delta)


def estimate_after(X, spectrum, K, cfg=None):
    """Clustering-after estimate: K-means on the no-clustering signals, then averaging."""
    cfg = cfg or PipelineConfig()
    none = estimate_none(X, spectrum, cfg)
    a, _ = kmeans_columns(none.F_hat, K, cfg.kmeans)
    return PipelineOutput(F_hat=project_columns(none.F_hat, a), assignment=a, K_hat=K, delta_hat=none.delta_hat)


def clustering_before(X, instance, K=None, cfg=None):
    """Clustering-before pipeline scored against ``instance`` (K defaults to the true K)."""
    out = estimate_before(X, instance.spectrum, instance.K if K is None else K, cfg)
    return _metrics(out, instance.F_true, instance.assignment)


def no_clustering(X, instance, cfg=None):
    """No-clustering pipeline scored against ``instance``."""
    return _metrics(estimate_none(X, instance.spectrum, cfg), instance.F_true, None)


def clustering_after(X, instance, K=None, cfg=None):
    """Clustering-after pipeline scored against ``instance``."""
    out = estimate_after(X, instance.spectrum, instance.K if K is None else K, cfg)
    return _metrics(out, instance.F_true, instance.assignment)
