"""Penalties, hard thresholding and the joint (clustering, cutoff, K) solver.

For a clustering ``Z`` with ``K`` groups and a nested index set
``J = {1..L}`` the criterion is::

    ||(I - W_L) UY Pi_Z||_F^2 + ||UY Pi_Z^perp||_F^2 + Pen(L, K)
        = ||UY||_F^2 - ||W_L UY Pi_Z||_F^2 + Pen(L, K)

where ``UY`` are the deconvolved coefficients.  For fixed ``(L, K)`` the
best ``Z`` is therefore a K-means clustering of the first ``L`` rows of
``UY``, and the fitted matrix is ``G_hat = W_L UY Pi_Z``.
"""

import json
from dataclasses import dataclass

import numpy as np

from .clustering import ClusteringAssignment, KMeansConfig, kmeans_columns, project_columns
from .exceptions import DegenerateSpectrumError, DimensionError, ParameterError


@dataclass(frozen=True)
class PenaltyConfig:
    """Constants of the penalty.

    Parameters
    ----------
    delta : float
        Noise level of the sequence model.
    C_psi : float
        Frame constant; 1 for the Fourier eigenbasis.
    tau : float
        Confidence exponent: the oracle bound holds with probability
        at least ``1 - 2 delta^tau``.
    n : int, optional
        Cutoff entering the log terms.  ``None`` uses the number of
        coefficients in the data; :meth:`delta_cutoff` gives ``floor(delta^-2)``.
    """

    delta: float
    C_psi: float = 1.0
    tau: float = 2.0
    n: int = None

    def __post_init__(self):
        if not (self.delta > 0 and self.C_psi > 0 and self.tau > 0):
            raise ParameterError("delta, C_psi and tau must be positive")
        if self.n is not None and self.n < 1:
            raise ParameterError("n must be a positive integer")

    @classmethod
    def delta_cutoff(cls, delta, **kwargs):
        # the relative nudge keeps e.g. 0.1**-2 = 99.999... from flooring to 99
        return cls(delta=delta, n=max(1, int(np.floor(delta**-2 * (1 + 1e-12)))), **kwargs)

    def cutoff(self, default):
        return default if self.n is None else self.n


def _nu(spectrum):
    return spectrum.nu if hasattr(spectrum, "nu") else np.asarray(spectrum, dtype=float)


def penalty(J, K, M, spectrum, cfg):
    """Penalty for an arbitrary nonempty index set ``J`` (0-based indices)."""
    nu = _nu(spectrum)
    J = np.unique(np.asarray(J, dtype=int))
    if J.size == 0:
        raise ParameterError("index set J must be nonempty")
    if J.min() < 0 or J.max() >= nu.size:
        raise ParameterError(f"index set J must lie in 0..{nu.size - 1}")
    if not 1 <= K <= M:
        raise ParameterError(f"K must satisfy 1 <= K <= M, got K={K}, M={M}")
    n = cfg.cutoff(nu.size)
    nu2 = nu[J] ** 2
    size = J.size
    logs = M * np.log(K) + size * np.log(n * np.e / size) + np.log(M * n / cfg.delta**cfg.tau)
    return float(2 * cfg.C_psi**2 * cfg.delta**2 * (26 * K * nu2.sum() + 39 * nu2.max() * logs))


def penalty_nested_curve(K, M, spectrum, cfg):
    """Nested-set penalty for every ``L = 1..n`` (entry ``L-1``)."""
    nu = _nu(spectrum)
    if not 1 <= K <= M:
        raise ParameterError(f"K must satisfy 1 <= K <= M, got K={K}, M={M}")
    n = cfg.cutoff(nu.size)
    nu2 = nu**2
    logs = M * np.log(K) + np.log(M * n / cfg.delta**cfg.tau)
    return 2 * cfg.C_psi**2 * cfg.delta**2 * (26 * K * np.cumsum(nu2) + 39 * nu2 * logs)


def penalty_nested(L, K, M, spectrum, cfg):
    """Penalty for the nested set ``J = {1..L}``."""
    nu = _nu(spectrum)
    if not 1 <= L <= nu.size:
        raise ParameterError(f"L must satisfy 1 <= L <= {nu.size}, got {L}")
    return float(penalty_nested_curve(K, M, nu, cfg)[L - 1])


def hard_threshold_rows(G, thresholds):
    """Zero every row whose Euclidean norm does not exceed its threshold.

    Returns the thresholded matrix and the kept (0-based) row indices.
    """
    G = np.asarray(G, dtype=float)
    t = np.asarray(thresholds, dtype=float)
    if t.shape != (G.shape[0],):
        raise DimensionError(f"need one threshold per row ({G.shape[0]}), got shape {t.shape}")
    keep = np.linalg.norm(G, axis=1) > t
    return np.where(keep[:, None], G, 0.0), np.flatnonzero(keep)


def hard_threshold_elements(G, thresholds):
    """Zero every entry whose magnitude does not exceed its threshold.

    ``thresholds`` is a per-row vector or a full matrix of the shape of ``G``.
    """
    G = np.asarray(G, dtype=float)
    t = np.asarray(thresholds, dtype=float)
    if t.ndim == 1:
        if t.shape[0] != G.shape[0]:
            raise DimensionError(f"need one threshold per row ({G.shape[0]}), got {t.shape[0]}")
        t = t[:, None]
    elif t.shape != G.shape:
        raise DimensionError(f"threshold matrix has shape {t.shape}, data {G.shape}")
    return np.where(np.abs(G) > t, G, 0.0)


def universal_level(n, M, kappa=3.0):
    """``sqrt(2 kappa ln(n M))``; ``kappa=1`` is the classical universal level."""
    return float(np.sqrt(2.0 * kappa * np.log(n * M)))


def element_thresholds(delta, amplification, n, M, kappa=3.0):
    """Per-coefficient thresholds ``delta * amp_j * sqrt(2 kappa ln(nM))``."""
    return delta * np.asarray(amplification, dtype=float) * universal_level(n, M, kappa)


def row_thresholds(delta, amplification, K, n, M, kappa=3.0):
    """Row-norm thresholds ``delta * amp_j * (sqrt(K) + sqrt(2 kappa ln(nM)))``.

    A pure-noise row of a rank-``K`` cluster average has norm
    ``delta amp_j chi_K``, whose mean is below ``sqrt(K)``.
    """
    return delta * np.asarray(amplification, dtype=float) * (np.sqrt(K) + universal_level(n, M, kappa))


@dataclass
class SelectionResult:
    """Minimizer of the penalized criterion over ``(Z, L, K)``."""

    assignment: ClusteringAssignment
    K_hat: int
    L_hat: int
    G_hat: np.ndarray
    objective: float
    penalty: float

    @property
    def J_hat(self):
        return np.arange(self.L_hat)

    def to_dict(self):
        return {
            "labels": self.assignment.labels.tolist(),
            "K_hat": self.K_hat,
            "L_hat": self.L_hat,
            "objective": self.objective,
            "penalty": self.penalty,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def objective_curve(UY, assignment, M, spectrum, cfg):
    """Criterion value for every ``L = 1..n`` at a fixed clustering."""
    P = project_columns(UY, assignment)
    kept = np.cumsum(np.sum(P**2, axis=1))
    return float(np.sum(UY**2)) - kept + penalty_nested_curve(assignment.K, M, spectrum, cfg)


def joint_objective(UY, assignment, L, spectrum, cfg):
    """Criterion value computed term by term (no shortcuts), for checks."""
    P = project_columns(UY, assignment)
    tail = P.copy()
    tail[:L] = 0.0
    return float(
        np.sum(tail**2)
        + np.sum((UY - P) ** 2)
        + penalty_nested(L, assignment.K, UY.shape[1], spectrum, cfg)
    )


def default_K_range(M, full_range=False):
    return range(1, M + 1) if full_range else range(1, min(M, 12) + 1)


def solve_joint(Y, spectrum, cfg, kmeans_cfg=None, K_range=None, full_range=False):
    """Minimize the penalized criterion over clusterings, nested cutoffs and ``K``.

    Parameters
    ----------
    Y : ndarray (n, M)
        Fourier coefficients of the observations (unweighted).
    spectrum : OperatorSpectrum or array of ``nu_j``
    cfg : PenaltyConfig
    kmeans_cfg : KMeansConfig, optional
    K_range : iterable of int, optional
        Defaults to ``1..min(M, 12)``; ``full_range=True`` searches ``1..M``.

    Notes
    -----
    For each ``K`` the cutoffs are visited in increasing order of the lower
    bound ``||UY||^2 - ||W_L UY||^2 + Pen(L, K)`` (valid because averaging
    within clusters can only lose energy).  At each visited ``L`` the first
    ``L`` rows are clustered by K-means and the resulting clustering is
    scored at every cutoff.  The search for a given ``K`` stops once the
    bound exceeds the best score found, so no better ``L`` is skipped.
    Ties are broken by smaller ``K`` and then smaller ``L``.
    """
    nu = _nu(spectrum)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != nu.size:
        raise DimensionError(f"coefficients have shape {Y.shape}; spectrum length {nu.size}")
    if not np.all(np.isfinite(nu)) or np.any(nu <= 0):
        raise DegenerateSpectrumError("spectrum must be finite and positive")
    n, M = Y.shape
    K_values = sorted(set(default_K_range(M, full_range) if K_range is None else K_range))
    if not K_values:
        raise ParameterError("K_range is empty")
    if K_values[0] < 1 or K_values[-1] > M:
        raise ParameterError(f"K_range must lie within 1..{M}")
    kmeans_cfg = kmeans_cfg or KMeansConfig()

    UY = spectrum.deconvolve(Y) if hasattr(spectrum, "deconvolve") else nu[:, None] * Y
    total = float(np.sum(UY**2))
    row_energy = np.cumsum(np.sum(UY**2, axis=1))

    best = None  # (objective, K, L, assignment)
    for K in K_values:
        pen = penalty_nested_curve(K, M, nu, cfg)
        if K == 1:
            candidates = [ClusteringAssignment(np.zeros(M, dtype=int), 1)]
        elif K == M:
            candidates = [ClusteringAssignment.singletons(M)]
        else:
            candidates = None
        if candidates is not None:
            for a in candidates:
                curve = total - np.cumsum(np.sum(project_columns(UY, a) ** 2, axis=1)) + pen
                L = int(np.argmin(curve)) + 1
                best = _better(best, (float(curve[L - 1]), K, L, a))
            continue

        bound = total - row_energy + pen
        best_K = np.inf
        seen = set()
        for L in np.argsort(bound, kind="stable") + 1:
            if bound[L - 1] >= best_K:
                break
            a, _ = kmeans_columns(UY[:L], K, kmeans_cfg)
            a = a.canonical()
            if a in seen:
                continue
            seen.add(a)
            curve = total - np.cumsum(np.sum(project_columns(UY, a) ** 2, axis=1)) + pen
            L_best = int(np.argmin(curve)) + 1
            cand = (float(curve[L_best - 1]), K, L_best, a)
            best_K = min(best_K, cand[0])
            best = _better(best, cand)

    objective, K_hat, L_hat, a = best
    G_hat = project_columns(UY, a)
    G_hat[L_hat:] = 0.0
    pen_value = penalty_nested(L_hat, K_hat, M, nu, cfg)
    return SelectionResult(
        assignment=a,
        K_hat=K_hat,
        L_hat=L_hat,
        G_hat=G_hat,
        objective=joint_objective(UY, a, L_hat, nu, cfg),
        penalty=pen_value,
    )


def _better(best, cand):
    if best is None:
        return cand
    # strict improvement keeps the earlier (smaller K, smaller L) on ties
    if cand[0] < best[0] - 1e-12 * max(1.0, abs(best[0])):
        return cand
    return best
