"""Closed-form risk rates, the oracle-bound right-hand side and a Gaussian
quadratic-form tail check.

Rates
-----
With ``a = 2r / (2r + 2 gamma + 1)`` and ``b = 2r / (2r + 2 gamma)``, the
polynomial regime (``alpha = beta = 0``) has::

    clustered   = (delta^2 ln K)^b + (delta^2 K / M)^a
    unclustered = (delta^2)^a

and the exponential regime (``alpha, beta > 0``)::

    clustered   = ln(1 / (delta^2 ln K))^(-2r/beta) + ln(M / (delta^2 K))^(-2r/beta)
    unclustered = ln(1 / delta)^(-2r/beta)

The ``ln K`` term is zero when ``K = 1``.  These are rates up to constants,
so they are only meaningful as trends.
"""

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .clustering import project_columns
from .exceptions import DimensionError, DomainError, ParameterError
from .selection import penalty_nested_curve

POLYNOMIAL = "polynomial"
SEVERE = "severe"
RATE_COLUMNS = ("M", "K", "delta", "r", "gamma", "alpha", "beta", "rate_clustered", "rate_unclustered", "ratio")


@dataclass(frozen=True)
class RateParams:
    """Smoothness, ill-posedness and problem size.

    ``alpha = beta = 0`` selects the polynomial regime; ``alpha, beta > 0``
    the exponential one.  Mixed settings are rejected.
    """

    r: float
    gamma: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    M: int = 1
    K: int = 1
    delta: float = 0.1
    A_ball: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ParameterError("r must be positive")
        if min(self.gamma, self.alpha, self.beta) < 0:
            raise ParameterError("gamma, alpha and beta must be nonnegative")
        if (self.alpha > 0) != (self.beta > 0):
            raise ParameterError("alpha and beta must be both zero or both positive")
        if not 1 <= self.K <= self.M:
            raise ParameterError(f"need 1 <= K <= M, got K={self.K}, M={self.M}")
        if not (self.delta > 0 and self.A_ball > 0):
            raise ParameterError("delta and A_ball must be positive")

    @property
    def regime(self):
        return SEVERE if self.beta > 0 else POLYNOMIAL


def sobolev_seminorm(theta, r):
    """``sum_j theta_j^2 j^(2r)`` with ``j`` counted from 1."""
    theta = np.asarray(theta, dtype=float).ravel()
    j = np.arange(1, theta.size + 1, dtype=float)
    return float(np.sum(theta**2 * j ** (2 * r)))


def in_sobolev_ball(theta, r, A_ball):
    return sobolev_seminorm(theta, r) <= A_ball**2


def _log_power(arg, exponent, what):
    if not arg > 1:
        raise DomainError(f"{what} = {arg:.6g} must exceed 1 for the logarithmic rate")
    return float(np.log(arg) ** exponent)


def rate_clustered(p):
    """Risk rate of the clustered estimator."""
    d2 = p.delta**2
    lnK = np.log(p.K)
    if p.regime == POLYNOMIAL:
        a = 2 * p.r / (2 * p.r + 2 * p.gamma + 1)
        b = 2 * p.r / (2 * p.r + 2 * p.gamma)
        return float((d2 * lnK) ** b + (d2 * p.K / p.M) ** a)
    e = -2 * p.r / p.beta
    first = 0.0 if p.K == 1 else _log_power(1.0 / (d2 * lnK), e, "1/(delta^2 ln K)")
    return first + _log_power(p.M / (d2 * p.K), e, "M/(delta^2 K)")


def rate_unclustered(p):
    """Risk rate of solving each problem separately (independent of ``M`` and ``K``)."""
    if p.regime == POLYNOMIAL:
        return float((p.delta**2) ** (2 * p.r / (2 * p.gamma + 2 * p.r + 1)))
    return _log_power(1.0 / p.delta, -2 * p.r / p.beta, "1/delta")


def clustering_advantage(p):
    """``rate_clustered / rate_unclustered``; below 1 means clustering helps."""
    return rate_clustered(p) / rate_unclustered(p)


def rate_sweep(grid):
    """Evaluate the three rate functions on an iterable of :class:`RateParams`.

    Returns a list of dicts keyed by :data:`RATE_COLUMNS`.
    """
    rows = []
    for p in grid:
        rc, ru = rate_clustered(p), rate_unclustered(p)
        rec = {k: v for k, v in asdict(p).items() if k in RATE_COLUMNS}
        rec.update(rate_clustered=rc, rate_unclustered=ru, ratio=rc / ru)
        rows.append(rec)
    return rows


def rate_sweep_csv(rows, header_comment=None):
    """CSV text with columns :data:`RATE_COLUMNS`, floats in ``repr`` form."""
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATE_COLUMNS)
    for row in rows:
        w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in RATE_COLUMNS])
    return buf.getvalue()


def bias_term(G_true, assignment, L):
    """``||W_L G Pi_Z - G||_F^2``: low-pass cluster-averaged approximation error."""
    G_true = np.asarray(G_true, dtype=float)
    if not 0 <= L <= G_true.shape[0]:
        raise ParameterError(f"L must lie in 0..{G_true.shape[0]}, got {L}")
    P = project_columns(G_true, assignment)
    P[L:] = 0.0
    return float(np.sum((P - G_true) ** 2))


def _bias_curve(G_true, assignment):
    # entry L-1 is bias_term(G_true, assignment, L)
    P = project_columns(G_true, assignment)
    within = float(np.sum((P - G_true) ** 2))
    tail = np.cumsum(np.sum(P**2, axis=1)[::-1])[::-1]
    return within + np.append(tail[1:], 0.0)


def oracle_bound_rhs(G_true, assignment, L, K, spectrum, cfg):
    """``3 bias^2 + 4 Pen(L, K)`` for one candidate ``(Z, L, K)``."""
    G_true = np.asarray(G_true, dtype=float)
    if assignment.M != G_true.shape[1]:
        raise DimensionError("assignment and G_true disagree on M")
    pen = penalty_nested_curve(K, G_true.shape[1], spectrum, cfg)[L - 1]
    return 3.0 * bias_term(G_true, assignment, L) + 4.0 * float(pen)


def oracle_bound_min(G_true, assignments, spectrum, cfg, K=None):
    """Smallest right-hand side over the given clusterings and every ``L = 1..n``.

    ``K`` defaults to each assignment's own number of clusters.

    Returns
    -------
    value : float
    argmin : tuple (index into ``assignments``, L)
    """
    G_true = np.asarray(G_true, dtype=float)
    best = (np.inf, None)
    for i, a in enumerate(assignments):
        Kc = a.K if K is None else K
        curve = 3.0 * _bias_curve(G_true, a) + 4.0 * penalty_nested_curve(Kc, G_true.shape[1], spectrum, cfg)
        L = int(np.argmin(curve)) + 1
        if curve[L - 1] < best[0]:
            best = (float(curve[L - 1]), (i, L))
    return best


def quadratic_tail_threshold(A, x):
    """``Tr(A^T A) + 2 sqrt(||A||_op^2 Tr(A^T A) x) + 2 ||A||_op^2 x``."""
    A = np.asarray(A, dtype=float)
    tr = float(np.sum(A**2))
    op2 = float(np.linalg.norm(A, 2) ** 2) if A.size else 0.0
    return tr + 2.0 * np.sqrt(op2 * tr * x) + 2.0 * op2 * x


def gaussian_quadratic_tail(A, x, trials, seed, chunk=10_000):
    """Monte Carlo frequency of ``||A eps||^2 > quadratic_tail_threshold(A, x)``.

    ``eps`` is standard Gaussian; the bound says the frequency is at most
    ``exp(-x)`` up to sampling error.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"A must be a matrix, got shape {A.shape}")
    if not x > 0 or trials < 1:
        raise ParameterError("x must be positive and trials >= 1")
    t = quadratic_tail_threshold(A, x)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        eps = rng.standard_normal((m, A.shape[1]))
        hits += int(np.count_nonzero(np.sum((eps @ A.T) ** 2, axis=1) > t))
        done += m
    return hits / trials


def tail_tolerance(x, trials):
    """``exp(-x) + 3 sqrt(exp(-x) / trials)``."""
    p = np.exp(-x)
    return float(p + 3.0 * np.sqrt(p / trials))
