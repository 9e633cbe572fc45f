"""Periodic convolution operators, simulated data and the sequence-model reduction.

Discretization
--------------
A kernel ``g`` is sampled at the lags ``x_t = t/n`` (``t <= n/2``) and
``(t - n)/n`` (``t > n/2``), periodized by summing the copies shifted by
``-1, 0, 1`` and then scaled according to ``normalization``:

``'grid'``
    raw samples; the operator is the discrete circular convolution
    ``q_i = sum_l h_l g_{i-l}``, so its DC gain is ``sum_t g(x_t)``.
``'unit_sum'``
    samples divided by their sum, making the operator an averaging filter.

With the real orthonormal Fourier basis the operator is diagonal, with
gain ``g~_k = (FFT g)_k`` (real because the periodized kernel is even) on
both the cosine and the sine coefficient of frequency ``k``.  The
quasi-singular values are ``nu_j = 1 / |g~_k(j)|``.

Observation noise is i.i.d. ``N(0, sigma^2)`` on the grid and the Fourier
transform is orthonormal, so the sequence-model noise level is
``delta = sigma``.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import transforms
from .clustering import ClusteringAssignment
from .exceptions import DegenerateSpectrumError, DimensionError, ParameterError
from .transforms import Basis

LAPLACE = "laplace"
GAUSSIAN = "gaussian"
NORMALIZATIONS = ("grid", "unit_sum")


@dataclass(frozen=True)
class KernelSpec:
    """Convolution kernel ``0.5 exp(-lam |x|)`` (laplace) or ``exp(-lam x^2 / 2)`` (gaussian).

    ``family='delta'`` gives the identity operator.
    """

    family: str
    lam: float = 1.0
    normalization: str = "grid"

    def __post_init__(self):
        if self.family not in (LAPLACE, GAUSSIAN, "delta"):
            raise ParameterError(f"unknown kernel family {self.family!r}")
        if not self.lam > 0:
            raise ParameterError(f"kernel lambda must be positive, got {self.lam}")
        if self.normalization not in NORMALIZATIONS:
            raise ParameterError(f"normalization must be one of {NORMALIZATIONS}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == LAPLACE:
            return 0.5 * np.exp(-self.lam * np.abs(x))
        if self.family == GAUSSIAN:
            return np.exp(-self.lam * x**2 / 2.0)
        return np.where(x == 0, 1.0, 0.0)

    def to_dict(self):
        return {"family": self.family, "lam": self.lam, "normalization": self.normalization}


def discretize_kernel(kernel, n):
    """Periodized kernel samples at lags ``0, 1/n, ..., (n-1)/n`` (wrapping at 1/2)."""
    t = np.arange(n)
    lags = np.where(t <= n // 2, t, t - n) / n
    if kernel.family == "delta":
        return np.where(t == 0, 1.0, 0.0)
    g = kernel(lags - 1.0) + kernel(lags) + kernel(lags + 1.0)
    if kernel.normalization == "unit_sum":
        g = g / g.sum()
    return g


def kernel_gains(kernel, n):
    """Fourier gains ``g~_k`` for frequencies ``k = 0..n/2``."""
    return np.fft.rfft(discretize_kernel(kernel, n)).real


@dataclass(frozen=True)
class OperatorSpectrum:
    """Quasi-singular values ``nu_j`` in the real-Fourier coefficient order.

    ``signs`` holds the sign of each operator eigenvalue (all +1 when
    omitted), so the deconvolved coefficients are ``signs * nu * Y``.
    ``descriptors`` optionally holds the ill-posedness parameters
    ``gamma, alpha, beta, aleph1, aleph2`` of the growth condition
    ``aleph1 j^gamma exp(alpha j^beta) <= nu_j <= aleph2 j^gamma exp(alpha j^beta)``.
    """

    nu: np.ndarray
    descriptors: dict = None
    signs: np.ndarray = None

    def __post_init__(self):
        nu = np.array(self.nu, dtype=float)
        if nu.ndim != 1 or not np.all(np.isfinite(nu)) or np.any(nu <= 0):
            raise DegenerateSpectrumError("nu must be a finite positive vector")
        signs = np.ones_like(nu) if self.signs is None else np.array(self.signs, dtype=float)
        if signs.shape != nu.shape or not np.all(np.abs(signs) == 1):
            raise DegenerateSpectrumError("signs must be a +-1 vector matching nu")
        nu.setflags(write=False)
        signs.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "signs", signs)

    def deconvolve(self, Y):
        """``Upsilon Y``: Fourier coefficients of the data divided by the operator eigenvalues."""
        Y = np.asarray(Y, dtype=float)
        if Y.shape[0] != self.n:
            raise DimensionError(f"coefficients have {Y.shape[0]} rows, spectrum {self.n}")
        w = self.signs * self.nu
        return w.reshape((-1,) + (1,) * (Y.ndim - 1)) * Y

    @property
    def n(self):
        return self.nu.size

    def satisfies_growth(self, gamma, alpha, beta, aleph1, aleph2):
        """Check the two-sided growth condition for every index ``j = 1..n``."""
        j = np.arange(1, self.n + 1)
        ref = j**gamma * np.exp(alpha * j**beta)
        return bool(np.all(aleph1 * ref <= self.nu) and np.all(self.nu <= aleph2 * ref))

    def check_descriptors(self):
        if self.descriptors is None:
            return True
        return self.satisfies_growth(**self.descriptors)


def spectrum_from_kernel(kernel, n):
    """Quasi-singular values ``nu_j = 1/|g~_j|`` of the periodic convolution with ``kernel``.

    Gains of sampled Gaussian kernels can be slightly negative at high
    frequencies; their signs are kept in ``signs``.
    """
    transforms.Basis.fourier(n)  # validates n
    gains = kernel_gains(kernel, n)[transforms.fourier_frequencies(n)]
    if np.any(np.abs(gains) < 1e-300):
        raise DegenerateSpectrumError(f"kernel {kernel} has a vanishing Fourier gain on the n={n} grid")
    return OperatorSpectrum(1.0 / np.abs(gains), signs=np.sign(gains))


def periodic_convolve(signal, kernel):
    """Circular convolution of a signal (or each column of a matrix) with ``kernel``."""
    x = np.asarray(signal, dtype=float)
    n = x.shape[0]
    g = np.fft.rfft(discretize_kernel(kernel, n))
    shape = (-1,) + (1,) * (x.ndim - 1)
    return np.fft.irfft(np.fft.rfft(x, axis=0) * g.reshape(shape), n=n, axis=0)


@dataclass
class ProblemInstance:
    """True signals, their images and the noise level of one simulated problem.

    Attributes
    ----------
    F_true : ndarray (n, M)
    G_true : ndarray (n, M)
        Coefficients of ``F_true`` in ``basis``.
    Q_true : ndarray (n, M)
        ``F_true`` convolved column by column with the kernel.
    H : ndarray (n, K)
        The scaled cluster representatives ``h_k``.
    """

    F_true: np.ndarray
    G_true: np.ndarray
    Q_true: np.ndarray
    H: np.ndarray
    assignment: ClusteringAssignment
    sigma: float
    basis: Basis
    spectrum: OperatorSpectrum
    kernel: KernelSpec
    snr: float = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.F_true.shape[0]

    @property
    def M(self):
        return self.F_true.shape[1]

    @property
    def K(self):
        return self.assignment.K

    def to_dict(self):
        """JSON-ready provenance record (dimensions, kernel, assignment, noise)."""
        return {
            "n": self.n,
            "M": self.M,
            "K": self.K,
            "basis": self.basis.variant,
            "kernel": self.kernel.to_dict(),
            "snr": self.snr,
            "sigma": self.sigma,
            "assignment": self.assignment.to_dict(),
            **self.meta,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def scale_functions(L):
    """Scale each column of ``L`` to Euclidean norm ``sqrt(n)``."""
    L = np.asarray(L, dtype=float)
    return L * (np.sqrt(L.shape[0]) / np.linalg.norm(L, axis=0))


def build_instance(functions, assignment, kernel, snr, basis, **meta):
    """Assemble a :class:`ProblemInstance`.

    Parameters
    ----------
    functions : ndarray (n, K)
        Sampled cluster representatives; they are rescaled to norm ``sqrt(n)``.
    assignment : ClusteringAssignment
    kernel : KernelSpec
    snr : float
        Noise SD is ``sigma = std(F_true) / snr`` (sample SD of all entries).
        ``snr=inf`` gives noiseless data.
    basis : Basis
    """
    if not snr > 0:
        raise ParameterError(f"snr must be positive, got {snr}")
    L = np.asarray(functions, dtype=float)
    if L.ndim != 2 or L.shape[0] != basis.n:
        raise DimensionError(f"functions have shape {L.shape}; expected ({basis.n}, K)")
    if L.shape[1] != assignment.K:
        raise DimensionError(f"{L.shape[1]} functions for an assignment with K={assignment.K}")
    H = scale_functions(L)
    F = H[:, assignment.labels]
    sigma = 0.0 if np.isinf(snr) else float(np.std(F, ddof=1) / snr)
    return ProblemInstance(
        F_true=F,
        G_true=transforms.analyze_columns(F, basis),
        Q_true=periodic_convolve(F, kernel),
        H=H,
        assignment=assignment,
        sigma=sigma,
        basis=basis,
        spectrum=spectrum_from_kernel(kernel, basis.n),
        kernel=kernel,
        snr=float(snr),
        meta=dict(meta),
    )


def column_seeds(seed, M):
    """Per-column seeds: children ``0..M-1`` of ``SeedSequence(seed)``."""
    return np.random.SeedSequence(seed).spawn(M)


def simulate(instance, seed):
    """Noisy observations ``X = Q_true + sigma * N(0, 1)``.

    Column ``m`` draws its noise from the ``m``-th child of
    ``SeedSequence(seed)``, so each column is reproducible on its own.
    """
    n, M = instance.Q_true.shape
    noise = np.column_stack([np.random.default_rng(s).standard_normal(n) for s in column_seeds(seed, M)])
    return instance.Q_true + instance.sigma * noise


def to_sequence(X, basis):
    """Coefficient matrix ``Y`` of the observations (column-wise :func:`analyze`)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != basis.n:
        raise DimensionError(f"observations have shape {X.shape}; expected ({basis.n}, M)")
    return transforms.analyze_columns(X, basis)


def weighted_sequence(X, spectrum, basis):
    """Deconvolved coefficients ``Upsilon Y`` in ``basis``.

    The weights ``nu_j`` act in the Fourier domain.  For the wavelet basis
    the weighted Fourier coefficients are mapped back to the grid and
    analysed in the wavelet basis, i.e. the wavelet-vaguelette coefficients
    ``nu``-weighted in the eigenbasis.
    """
    X = np.asarray(X, dtype=float)
    fourier = Basis.fourier(basis.n)
    if spectrum.n != basis.n:
        raise DimensionError(f"spectrum has length {spectrum.n}, basis {basis.n}")
    UY = spectrum.deconvolve(to_sequence(X, fourier))
    if basis.variant == transforms.FOURIER:
        return UY
    return transforms.analyze_columns(transforms.synthesize_columns(UY, fourier), basis)


def noise_amplification(spectrum, basis, keep=None):
    """Standard deviation of each coordinate of ``Upsilon E`` in ``basis``.

    Equals ``nu_j`` in the Fourier basis.  In the wavelet basis coordinate
    ``i`` has SD ``sqrt(sum_j W_ij^2 nu_j^2)`` where ``W`` maps Fourier to
    wavelet coefficients.  ``keep`` optionally masks Fourier indices that
    are zeroed before the change of basis.
    """
    nu = np.array(spectrum.nu)
    if keep is not None:
        nu = np.where(keep, nu, 0.0)
    if basis.variant == transforms.FOURIER:
        return nu
    W = transforms.fourier_to_basis(basis)
    return np.sqrt((W**2) @ (nu**2))


def estimate_noise_level(X):
    """Median absolute finest-level Daubechies-8 detail coefficient over 0.6745.

    The finest-level coefficients of all columns are pooled.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    basis = Basis.daubechies8(n)
    detail = transforms.analyze_columns(X, basis)[transforms.finest_level_slice(n)]
    return float(np.median(np.abs(detail)) / 0.6745)


def config_hash(obj):
    """Short SHA-256 digest of a JSON-serializable configuration."""
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]
