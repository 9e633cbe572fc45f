"""Orthonormal analysis and synthesis in the periodic Fourier and Daubechies-8 bases.

Coefficient ordering
--------------------
Fourier (real, orthonormal on the grid)
    index 0 is the constant, then ``cos_1, sin_1, cos_2, sin_2, ...,
    cos_{n/2-1}, sin_{n/2-1}`` and finally the Nyquist vector ``(-1)^t``.
    Coefficient index is therefore monotone in frequency, so the nested
    sets ``{1..L}`` are low-pass truncations.

Daubechies-8 (periodized, full decomposition)
    the single coarsest scaling coefficient first, then detail levels from
    coarse to fine: level 0 (1 coefficient), level 1 (2), ..., level
    ``log2(n) - 1`` (``n/2`` coefficients).  Larger index means finer scale.

Signals are sampled at ``t = 0, ..., n-1`` which stands for the grid point
``x = (t + 1) / n``.  Matrix inputs hold one signal per column.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .exceptions import DimensionError, ParameterError

FOURIER = "fourier"
DAUBECHIES8 = "daubechies8"
_VARIANTS = (FOURIER, DAUBECHIES8)


@dataclass(frozen=True)
class Basis:
    """An orthonormal basis of R^n.

    Parameters
    ----------
    variant : {'fourier', 'daubechies8'}
    n : int
        Signal length, a power of two no smaller than 16.
    """

    variant: str
    n: int

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ParameterError(f"unknown basis variant {self.variant!r}; expected one of {_VARIANTS}")
        n = int(self.n)
        if n < 16 or n & (n - 1):
            raise ParameterError(f"basis length must be a power of two >= 16, got {self.n}")

    @classmethod
    def fourier(cls, n):
        return cls(FOURIER, n)

    @classmethod
    def daubechies8(cls, n):
        return cls(DAUBECHIES8, n)

    @property
    def levels(self):
        return int(np.log2(self.n))


def fourier_frequencies(n):
    """Integer frequency carried by each real-Fourier coefficient index."""
    j = np.arange(n)
    return (j + 1) // 2


def wavelet_levels(n):
    """Resolution level of each Daubechies-8 coefficient (-1 for the scaling one)."""
    levels = np.empty(n, dtype=int)
    levels[0] = -1
    for lev in range(int(np.log2(n))):
        levels[2**lev : 2 ** (lev + 1)] = lev
    return levels


def finest_level_slice(n):
    """Slice selecting the finest detail level in the wavelet ordering."""
    return slice(n // 2, n)


@lru_cache(maxsize=None)
def daubechies_filter(p=8):
    """Extremal-phase Daubechies low-pass filter with ``p`` vanishing moments.

    Computed by spectral factorization of the Daubechies polynomial; the
    result has ``2p`` taps, sums to ``sqrt(2)`` and is orthonormal to its
    even shifts.
    """
    # P(y) = sum_k C(p-1+k, k) y^k with y = (2 - z - 1/z) / 4
    coeffs = [comb(p - 1 + k, k) for k in range(p)]
    y_roots = np.roots(coeffs[::-1])
    z_roots = []
    for y in y_roots:
        # z^2 - (2 - 4y) z + 1 = 0, keep the root inside the unit circle
        pair = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        z_roots.append(pair[np.argmin(np.abs(pair))])
    poly = np.array([1.0 + 0j])
    for _ in range(p):
        poly = np.convolve(poly, [1.0, 1.0])
    for z in z_roots:
        poly = np.convolve(poly, [1.0, -z])
    h = np.real(poly)
    h = h * (np.sqrt(2.0) / h.sum())
    h.setflags(write=False)
    return h


def _dwt_step(x, h, g):
    # x has shape (N, M); periodized filtering followed by downsampling
    N = x.shape[0]
    L = len(h)
    idx = (2 * np.arange(N // 2)[:, None] + np.arange(L)[None, :]) % N
    blocks = x[idx]
    return np.einsum("kl...,l->k...", blocks, h), np.einsum("kl...,l->k...", blocks, g)


@lru_cache(maxsize=None)
def _wavelet_matrix(n):
    h = daubechies_filter(8)
    L = len(h)
    g = np.array([(-1) ** l * h[L - 1 - l] for l in range(L)])
    approx = np.eye(n)
    details = []
    while approx.shape[0] > 1:
        approx, d = _dwt_step(approx, h, g)
        details.append(d)
    W = np.vstack([approx] + details[::-1])
    W.setflags(write=False)
    return W


def _check_signal(x, basis, name="signal"):
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[0] != basis.n:
        raise DimensionError(f"{name} has shape {x.shape}; expected leading dimension {basis.n}")
    return x


def _fourier_analyze(x):
    n = x.shape[0]
    F = np.fft.rfft(x, axis=0)
    out = np.empty(x.shape)
    out[0] = F[0].real / np.sqrt(n)
    scale = np.sqrt(2.0 / n)
    out[1:-1:2] = scale * F[1:-1].real
    out[2:-1:2] = -scale * F[1:-1].imag
    out[-1] = F[-1].real / np.sqrt(n)
    return out


def _fourier_synthesize(c):
    n = c.shape[0]
    F = np.empty((n // 2 + 1,) + c.shape[1:], dtype=complex)
    F[0] = c[0] * np.sqrt(n)
    scale = np.sqrt(n / 2.0)
    F[1:-1] = scale * (c[1:-1:2] - 1j * c[2:-1:2])
    F[-1] = c[-1] * np.sqrt(n)
    return np.fft.irfft(F, n=n, axis=0)


def analyze(signal, basis):
    """Orthonormal coefficients of ``signal`` (a vector or one signal per column)."""
    x = _check_signal(signal, basis)
    if basis.variant == FOURIER:
        return _fourier_analyze(x)
    return _wavelet_matrix(basis.n) @ x


def synthesize(coeffs, basis):
    """Inverse of :func:`analyze`."""
    c = _check_signal(coeffs, basis, name="coefficients")
    if basis.variant == FOURIER:
        return _fourier_synthesize(c)
    return _wavelet_matrix(basis.n).T @ c


def analyze_columns(matrix, basis):
    """Apply :func:`analyze` to each column of an ``n x M`` matrix."""
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {X.shape}")
    return analyze(X, basis)


def synthesize_columns(matrix, basis):
    """Apply :func:`synthesize` to each column of an ``n x M`` matrix."""
    C = np.asarray(matrix, dtype=float)
    if C.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {C.shape}")
    return synthesize(C, basis)


def basis_vectors(basis):
    """Dense ``n x n`` matrix whose column ``j`` is the sampled basis function ``j``."""
    return synthesize(np.eye(basis.n), basis)


@lru_cache(maxsize=None)
def _fourier_to(variant, n):
    basis = Basis(variant, n)
    T = analyze(basis_vectors(Basis.fourier(n)), basis)
    T.setflags(write=False)
    return T


def fourier_to_basis(basis):
    """Matrix mapping real-Fourier coefficients to coefficients in ``basis``."""
    return _fourier_to(basis.variant, basis.n)
