"""Test-function sets used in the simulation study.

All functions are evaluated on the grid ``x = j / n, j = 1..n``.

Smooth set
    ``sin(4 pi x)``, ``sin(4 pi (x - 1/16))``, ``(x - 0.5)^2``, ``(x - 0.5)^4``.

Nonsmooth set
    blip, wave and parabolas from the Donoho-Johnstone / Marron et al.
    test suite, and ``|x - 0.5|``.  Formulas used here::

        blip(x)  = (0.32 + 0.6 x + 0.3 exp(-100 (x - 0.3)^2)) 1{x <= 0.8}
                 + (-0.28 + 0.6 x + 0.3 exp(-100 (x - 1.3)^2)) 1{x > 0.8}
        wave(x)  = 0.5 + 0.2 cos(4 pi x) + 0.1 cos(24 pi x)
        parabolas(x) = 0.8 - 30 r(x-0.1) + 60 r(x-0.2) - 30 r(x-0.3)
                     + 500 r(x-0.35) - 1000 r(x-0.37) + 1000 r(x-0.41)
                     - 500 r(x-0.43) + 7.5 r(x-0.5) - 15 r(x-0.7) + 7.5 r(x-0.9)
        with r(s) = s^2 1{s >= 0}.
"""

import numpy as np

from .exceptions import ParameterError

SMOOTH = "smooth"
NONSMOOTH = "nonsmooth"


def grid(n):
    return np.arange(1, n + 1) / n


def blip(x):
    return np.where(
        x <= 0.8,
        0.32 + 0.6 * x + 0.3 * np.exp(-100 * (x - 0.3) ** 2),
        -0.28 + 0.6 * x + 0.3 * np.exp(-100 * (x - 1.3) ** 2),
    )


def wave(x):
    return 0.5 + 0.2 * np.cos(4 * np.pi * x) + 0.1 * np.cos(24 * np.pi * x)


def parabolas(x):
    def r(s):
        return np.where(s >= 0, s**2, 0.0)

    return (
        0.8
        - 30 * r(x - 0.1)
        + 60 * r(x - 0.2)
        - 30 * r(x - 0.3)
        + 500 * r(x - 0.35)
        - 1000 * r(x - 0.37)
        + 1000 * r(x - 0.41)
        - 500 * r(x - 0.43)
        + 7.5 * r(x - 0.5)
        - 15 * r(x - 0.7)
        + 7.5 * r(x - 0.9)
    )


SMOOTH_FUNCTIONS = (
    lambda x: np.sin(4 * np.pi * x),
    lambda x: np.sin(4 * np.pi * (x - 1 / 16)),
    lambda x: (x - 0.5) ** 2,
    lambda x: (x - 0.5) ** 4,
)

NONSMOOTH_FUNCTIONS = (blip, wave, parabolas, lambda x: np.abs(x - 0.5))


def function_set(name, n):
    """Sampled, unscaled test functions as an ``n x 4`` matrix."""
    x = grid(n)
    if name == SMOOTH:
        funcs = SMOOTH_FUNCTIONS
    elif name == NONSMOOTH:
        funcs = NONSMOOTH_FUNCTIONS
    else:
        raise ParameterError(f"unknown function set {name!r}; expected 'smooth' or 'nonsmooth'")
    return np.column_stack([f(x) for f in funcs])
