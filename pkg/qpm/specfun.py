"""Special functions with removable-singularity handling, shared by all evaluators.

All functions accept a float or a numpy array. A 0-d input returns a plain float.
"""

import math

import numpy as np

# Below this distance from k*pi the Dirichlet ratio switches to its Taylor series.
TAYLOR_THRESHOLD = 1e-6

# Log-slopes switch to their series when n*|t| drops below this.
_SLOPE_THRESHOLD = 1e-3


def _finite(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return arr


def _out(arr: np.ndarray):
    return float(arr) if arr.ndim == 0 else arr


def _reduce(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split theta into k*pi + t with |t| <= pi/2; returns (k, t)."""
    k = np.rint(theta / np.pi)
    return k, theta - k * np.pi


def sinc(x):
    """Unnormalized sinc, sin(x)/x, continuous at x = 0."""
    arr = _finite(x, "x")
    return _out(np.sinc(arr / np.pi))


def dirichlet_ratio(theta, n: int):
    """sin(n*theta)/sin(theta), with the analytic limit at theta = k*pi.

    The argument is first reduced to t = theta - k*pi so the quotient is
    formed from small, accurately known angles:
    sin(n*theta)/sin(theta) = (-1)**(k*(n-1)) * sin(n*t)/sin(t).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    arr = _finite(theta, "theta")
    k, t = _reduce(arr)
    flip = (np.mod(k, 2) != 0) & ((n - 1) % 2 != 0)
    sign = np.where(flip, -1.0, 1.0)

    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.sin(n * t) / np.sin(t)
    t2 = t * t
    nn = float(n) * n
    series = n * (1.0 - (nn - 1.0) * t2 / 6.0 + (nn - 1.0) * (3.0 * nn - 7.0) * t2 * t2 / 360.0)

    ratio = np.where(np.abs(t) < TAYLOR_THRESHOLD, series, direct)
    return _out(np.clip(sign * ratio, -n, n))


def alpha_phase(dk, spec):
    """Phase alpha of G(dk) = L*chi0*exp(-i*alpha)*Y, in radians.

    alpha = (N*l/2) * [(dk - G) + (M - 1)*(dk - F)]
    """
    arr = _finite(dk, "dk")
    half = spec.n * spec.l / 2.0
    return _out(half * ((arr - spec.g_vector) + (spec.m - 1) * (arr - spec.f_vector)))


def sinc_log_slope(x: float) -> float:
    """d/dx ln|sinc(x)|."""
    if abs(x) < _SLOPE_THRESHOLD:
        return -x / 3.0 - x ** 3 / 45.0
    return 1.0 / math.tan(x) - 1.0 / x


def dirichlet_log_slope(theta: float, n: int) -> float:
    """d/dtheta ln|sin(n*theta)/sin(theta)|."""
    t = theta - round(theta / math.pi) * math.pi
    if n == 1:
        return 0.0
    if n * abs(t) < _SLOPE_THRESHOLD:
        nn = float(n) * n
        return -(nn - 1.0) * t / 3.0 - (nn * nn - 1.0) * t ** 3 / 45.0
    return n / math.tan(n * t) - 1.0 / math.tan(t)
