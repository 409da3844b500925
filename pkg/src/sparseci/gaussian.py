"""Standard normal pdf, cdf and quantile.

Scalars go through :mod:`math`, arrays through :mod:`scipy.special`; both are
backed by the platform's erf/erfc. The cdf switches to the complementary form
away from the origin so that tail probabilities keep full relative accuracy.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

SQRT2 = math.sqrt(2.0)
INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Acklam's rational approximation to the normal quantile (rel. error < 1.2e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _check_finite(x) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError("standard normal functions need finite arguments")


def phi_pdf(x):
    """Standard normal density."""
    _check_finite(x)
    if np.ndim(x) == 0:
        x = float(x)
        return INV_SQRT2PI * math.exp(-0.5 * x * x)
    x = np.asarray(x, dtype=float)
    return INV_SQRT2PI * np.exp(-0.5 * x * x)


def phi_cdf(x):
    """Standard normal distribution function Phi(x)."""
    _check_finite(x)
    if np.ndim(x) == 0:
        x = float(x)
        if abs(x) < 0.5:
            return 0.5 + 0.5 * math.erf(x / SQRT2)
        return 0.5 * math.erfc(-x / SQRT2)
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 0.5,
                    0.5 + 0.5 * special.erf(x / SQRT2),
                    0.5 * special.erfc(-x / SQRT2))


def _acklam_lower(p: np.ndarray) -> np.ndarray:
    # p in (0, 0.5]
    out = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        c, d = _C, _D
        out[tail] = ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                     / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    mid = ~tail
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        a, b = _A, _B
        out[mid] = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
                    / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0))
    return out


def _quantile_lower(p: np.ndarray) -> np.ndarray:
    """Quantile for p in (0, 0.5], refined by two Halley steps on Phi."""
    x = _acklam_lower(p)
    for _ in range(2):
        dens = INV_SQRT2PI * np.exp(-0.5 * x * x)
        ok = dens > 0.0
        err = 0.5 * special.erfc(-x / SQRT2) - p
        u = np.where(ok, err / np.where(ok, dens, 1.0), 0.0)
        x = x - u / (1.0 + 0.5 * x * u)
    return x


def phi_quantile(p):
    """Inverse of :func:`phi_cdf` on the open unit interval."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p_arr)) or np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise ValueError("phi_quantile needs 0 < p < 1")
    flat = np.atleast_1d(p_arr).ravel()
    upper = flat > 0.5
    lower_p = np.where(upper, 1.0 - flat, flat)
    x = _quantile_lower(lower_p)
    x = np.where(upper, -x, x)
    if p_arr.ndim == 0:
        return float(x[0])
    return x.reshape(p_arr.shape)
