"""Honest symmetric intervals around the hard-thresholding estimator.

The symmetric half-length a_n with infimal coverage delta solves

    Phi(sqrt(n) a) - Phi(sqrt(n)(eta - a)) = delta,   a >= eta / 2.

Writing a = eta + x / sqrt(n) turns this into Phi(x) - Phi(-sqrt(n) eta - x)
= delta, which is solved for x; that keeps full precision in x even when
sqrt(n) * eta is large.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .coverage import BoxInterval, coverage_at, coverage_scalar, infimal_coverage, theta_grid
from .gaussian import phi_cdf, phi_pdf, phi_quantile

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


class UnattainableCoverage(ArithmeticError):
    pass


def _check(n, eta, delta):
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not (math.isfinite(eta) and eta > 0):
        raise ValueError("eta must be positive and finite")
    if n < 1:
        raise ValueError("n must be >= 1")


@dataclass(frozen=True)
class HonestSolution:
    n: int
    eta: float
    delta: float
    a_n: float
    achieved_delta: float
    newton_residual: float
    asymptotic_a: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _scaled_equation(x: float, s: float, delta: float) -> float:
    # F(x) = Phi(x) - Phi(-s - x) - delta with s = sqrt(n) * eta
    return phi_cdf(x) - phi_cdf(-s - x) - delta


def _scaled_derivative(x: float, s: float) -> float:
    return phi_pdf(x) + phi_pdf(-s - x)


def _solve_scaled(s: float, delta: float) -> float:
    """Root x >= -s/2 of the scaled equation: bisection, then Newton polish."""
    lo = -0.5 * s           # F(lo) = -delta < 0
    hi = 10.0
    while _scaled_equation(hi, s, delta) <= 0:
        hi *= 2.0
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if _scaled_equation(mid, s, delta) < 0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(20):
        f = _scaled_equation(x, s, delta)
        step = f / _scaled_derivative(x, s)
        x_new = min(max(x - step, lo), hi)
        if x_new == x or abs(step) < 1e-17 * max(1.0, abs(x)):
            x = x_new
            break
        x = x_new
    return x


def defining_residual(a: float, n: int, eta: float, delta: float) -> float:
    """Phi(sqrt(n) a) - Phi(sqrt(n)(-a + eta)) - delta, in the original scale."""
    rn = math.sqrt(n)
    return phi_cdf(rn * a) - phi_cdf(rn * (-a + eta)) - delta


def asymptotic_halfwidth(n: int, eta: float, delta: float) -> float:
    """eta - Phi^{-1}(1 - delta) / sqrt(n)."""
    _check(n, eta, delta)
    return eta - phi_quantile(1.0 - delta) / math.sqrt(n)


def solve_honest_halfwidth(n: int, eta: float, delta: float) -> HonestSolution:
    """Shortest symmetric half-length with infimal coverage exactly delta."""
    _check(n, eta, delta)
    rn = math.sqrt(n)
    x = _solve_scaled(rn * eta, delta)
    a = max(eta + x / rn, 0.5 * eta)
    box = BoxInterval.symmetric(a)
    return HonestSolution(
        n=n, eta=eta, delta=delta, a_n=a,
        achieved_delta=infimal_coverage(n, eta, box),
        newton_residual=defining_residual(a, n, eta, delta),
        asymptotic_a=asymptotic_halfwidth(n, eta, delta),
    )


def _phi_increment(q: float, d: float) -> float:
    """Phi(q + d) - Phi(q) without cancellation for small d."""
    if abs(d) > 0.1:
        return phi_cdf(q + d) - phi_cdf(q)
    t = q + 0.5 * d * (_GL_NODES + 1.0)
    return 0.5 * d * float(np.dot(_GL_WEIGHTS, np.exp(-0.5 * t * t))) / math.sqrt(2 * math.pi)


def expansion_remainder(n: int, eta: float, delta: float) -> float:
    """sqrt(n) * (a_n - asymptotic_a), computed without cancellation.

    With q = -Phi^{-1}(1 - delta), Phi(q) = delta exactly, so x = q + d solves
    Phi(q + d) - Phi(q) = Phi(-sqrt(n) eta - q - d). Newton in d on that form
    resolves d far below the spacing of doubles near q; rounding in q only
    perturbs d by a relative amount.
    """
    _check(n, eta, delta)
    s = math.sqrt(n) * eta
    q = -phi_quantile(1.0 - delta)
    d = _solve_scaled(s, delta) - q
    for _ in range(50):
        g = _phi_increment(q, d) - phi_cdf(-s - q - d)
        step = g / (phi_pdf(q + d) + phi_pdf(-s - q - d))
        d -= step
        if abs(step) <= 1e-15 * abs(d) or step == 0.0:
            break
    return d


def oracle_halfwidth(theta: float, n: int, eta: float, delta: float, tol: float = 1e-13) -> float:
    """Smallest c >= 0 with coverage_at(theta, [c, c]) >= delta.

    Coverage is nondecreasing in c but jumps where c crosses |theta|, so the
    result can overshoot delta there (see :func:`oracle_overshoot`).
    """
    _check(n, eta, delta)
    theta = float(theta)

    def cov(c):
        return coverage_scalar(theta, n, eta, c, c)

    if cov(0.0) >= delta:
        return 0.0
    hi = eta + 10.0 / math.sqrt(n)
    while cov(hi) < delta:
        hi *= 2.0
        if hi > 1e300:
            raise UnattainableCoverage(f"coverage {delta} not reached at theta={theta}")
    lo = 0.0
    while hi - lo > tol * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if cov(mid) >= delta:
            hi = mid
        else:
            lo = mid
    return hi


def oracle_overshoot(theta: float, n: int, eta: float, delta: float, tol: float = 1e-9) -> bool:
    """True if coverage at the oracle half-length exceeds delta by more than tol."""
    c = oracle_halfwidth(theta, n, eta, delta)
    return coverage_at(theta, n, eta, BoxInterval.symmetric(c)) > delta + tol


def max_oracle_halfwidth(n: int, eta: float, delta: float, size: int = 2001,
                         zoom_rounds: int = 40) -> tuple[float, float]:
    """sup over theta of the oracle half-length, and the theta approaching it.

    A global breakpoint-aware grid locates the peak, which is then refined by
    repeated zooming onto the neighbouring grid cells.
    """
    _check(n, eta, delta)
    c_up = eta + 10.0 / math.sqrt(n)
    grid = theta_grid(eta, c_up, c_up, size, extra=[-eta / 2, eta / 2])
    vals = np.array([oracle_halfwidth(t, n, eta, delta) for t in grid])
    best_theta, best = float(grid[np.argmax(vals)]), float(vals.max())
    for _ in range(zoom_rounds):
        i = int(np.argmax(vals))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        if hi - lo <= 1e-13 * max(eta, abs(best_theta)):
            break
        grid = np.linspace(lo, hi, 21)
        vals = np.array([oracle_halfwidth(t, n, eta, delta) for t in grid])
        if vals.max() > best:
            best_theta, best = float(grid[np.argmax(vals)]), float(vals.max())
    return best, best_theta
