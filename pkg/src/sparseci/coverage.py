"""Exact coverage of box intervals centred at the hard-thresholding estimator.

Location model y_i ~ N(theta, 1), estimator ybar * 1(|ybar| > eta), interval
[theta_hat - a, theta_hat + b]. The coverage p_n(theta) is piecewise in theta
with three different case tables depending on how eta compares with a + b.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import phi_cdf, phi_quantile

ETA_GT_SUM = "eta_gt_sum"   # eta > a + b
ETA_MID = "eta_mid"         # (a + b)/2 <= eta <= a + b
ETA_SMALL = "eta_small"     # eta < (a + b)/2


@dataclass(frozen=True)
class BoxInterval:
    """The set [theta_hat - a, theta_hat + b], coordinatewise."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be vectors of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("box half-widths must be finite")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("box half-widths must be nonnegative")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def symmetric(cls, c) -> "BoxInterval":
        return cls(c, c)

    @property
    def k(self) -> int:
        return self.a.shape[0]

    def scalar(self) -> tuple[float, float]:
        if self.k != 1:
            raise ValueError("this operation needs a one-dimensional box")
        return float(self.a[0]), float(self.b[0])

    def contains(self, center, point):
        """Vectorised membership of ``point`` in the box centred at ``center``."""
        center = np.asarray(center, dtype=float)
        point = np.asarray(point, dtype=float)
        return np.all((center - self.a <= point) & (point <= center + self.b), axis=-1)


def regime_of(eta: float, a: float, b: float) -> str:
    s = a + b
    if eta > s:
        return ETA_GT_SUM
    if eta < s / 2:
        return ETA_SMALL
    return ETA_MID


# Case tables. Each returns (value, branch_id); branch ids number the rows of
# the corresponding table top to bottom, starting at 1.

def _table_eta_gt_sum(theta, rn, eta, a, b):
    if theta < -a - eta or theta > b + eta:
        return phi_cdf(rn * a) - phi_cdf(-rn * b), 1
    if -a - eta <= theta < b - eta:
        return phi_cdf(rn * (-theta - eta)) - phi_cdf(-rn * b), 2
    if b - eta <= theta < -a or b < theta <= -a + eta:
        return 0.0, 3
    if -a <= theta <= b:
        return phi_cdf(rn * (-theta + eta)) - phi_cdf(rn * (-theta - eta)), 4
    if -a + eta < theta <= b + eta:
        return phi_cdf(rn * a) - phi_cdf(rn * (-theta + eta)), 5
    raise AssertionError("unreachable: eta > a + b table is exhaustive")


def _table_eta_mid(theta, rn, eta, a, b):
    if theta < -a - eta or theta > b + eta:
        return phi_cdf(rn * a) - phi_cdf(-rn * b), 1
    if -a - eta <= theta < -a:
        return phi_cdf(rn * (-theta - eta)) - phi_cdf(-rn * b), 2
    if -a <= theta < b - eta:
        return phi_cdf(rn * (-theta + eta)) - phi_cdf(-rn * b), 3
    if b - eta <= theta <= -a + eta:
        return phi_cdf(rn * (-theta + eta)) - phi_cdf(rn * (-theta - eta)), 4
    if -a + eta < theta <= b:
        return phi_cdf(rn * a) - phi_cdf(rn * (-theta - eta)), 5
    if b < theta <= b + eta:
        return phi_cdf(rn * a) - phi_cdf(rn * (-theta + eta)), 6
    raise AssertionError("unreachable: (a+b)/2 <= eta <= a + b table is exhaustive")


def _table_eta_small(theta, rn, eta, a, b):
    if theta < -a - eta or theta > b + eta or -a + eta <= theta <= b - eta:
        return phi_cdf(rn * a) - phi_cdf(-rn * b), 1
    if -a - eta <= theta < -a:
        return phi_cdf(rn * (-theta - eta)) - phi_cdf(-rn * b), 2
    if -a <= theta < -a + eta:
        return phi_cdf(rn * (-theta + eta)) - phi_cdf(-rn * b), 3
    if b - eta < theta <= b:
        return phi_cdf(rn * a) - phi_cdf(rn * (-theta - eta)), 4
    if b < theta <= b + eta:
        return phi_cdf(rn * a) - phi_cdf(rn * (-theta + eta)), 5
    raise AssertionError("unreachable: eta < (a+b)/2 table is exhaustive")


_TABLES = {ETA_GT_SUM: _table_eta_gt_sum, ETA_MID: _table_eta_mid, ETA_SMALL: _table_eta_small}


def _check(n, eta):
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (math.isfinite(eta) and eta > 0):
        raise ValueError("eta must be positive and finite")


def coverage_branch(theta: float, n: int, eta: float, box: BoxInterval) -> tuple[float, str, int]:
    """Coverage value plus the regime and table row it came from."""
    _check(n, eta)
    a, b = box.scalar()
    regime = regime_of(eta, a, b)
    value, branch = _TABLES[regime](float(theta), math.sqrt(n), eta, a, b)
    return max(value, 0.0), regime, branch


def coverage_at(theta: float, n: int, eta: float, box: BoxInterval) -> float:
    """P_{n,theta}(theta in [theta_hat - a, theta_hat + b])."""
    return coverage_branch(theta, n, eta, box)[0]


def coverage_scalar(theta: float, n: int, eta: float, a: float, b: float) -> float:
    """:func:`coverage_at` on plain floats, skipping validation; for inner loops."""
    value, _ = _TABLES[regime_of(eta, a, b)](theta, math.sqrt(n), eta, a, b)
    return max(value, 0.0)


def interval_prob(lo: float, hi: float, theta: float, n: int) -> float:
    """P(lo <= ybar <= hi) for ybar ~ N(theta, 1/n)."""
    if hi <= lo:
        return 0.0
    rn = math.sqrt(n)
    return phi_cdf(rn * (hi - theta)) - phi_cdf(rn * (lo - theta))


def prob_outside_dead_zone(lo: float, hi: float, theta: float, n: int, eta: float) -> float:
    """P(ybar in [lo, hi], |ybar| > eta) for ybar ~ N(theta, 1/n)."""
    return (interval_prob(lo, min(hi, -eta), theta, n)
            + interval_prob(max(lo, eta), hi, theta, n))


def coverage_direct(theta: float, n: int, eta: float, box: BoxInterval) -> float:
    """Coverage from the event decomposition, without the case tables.

    {theta covered} = {|ybar| > eta, ybar - theta in [-b, a]}
                      union {|ybar| <= eta, -a <= theta <= b}.
    """
    _check(n, eta)
    a, b = box.scalar()
    p = prob_outside_dead_zone(theta - b, theta + a, theta, n, eta)
    if -a <= theta <= b:
        p += interval_prob(-eta, eta, theta, n)
    return p


def jump_limits(n: int, eta: float, box: BoxInterval) -> tuple[float, float]:
    """One-sided limits p_n(-a-) and p_n(b+), where coverage jumps.

    Obtained by substituting the jump point into the adjacent table row.
    """
    _check(n, eta)
    a, b = box.scalar()
    rn = math.sqrt(n)
    if regime_of(eta, a, b) == ETA_GT_SUM:
        return 0.0, 0.0
    left = phi_cdf(rn * (a - eta)) - phi_cdf(-rn * b)
    right = phi_cdf(rn * a) - phi_cdf(rn * (eta - b))
    return max(left, 0.0), max(right, 0.0)


def infimal_coverage(n: int, eta: float, box: BoxInterval) -> float:
    """inf over theta of the coverage probability, in closed form."""
    _check(n, eta)
    a, b = box.scalar()
    if eta > a + b:
        return 0.0
    rn = math.sqrt(n)
    return max(min(phi_cdf(rn * (a - eta)) - phi_cdf(-rn * b),
                   phi_cdf(rn * a) - phi_cdf(rn * (-b + eta))), 0.0)


def infimum_attained(n: int, eta: float, box: BoxInterval) -> bool:
    """The value 0 is taken on an interval when eta > a + b; otherwise the
    infimum is only approached at a jump."""
    _check(n, eta)
    a, b = box.scalar()
    return regime_of(eta, a, b) == ETA_GT_SUM


# --------------------------------------------------------------------------
# Curves
# --------------------------------------------------------------------------

def breakpoints(eta: float, a: float, b: float) -> list[float]:
    return [-a - eta, -a, -a + eta, b - eta, b, b + eta]


def theta_grid(eta: float, a: float, b: float, size: int = 2001, extra=()) -> np.ndarray:
    """Uniform grid over [-(a+eta)*1.5, (b+eta)*1.5] with all breakpoints added."""
    lo, hi = -(a + eta) * 1.5, (b + eta) * 1.5
    pts = np.concatenate([np.linspace(lo, hi, size), breakpoints(eta, a, b), np.asarray(extra, float)])
    return np.unique(pts)


@dataclass
class CoverageCurve:
    theta_grid: np.ndarray
    values: np.ndarray
    branch_ids: list[int]
    regime: str
    jump_points: tuple[float, ...]
    n: int
    eta: float
    a: float
    b: float
    infimum: float = field(default=float("nan"))
    infimum_attained: bool = False

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "coverage", "branch_id"])
        for t, v, br in zip(self.theta_grid, self.values, self.branch_ids):
            w.writerow([f"{t:.17g}", f"{v:.17g}", f"{self.regime}:{br}"])

    def grid_infimum(self) -> float:
        """Minimum over the grid, augmented with the one-sided jump limits."""
        left, right = jump_limits(self.n, self.eta, BoxInterval(self.a, self.b))
        return min(float(np.min(self.values)), left, right)


def coverage_curve(n: int, eta: float, box: BoxInterval, size: int = 2001, grid=None) -> CoverageCurve:
    a, b = box.scalar()
    thetas = theta_grid(eta, a, b, size) if grid is None else np.asarray(grid, dtype=float)
    vals, branches = [], []
    regime = regime_of(eta, a, b)
    for t in thetas:
        v, _, br = coverage_branch(t, n, eta, box)
        vals.append(v)
        branches.append(br)
    jumps = (-a,) if a == 0 and b == 0 else (-a, b)
    return CoverageCurve(
        theta_grid=thetas, values=np.array(vals), branch_ids=branches, regime=regime,
        jump_points=jumps, n=n, eta=eta, a=a, b=b,
        infimum=infimal_coverage(n, eta, box), infimum_attained=infimum_attained(n, eta, box))


# --------------------------------------------------------------------------
# Naive interval
# --------------------------------------------------------------------------

def naive_halfwidth(n: int, delta: float) -> float:
    """z_{(1-delta)/2} / sqrt(n)."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return phi_quantile(0.5 + 0.5 * delta) / math.sqrt(n)


def naive_coverage_at(theta: float, n: int, eta: float, delta: float) -> float:
    """Coverage of {0} if theta_hat = 0, else theta_hat +- z_{(1-delta)/2}/sqrt(n)."""
    _check(n, eta)
    h = naive_halfwidth(n, delta)
    p = prob_outside_dead_zone(theta - h, theta + h, theta, n, eta)
    if theta == 0:
        p += interval_prob(-eta, eta, theta, n)
    return p


def naive_theta_grid(n: int, eta: float, delta: float, size: int = 2001) -> np.ndarray:
    h = naive_halfwidth(n, delta)
    span = 2.0 * (eta + h)
    pts = [0.0, eta, -eta, eta - h, eta + h, -eta - h, -eta + h]
    return np.unique(np.concatenate([np.linspace(-span, span, size), pts]))


def naive_infimal_coverage(n: int, eta: float, delta: float, size: int = 2001) -> float:
    """Minimum of naive coverage over a breakpoint-aware grid."""
    return min(naive_coverage_at(t, n, eta, delta) for t in naive_theta_grid(n, eta, delta, size))


# --------------------------------------------------------------------------
# Geometry
# --------------------------------------------------------------------------

def ext_box(box: BoxInterval, direction) -> float:
    """sup{lam >= 0 : center + lam * direction in the box}.

    ``direction`` is normalised to unit length first.
    """
    d = np.atleast_1d(np.asarray(direction, dtype=float))
    if d.shape != box.a.shape:
        raise ValueError("direction must have the box's dimension")
    norm = float(np.linalg.norm(d))
    if not norm > 0:
        raise ValueError("direction must be nonzero")
    d = d / norm
    with np.errstate(over="ignore"):
        slack = np.where(d > 0, box.b / np.where(d > 0, d, 1.0), np.inf)
        slack = np.minimum(slack, np.where(d < 0, box.a / np.where(d < 0, -d, 1.0), np.inf))
    return float(slack.min())


def diam_box(box: BoxInterval) -> float:
    return float(np.linalg.norm(box.a + box.b))
