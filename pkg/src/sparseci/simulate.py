"""Monte Carlo engine and the moving-parameter demonstrations.

Random numbers come from a counter-based Philox stream: replication r of
substream s under seed S always uses the Philox block keyed by (S, s) at
counter r, so results do not depend on how replications are split into blocks
or spread over workers. Normals are inverse-cdf transforms of those uniforms.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coverage import BoxInterval, interval_prob, prob_outside_dead_zone
from .estimators import (PROTECTED, RegressionDesign, ThresholdSchedule, hard_threshold,
                         post_bic_ls_moments, prob_nonzero)
from .gaussian import phi_quantile
from .honest import solve_honest_halfwidth

BLOCK_SIZE = 1 << 16
_WORDS_PER_COUNTER = 4


# --------------------------------------------------------------------------
# RNG
# --------------------------------------------------------------------------

def substream_key(seed: int, substream_id: int) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=(int(substream_id),))
    return ss.generate_state(2, dtype=np.uint64)


def uniforms(seed: int, substream_id: int, start: int, count: int, dim: int) -> np.ndarray:
    """Open-interval uniforms for replications [start, start + count), shape (count, dim)."""
    per_rep = -(-dim // _WORDS_PER_COUNTER)
    bitgen = np.random.Philox(key=substream_key(seed, substream_id),
                              counter=np.array([start * per_rep, 0, 0, 0], dtype=np.uint64))
    raw = bitgen.random_raw(count * per_rep * _WORDS_PER_COUNTER)
    raw = raw.reshape(count, per_rep * _WORDS_PER_COUNTER)[:, :dim]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / (1 << 53))


def normals(seed: int, substream_id: int, start: int, count: int, dim: int) -> np.ndarray:
    return phi_quantile(uniforms(seed, substream_id, start, count, dim))


# --------------------------------------------------------------------------
# Models and the engine
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LocationModel:
    """y_1..y_n iid N(theta, sigma^2), represented by ybar ~ N(theta, sigma^2/n)."""

    n: int
    sigma: float = 1.0
    dim = 1

    def sample(self, theta, z: np.ndarray) -> np.ndarray:
        return float(theta) + self.sigma * z[:, 0] / math.sqrt(self.n)


def _dim(model) -> int:
    return model.k if isinstance(model, RegressionDesign) else model.dim


def _sample(model, theta, z):
    if isinstance(model, RegressionDesign):
        return model.sample_moments(theta, z)
    return model.sample(theta, z)


def run_blocks(stat, model, theta, reps: int, seed: int, substream_id: int = 0,
               workers: int = 1, block_size: int = BLOCK_SIZE) -> list:
    """Apply ``stat`` to simulated samples block by block; results in block order."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    dim = _dim(model)
    starts = list(range(0, reps, block_size))

    def one(start):
        count = min(block_size, reps - start)
        z = normals(seed, substream_id, start, count, dim)
        return stat(_sample(model, theta, z))

    if workers <= 1:
        return [one(s) for s in starts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, starts))


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    reps: int
    std_err: float
    seed: int
    substream_id: int
    hits: int = 0

    @classmethod
    def from_hits(cls, hits: int, reps: int, seed: int, substream_id: int) -> "McEstimate":
        p = hits / reps
        return cls(p, reps, math.sqrt(p * (1 - p) / reps), seed, substream_id, hits)

    def z_score(self, p_true: float) -> float:
        """Standardised distance to ``p_true`` using the binomial SE at p_true."""
        se = math.sqrt(max(p_true * (1 - p_true), 0.0) / self.reps)
        diff = self.p_hat - p_true
        if se == 0.0:
            return 0.0 if diff == 0.0 else math.inf
        return diff / se

    def agrees_with(self, p_true: float, n_se: float = 4.0) -> bool:
        return abs(self.z_score(p_true)) <= n_se


def mc_probability(event, model, theta, reps: int, seed: int, substream_id: int = 0,
                   workers: int = 1, block_size: int = BLOCK_SIZE) -> McEstimate:
    """Fraction of replications where ``event(sample)`` holds.

    ``event`` maps a batch of samples (ybar values for :class:`LocationModel`,
    rows of X'Y for :class:`RegressionDesign`) to a boolean array.
    """
    counts = run_blocks(lambda s: int(np.count_nonzero(event(s))), model, theta, reps, seed,
                        substream_id, workers, block_size)
    return McEstimate.from_hits(sum(counts), reps, seed, substream_id)


def coverage_event(n: int, eta: float, box: BoxInterval, theta: float):
    a, b = box.scalar()

    def event(ybar):
        est = hard_threshold(ybar, n, eta=eta)
        return (est - a <= theta) & (theta <= est + b)
    return event


# --------------------------------------------------------------------------
# Moving-parameter plans
# --------------------------------------------------------------------------

SQRT_N = "sqrt_n"
CUSTOM = "custom"


@dataclass(frozen=True)
class MovingParameterPlan:
    """theta_n = gamma / v_n with v_n = sqrt(n) or v_n = rate_c * n**rate_q."""

    gamma: np.ndarray
    n_list: tuple[int, ...]
    rate: str = SQRT_N
    rate_c: float = 1.0
    rate_q: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.atleast_1d(np.asarray(self.gamma, dtype=float)))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("n_list must be strictly increasing")
        if self.rate == CUSTOM:
            if not (0 < self.rate_q < 0.5 and self.rate_c > 0):
                raise ValueError("custom rates need c > 0 and 0 < q < 1/2")
        elif self.rate != SQRT_N:
            raise ValueError(f"unknown rate {self.rate!r}")

    def v(self, n: int) -> float:
        if self.rate == SQRT_N:
            return math.sqrt(n)
        return self.rate_c * n ** self.rate_q


DESK_N_LIST = (100, 400, 1600, 6400, 25600)


def demo_theorem1(plan: MovingParameterPlan, sched: ThresholdSchedule, delta: float,
                  t: float) -> list[dict]:
    """Honest intervals along theta_n = gamma / v_n in the location model.

    Columns: P(theta_hat != 0) at theta_n, the honest half-length, the
    sqrt(n)- and v_n-scaled diameters and the indicator sqrt(n) diam >= t
    (deterministic because the honest half-length is nonrandom).
    """
    gamma = float(plan.gamma[0])
    rows = []
    for n in plan.n_list:
        eta = sched.eta(n)
        v = plan.v(n)
        theta_n = gamma / v
        sol = solve_honest_halfwidth(n, eta, delta)
        diam = 2.0 * sol.a_n
        rows.append({
            "n": n, "eta": eta, "v_n": v, "theta_n": theta_n,
            "p_nonzero": prob_nonzero(theta_n, n, eta),
            "a_n": sol.a_n,
            "sqrt_n_diam": math.sqrt(n) * diam,
            "v_n_diam": v * diam,
            "diam_ge_t": int(math.sqrt(n) * diam >= t),
        })
    return rows


def prob_rate_exceeds(theta: float, n: int, eta: float, M: float) -> float:
    """P(sqrt(n) |theta_hat - theta| > M) in the location model, closed form."""
    h = M / math.sqrt(n)
    p_nonzero = prob_nonzero(theta, n, eta)
    p = p_nonzero - prob_outside_dead_zone(theta - h, theta + h, theta, n, eta)
    if abs(theta) * math.sqrt(n) > M:
        p += interval_prob(-eta, eta, theta, n)
    return min(max(p, 0.0), 1.0)


def uniform_rate_grid(n: int, eta: float, M: float, size: int = 2001,
                      gammas=(1.5, 2.0, 4.0, 8.0)) -> np.ndarray:
    rn = math.sqrt(n)
    h = M / rn
    span = 2.0 * (eta + h)
    pts = [0.0, eta, -eta, eta + h, eta - h, -eta + h, -eta - h, h, -h]
    pts += [s * M * g / rn for g in gammas for s in (1, -1)]
    return np.unique(np.concatenate([np.linspace(-span, span, size), pts]))


def demo_uniform_rate(M: float, sched: ThresholdSchedule, n_list=DESK_N_LIST,
                      theta_grid=None, size: int = 2001) -> list[dict]:
    """max over theta of P(sqrt(n) |theta_hat - theta| > M) for each n."""
    rows = []
    for n in n_list:
        eta = sched.eta(n)
        grid = uniform_rate_grid(n, eta, M, size) if theta_grid is None else np.asarray(theta_grid)
        probs = np.array([prob_rate_exceeds(t, n, eta, M) for t in grid])
        i = int(np.argmax(probs))
        rows.append({"n": n, "eta": eta, "M": M, "sup_prob": float(probs[i]),
                     "argmax_theta": float(grid[i]), "argmax_gamma": float(grid[i]) * math.sqrt(n)})
    return rows


# --------------------------------------------------------------------------
# Partially sparse regression
# --------------------------------------------------------------------------

@dataclass
class PartialSparsityResult:
    n: int
    gamma: np.ndarray
    p_beta_zero: McEstimate
    coverage: McEstimate
    mean_scaled_alpha_err: np.ndarray      # E sqrt(n)(alpha_hat - alpha)
    se_scaled_alpha_err: np.ndarray
    drift: np.ndarray                      # D gamma
    mean_on_event: np.ndarray              # same, on {beta_hat = 0}
    se_on_event: np.ndarray
    cov_on_event: np.ndarray
    cov_target: np.ndarray                 # sigma^2 Q11^{-1}
    extras: dict = field(default_factory=dict)

    @property
    def cov_distance(self) -> float:
        return float(np.linalg.norm(self.cov_on_event - self.cov_target))

    def row(self) -> dict:
        out = {"n": self.n, "gamma": " ".join(f"{g:.17g}" for g in self.gamma),
               "p_beta_zero": self.p_beta_zero.p_hat, "p_beta_zero_se": self.p_beta_zero.std_err,
               "coverage": self.coverage.p_hat, "coverage_se": self.coverage.std_err}
        for i in range(len(self.drift)):
            out[f"mean_alpha_err_{i}"] = self.mean_scaled_alpha_err[i]
            out[f"mean_alpha_err_se_{i}"] = self.se_scaled_alpha_err[i]
            out[f"mean_alpha_err_on_event_{i}"] = self.mean_on_event[i]
            out[f"drift_{i}"] = self.drift[i]
        out["cov_frobenius_distance"] = self.cov_distance
        return out


def _partial_stats(design: RegressionDesign, theta, A, w, mode):
    ka = design.k_alpha
    rn = math.sqrt(design.n)
    target = A @ theta

    def stat(xty):
        est, _ = post_bic_ls_moments(xty, design, mode)
        beta_zero = np.all(est[:, ka:] == 0.0, axis=1)
        covered = np.all(np.abs(est @ A.T - target) <= w, axis=1)
        err = rn * (est[:, :ka] - theta[:ka])
        e0 = err[beta_zero]
        return (int(beta_zero.sum()), int(covered.sum()), err.sum(0), (err**2).sum(0),
                e0.sum(0), (e0**2).sum(0), e0.T @ e0)
    return stat


def demo_partial_sparsity(design: RegressionDesign, alpha, plan: MovingParameterPlan, A,
                          box_halfwidths, reps: int, seed: int, substream_id: int = 0,
                          workers: int = 1, mode: str = PROTECTED,
                          scaled_halfwidths: bool = True) -> list[PartialSparsityResult]:
    """Monte Carlo along theta_n = (alpha', gamma'/sqrt(n))' in the regression.

    The box is [A theta_hat - w, A theta_hat + w]; with ``scaled_halfwidths``
    the given half-widths are divided by sqrt(n), i.e. sqrt(n) diam is fixed.
    X'Y is simulated from its exact law N(nQ theta, sigma^2 nQ), so the cost
    does not grow with n.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[1] != design.k:
        raise ValueError("A must have k columns")
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise ValueError("A must have full row rank")
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.shape != (design.k_alpha,) or plan.gamma.shape != (design.k_beta,):
        raise ValueError("alpha and gamma must match the design's block sizes")
    half = np.atleast_1d(np.asarray(box_halfwidths, dtype=float))
    ka = design.k_alpha
    results = []
    for n in plan.n_list:
        d_n = design.with_n(n)
        theta = np.concatenate([alpha, plan.gamma / plan.v(n)])
        w = half / math.sqrt(n) if scaled_halfwidths else half
        parts = run_blocks(_partial_stats(d_n, theta, A, w, mode), d_n, theta, reps, seed,
                           substream_id, workers)
        n0 = sum(p[0] for p in parts)
        ncov = sum(p[1] for p in parts)
        s1 = sum(p[2] for p in parts)
        s2 = sum(p[3] for p in parts)
        e1 = sum(p[4] for p in parts)
        e2 = sum(p[5] for p in parts)
        ecross = sum(p[6] for p in parts)
        mean = s1 / reps
        var = s2 / reps - mean**2
        if n0 > 1:
            mean0 = e1 / n0
            se0 = np.sqrt(np.maximum(e2 / n0 - mean0**2, 0.0) / n0)
            cov0 = (ecross - n0 * np.outer(mean0, mean0)) / (n0 - 1)
        else:
            mean0 = se0 = np.full(ka, np.nan)
            cov0 = np.full((ka, ka), np.nan)
        results.append(PartialSparsityResult(
            n=n, gamma=plan.gamma,
            p_beta_zero=McEstimate.from_hits(n0, reps, seed, substream_id),
            coverage=McEstimate.from_hits(ncov, reps, seed, substream_id),
            mean_scaled_alpha_err=mean,
            se_scaled_alpha_err=np.sqrt(np.maximum(var, 0.0) / reps),
            drift=d_n.D @ plan.gamma,
            mean_on_event=mean0, se_on_event=se0, cov_on_event=cov0,
            cov_target=design.sigma**2 * np.linalg.inv(design.Q[:ka, :ka]),
        ))
    return results
