"""Sparse estimators: hard thresholding in the location model and post-BIC
least squares in a fixed-design Gaussian regression."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .gaussian import phi_cdf

CONSISTENT = "consistent"
CONSERVATIVE = "conservative"
FIXED = "fixed"

_SCHEDULE_RE = re.compile(
    r"^\s*(?P<c>[0-9.eE+-]+)\s*\*\s*n\s*\^\s*\(?\s*-\s*(?P<p>[0-9.eE+-]+)\s*\)?\s*$")


@dataclass(frozen=True)
class ThresholdSchedule:
    """Threshold rule eta_n = c * n**(-p).

    ``vanishing`` marks a p = 0 schedule whose threshold the caller drives to
    zero by other means; without it a p = 0 schedule is reported as ``fixed``.
    """

    c: float
    p: float
    vanishing: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError(f"schedule constant must be positive, got c={self.c}")
        if not (0.0 <= self.p <= 0.5):
            raise ValueError(f"schedule exponent must lie in [0, 1/2], got p={self.p}")

    @classmethod
    def parse(cls, text: str) -> "ThresholdSchedule":
        """Parse ``"c*n^-p"``, e.g. ``"1*n^-0.25"`` or ``"2*n^-0.5"``."""
        m = _SCHEDULE_RE.match(text)
        if m is None:
            raise ValueError(f"cannot parse schedule {text!r}; expected 'c*n^-p'")
        return cls(float(m.group("c")), float(m.group("p")))

    def eta(self, n):
        if np.ndim(n):
            return self.c * np.asarray(n, dtype=float) ** (-self.p)
        return self.c * float(n) ** (-self.p)

    @property
    def regime(self) -> str:
        if self.p == 0.5:
            return CONSERVATIVE
        if self.p > 0 or self.vanishing:
            return CONSISTENT
        return FIXED

    def __str__(self) -> str:
        return f"{self.c:g}*n^-{self.p:g}"


def hard_threshold(ybar, n: int, sched: ThresholdSchedule | None = None, *, eta=None):
    """ybar * 1(|ybar| > eta_n); pass either a schedule or a literal ``eta``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if eta is None:
        if sched is None:
            raise ValueError("need a schedule or an explicit eta")
        eta = sched.eta(n)
    if not np.all(np.isfinite(ybar)):
        raise ValueError("hard_threshold needs finite input")
    if np.ndim(ybar) == 0:
        ybar = float(ybar)
        return ybar if abs(ybar) > eta else 0.0
    ybar = np.asarray(ybar, dtype=float)
    return np.where(np.abs(ybar) > eta, ybar, 0.0)


def sparsity_prob_at_zero(n: int, sched: ThresholdSchedule | None = None, *, eta=None) -> float:
    """P_{n,0}(theta_hat = 0) = 1 - 2 Phi(-sqrt(n) eta_n) for unit noise."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if eta is None:
        eta = sched.eta(n)
    return 1.0 - 2.0 * phi_cdf(-math.sqrt(n) * eta)


def prob_nonzero(theta: float, n: int, eta: float) -> float:
    """P_{n,theta}(theta_hat != 0) = Phi(sqrt(n)(theta - eta)) + Phi(-sqrt(n)(theta + eta))."""
    rn = math.sqrt(n)
    return phi_cdf(rn * (theta - eta)) + phi_cdf(-rn * (theta + eta))


# --------------------------------------------------------------------------
# Regression with post-BIC least squares
# --------------------------------------------------------------------------

PROTECTED = "protected"
ALL_SUBSETS = "all"
FULL = "full"


class SingularSubmodelError(np.linalg.LinAlgError):
    def __init__(self, model_id: int, columns):
        self.model_id = model_id
        self.columns = tuple(columns)
        super().__init__(f"submodel {model_id} (columns {self.columns}) has a singular Gram matrix")


def _sign_patterns(n: int, k: int) -> np.ndarray:
    rows = np.arange(n)
    cols = [np.ones(n)]
    for j in range(1, k):
        cols.append(np.where((rows >> (j - 1)) & 1, -1.0, 1.0))
    return np.column_stack(cols)


@dataclass(frozen=True)
class RegressionDesign:
    """Fixed-design Gaussian regression Y = X theta + sigma u with X'X = n Q.

    Coordinates are ordered theta = (alpha', beta')': the first ``k - k_beta``
    are the protected block, the last ``k_beta`` are subject to selection.
    ``k_beta == k`` leaves no protected block.
    """

    Q: np.ndarray
    k_beta: int
    n: int
    sigma: float = 1.0
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be a square matrix")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise ValueError("Q must be positive definite")
        k = Q.shape[0]
        if not (0 < self.k_beta <= k):
            raise ValueError(f"k_beta must lie in (0, k={k}]")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "_chol", np.linalg.cholesky(Q))

    @property
    def k(self) -> int:
        return self.Q.shape[0]

    @property
    def k_alpha(self) -> int:
        return self.k - self.k_beta

    def with_n(self, n: int) -> "RegressionDesign":
        return RegressionDesign(self.Q, self.k_beta, n, self.sigma)

    @property
    def gram(self) -> np.ndarray:
        """X'X, equal to n Q by construction."""
        return self.n * self.Q

    @cached_property
    def D(self) -> np.ndarray:
        """Q11^{-1} Q12, the drift of sqrt(n)(alpha_hat - alpha) under local beta."""
        ka = self.k_alpha
        if ka == 0:
            return np.zeros((0, self.k_beta))
        return np.linalg.solve(self.Q[:ka, :ka], self.Q[:ka, ka:])

    def matrix(self) -> np.ndarray:
        """Deterministic X with first column of ones and X'X / n = Q.

        Columns start from +-1 alternating patterns, are orthogonalised to
        W'W = n I, then mixed by the Cholesky factor of Q.
        """
        if self.n < self.k:
            raise ValueError(f"need n >= k to build a design, got n={self.n}, k={self.k}")
        W, R = np.linalg.qr(_sign_patterns(self.n, self.k))
        W = W * np.sign(np.diag(R))
        return math.sqrt(self.n) * W @ self._chol.T

    def sample_moments(self, theta, z: np.ndarray) -> np.ndarray:
        """X'Y for each row of standard normals z; X'Y ~ N(nQ theta, sigma^2 nQ)."""
        theta = np.asarray(theta, dtype=float)
        return self.gram @ theta + self.sigma * math.sqrt(self.n) * (z @ self._chol.T)


def candidate_models(design: RegressionDesign, mode: str = PROTECTED) -> list[tuple[int, ...]]:
    """Column index tuples of the submodels searched, ordered by submodel id."""
    k, ka = design.k, design.k_alpha
    if mode == FULL:
        return [tuple(range(k))]
    if mode == PROTECTED:
        free, fixed = list(range(ka, k)), list(range(ka))
    elif mode == ALL_SUBSETS:
        free, fixed = list(range(k)), []
    else:
        raise ValueError(f"unknown selection mode {mode!r}")
    models = []
    for mask in range(2 ** len(free)):
        cols = fixed + [c for i, c in enumerate(free) if (mask >> i) & 1]
        models.append(tuple(sorted(cols)))
    return models


def _bic_scores(xty: np.ndarray, gram: np.ndarray, models, n: int, sigma: float):
    """BIC up to the common term y'y / sigma^2, plus per-model LS coefficients."""
    reps = xty.shape[0]
    scores = np.empty((reps, len(models)))
    coefs = []
    for mid, cols in enumerate(models):
        if not cols:
            scores[:, mid] = 0.0
            coefs.append(np.zeros((reps, 0)))
            continue
        G = gram[np.ix_(cols, cols)]
        if np.linalg.matrix_rank(G) < len(cols):
            raise SingularSubmodelError(mid, cols)
        s = xty[:, cols]
        b = np.linalg.solve(G, s.T).T
        # RSS = y'y - s' G^{-1} s
        scores[:, mid] = -np.einsum("ij,ij->i", s, b) / sigma**2 + len(cols) * math.log(n)
        coefs.append(b)
    return scores, coefs


def post_bic_ls_moments(xty, design: RegressionDesign, mode: str = PROTECTED):
    """Vectorised post-BIC LS from sufficient statistics X'Y (one row per sample).

    Exactly equivalent to :func:`post_bic_ls` because with X'X fixed every
    submodel's LS fit and the BIC differences depend on Y only through X'Y.
    """
    xty = np.atleast_2d(np.asarray(xty, dtype=float))
    models = candidate_models(design, mode)
    scores, coefs = _bic_scores(xty, design.gram, models, design.n, design.sigma)
    best = np.argmin(scores, axis=1)
    reps, k = xty.shape[0], design.k
    theta_hat = np.zeros((reps, k))
    selected = np.zeros((reps, k), dtype=bool)
    for mid, cols in enumerate(models):
        rows = best == mid
        if not cols or not np.any(rows):
            continue
        idx = np.asarray(cols)
        theta_hat[np.ix_(rows, idx)] = coefs[mid][rows]
        selected[np.ix_(rows, idx)] = True
    return theta_hat, selected


def post_bic_ls(y, design: RegressionDesign, mode: str = PROTECTED, X=None):
    """Least squares on the minimum-BIC submodel, excluded coefficients set to 0.

    BIC with known sigma is RSS / sigma^2 + |model| * log n. Returns
    ``(theta_hat, selected)`` where ``selected`` flags retained coordinates.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n,):
        raise ValueError(f"y must have length n={design.n}")
    if X is None:
        X = design.matrix()
    models = candidate_models(design, mode)
    n, sigma = design.n, design.sigma
    best = None
    for mid, cols in enumerate(models):
        if cols:
            Xm = X[:, cols]
            G = Xm.T @ Xm
            if np.linalg.matrix_rank(G) < len(cols):
                raise SingularSubmodelError(mid, cols)
            b = np.linalg.solve(G, Xm.T @ y)
            rss = float(np.sum((y - Xm @ b) ** 2))
        else:
            b = np.zeros(0)
            rss = float(y @ y)
        bic = rss / sigma**2 + len(cols) * math.log(n)
        if best is None or bic < best[0]:
            best = (bic, cols, b)
    _, cols, b = best
    theta_hat = np.zeros(design.k)
    selected = np.zeros(design.k, dtype=bool)
    theta_hat[list(cols)] = b
    selected[list(cols)] = True
    return theta_hat, selected
