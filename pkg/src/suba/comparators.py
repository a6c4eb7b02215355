"""Benchmark allocation rules: equal randomization, outcome-adaptive
randomization over fixed marker-1 subgroups, and a probit-regression
greedy rule fit by Newton's method with step halving.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import ConfigError, DegenerateDesignError, NonConvergenceError

CODING_CATEGORICAL = "categorical"
CODING_NUMERIC = "numeric"

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def er_assign(rng: np.random.Generator, arms) -> int:
    """Uniform random choice among the given arms."""
    return arms[int(rng.integers(len(arms)))]


# ---------------------------------------------------------------------------
# Outcome-adaptive randomization over fixed subgroups


@dataclass(frozen=True)
class ARConfig:
    """Fixed subgroups on the first biomarker; Beta(a, b) smoothing."""

    boundaries: tuple[float, ...] = (-0.5, 0.5)
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self) -> None:
        if any(
            self.boundaries[i] >= self.boundaries[i + 1]
            for i in range(len(self.boundaries) - 1)
        ):
            raise ConfigError("subgroup boundaries must be strictly increasing")

    @property
    def n_subgroups(self) -> int:
        return len(self.boundaries) + 1

    def subgroup_of(self, x1: float) -> int:
        """0-based subgroup; the top boundary belongs to the group below it."""
        idx = int(np.searchsorted(self.boundaries, x1, side="right"))
        if idx == len(self.boundaries) and x1 == self.boundaries[-1]:
            idx -= 1
        return idx


class ARCounts:
    """Per (arm, subgroup) assignment and response tallies."""

    def __init__(self, n_arms: int, config: ARConfig | None = None):
        self.config = config or ARConfig()
        self.n_arms = n_arms
        self.n = np.zeros((n_arms, self.config.n_subgroups), dtype=np.int64)
        self.n1 = np.zeros((n_arms, self.config.n_subgroups), dtype=np.int64)

    def update(self, arm_index: int, x1: float, y: int) -> None:
        b = self.config.subgroup_of(x1)
        self.n[arm_index, b] += 1
        self.n1[arm_index, b] += int(y)

    def posterior_means(self, x1: float) -> np.ndarray:
        b = self.config.subgroup_of(x1)
        a0, b0 = self.config.a, self.config.b
        return (self.n1[:, b] + a0) / (self.n[:, b] + a0 + b0)


def ar_assign(counts: ARCounts, x1: float, rng: np.random.Generator) -> int:
    """Sample arm index with probability proportional to the posterior means."""
    p = counts.posterior_means(x1)
    probs = p / p.sum()
    return int(rng.choice(counts.n_arms, p=probs))


# ---------------------------------------------------------------------------
# Probit regression fit by maximum likelihood


@dataclass
class RegFit:
    """Fitted probit coefficients; aliased columns carry a zero coefficient."""

    coef: np.ndarray
    coding: str
    converged: bool
    n_iter: int
    loglik: float
    aliased: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))


def probit_loglik(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    z = X @ beta
    return float(np.sum(np.where(y == 1, log_ndtr(z), log_ndtr(-z))))


def probit_score(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Analytic gradient of the probit log-likelihood."""
    z = X @ beta
    g = _eta_gradient(z, y)
    return X.T @ g


def _eta_gradient(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    log_pdf = -0.5 * z * z - _LOG_SQRT_2PI
    pos = np.exp(log_pdf - log_ndtr(z))
    neg = -np.exp(log_pdf - log_ndtr(-z))
    return np.where(y == 1, pos, neg)


def _aliased_columns(X: np.ndarray) -> np.ndarray:
    """Boolean mask of linearly dependent columns, via pivoted QR."""
    from scipy.linalg import qr

    if X.shape[0] == 0:
        return np.ones(X.shape[1], dtype=bool)
    _, r, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return np.ones(X.shape[1], dtype=bool)
    rank = int(np.sum(diag > diag[0] * max(X.shape) * np.finfo(float).eps))
    mask = np.ones(X.shape[1], dtype=bool)
    mask[piv[:rank]] = False
    return mask


def probit_fit(
    X: np.ndarray,
    y: np.ndarray,
    coding: str = CODING_CATEGORICAL,
    start: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    max_coef_norm: float = 1e3,
) -> RegFit:
    """Maximize the probit likelihood by damped Newton ascent.

    Linearly dependent design columns are excluded from the fit (their
    coefficient stays zero), mirroring standard GLM software. Raises
    :class:`NonConvergenceError` when only one outcome class is present or
    under separation, detected either by the coefficient norm passing
    ``max_coef_norm`` or by the log-likelihood reaching its supremum of 0
    (a perfectly fitted binary response has no interior maximizer), and
    :class:`DegenerateDesignError` when no usable column remains. Running
    out of iterations returns a fit flagged ``converged=False``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ConfigError("design matrix and outcomes do not align")
    if len(np.unique(y)) < 2:
        raise NonConvergenceError("need at least one response and one non-response")
    aliased = _aliased_columns(X)
    keep = ~aliased
    if not keep.any():
        raise DegenerateDesignError("design matrix has no independent columns")
    Xk = X[:, keep]
    beta = np.zeros(Xk.shape[1])
    if start is not None and start.shape[0] == X.shape[1]:
        beta = np.asarray(start, dtype=np.float64)[keep].copy()
    ll = probit_loglik(beta, Xk, y)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z = Xk @ beta
        g = _eta_gradient(z, y)
        grad = Xk.T @ g
        if ll > -1e-6:
            raise NonConvergenceError(
                "likelihood at its supremum; outcomes look separated"
            )
        if np.max(np.abs(grad)) < tol:
            converged = True
            break
        w = g * (g + z)  # negative second derivative wrt the linear predictor
        h = Xk.T @ (w[:, None] * Xk)
        try:
            step = np.linalg.solve(h, grad)
        except np.linalg.LinAlgError as exc:
            raise DegenerateDesignError("singular information matrix") from exc
        scale = 1.0
        for _ in range(40):
            candidate = beta + scale * step
            ll_new = probit_loglik(candidate, Xk, y)
            if ll_new >= ll:
                break
            scale *= 0.5
        else:
            break  # no ascent direction left; report as-is
        beta = candidate
        ll = ll_new
        if np.linalg.norm(beta) > max_coef_norm:
            raise NonConvergenceError(
                "coefficient norm exploded; outcomes look separated"
            )
    if converged and not np.all(np.isfinite(beta)):
        raise NonConvergenceError("non-finite coefficients")
    coef = np.zeros(X.shape[1])
    coef[keep] = beta
    return RegFit(
        coef=coef,
        coding=coding,
        converged=converged,
        n_iter=it,
        loglik=ll,
        aliased=aliased,
    )


def reg_design_matrix(
    arm_indices: np.ndarray, X: np.ndarray, coding: str, n_arms: int
) -> np.ndarray:
    """Interceptless design: arm coding columns followed by the biomarkers.

    Numeric coding uses the 1-based arm number as a single column; the
    categorical coding gives every arm its own effect.
    """
    arm_indices = np.asarray(arm_indices, dtype=np.int64)
    if coding == CODING_NUMERIC:
        arm_cols = (arm_indices + 1.0)[:, None]
    elif coding == CODING_CATEGORICAL:
        arm_cols = np.zeros((arm_indices.shape[0], n_arms))
        arm_cols[np.arange(arm_indices.shape[0]), arm_indices] = 1.0
    else:
        raise ConfigError(f"unknown arm coding {coding!r}")
    return np.hstack([arm_cols, np.asarray(X, dtype=np.float64)])


def fit_reg_design(
    arm_indices: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    n_arms: int,
    coding: str = CODING_CATEGORICAL,
    start: np.ndarray | None = None,
) -> RegFit:
    design = reg_design_matrix(arm_indices, X, coding, n_arms)
    return probit_fit(design, y, coding=coding, start=start)


def reg_assign(
    fit: RegFit | None,
    x: np.ndarray,
    arms: list[int],
    rng: np.random.Generator,
    n_arms: int,
) -> int:
    """Arm with the best fitted success probability; uniform fallback.

    ``arms`` holds candidate arm indices. A missing or unconverged fit
    falls back to a uniform random choice.
    """
    if fit is None or not fit.converged:
        return arms[int(rng.integers(len(arms)))]
    rows = reg_design_matrix(
        np.asarray(arms), np.tile(np.asarray(x, dtype=float), (len(arms), 1)),
        fit.coding, n_arms,
    )
    p = ndtr(rows @ fit.coef)
    top = np.flatnonzero(p == p.max())
    pick = int(top[0]) if top.size == 1 else int(rng.choice(top))
    return arms[pick]
