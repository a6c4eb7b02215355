"""Simulation truths: six scenarios over four biomarkers and three arms.

Biomarkers are i.i.d. uniform on [-1, 1]; scenario 1 pins the second
biomarker at 0.8 for every patient. Response probabilities are Gaussian
CDFs (mean 0, sd 1.5) of scenario-specific predictors, or constants.
Scenarios 2-5 also define truth subsets: the regions of biomarker space on
which each arm is truly best, used to break down allocation counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, UndefinedSubsetError

TRUTH_SD = 1.5
N_MARKERS = 4
N_ARMS = 3
SCENARIO_IDS = (1, 2, 3, 4, 5, 6)


def gauss_cdf(eta):
    """CDF of a Normal(0, 1.5) evaluated at eta."""
    return ndtr(np.asarray(eta, dtype=np.float64) / TRUTH_SD)


@dataclass(frozen=True)
class SubsetLabel:
    label: int  # 1-based truth-subset index
    boundary: bool  # measure-zero tie, excluded from subset tallies


def draw_biomarkers(scenario_id: int, rng: np.random.Generator, n: int) -> np.ndarray:
    _check_scenario(scenario_id)
    X = rng.uniform(-1.0, 1.0, size=(n, N_MARKERS))
    if scenario_id == 1:
        X[:, 1] = 0.8
    return X


def response_matrix(scenario_id: int, X: np.ndarray) -> np.ndarray:
    """True response probability per (patient, arm), shape (n, 3)."""
    _check_scenario(scenario_id)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    n = X.shape[0]
    if scenario_id in (1, 2):
        eta = np.column_stack([x1 + 1.5 * x2, x1, x1 - 1.5 * x2])
        return gauss_cdf(eta)
    if scenario_id == 3:
        eta = np.column_stack(
            [
                x1 + 1.5 * x2 - 0.5 * x3 + 2.0 * x1 * x3,
                -x1 - 2.0 * x3,
                x1 - 1.5 * x2 - 2.0 * x1 * x2,
            ]
        )
        return gauss_cdf(eta)
    if scenario_id in (4, 5):
        theta12 = gauss_cdf(
            np.column_stack(
                [x1**2 / 2.0 + x1 * x2 / 2.0, x2**2 / 2.0 - x1 * x2 / 2.0]
            )
        )
        theta3 = np.full((n, 1), 0.15 if scenario_id == 4 else 0.30)
        return np.hstack([theta12, theta3])
    return np.full((n, N_ARMS), 0.4)


def true_response(scenario_id: int, arm: int, x) -> float:
    """True response probability for one arm (1-based) at one profile."""
    if not 1 <= arm <= N_ARMS:
        raise ConfigError(f"arm must be 1..{N_ARMS}, got {arm}")
    return float(response_matrix(scenario_id, np.atleast_2d(x))[0, arm - 1])


def _truth_scores(scenario_id: int, X: np.ndarray) -> np.ndarray:
    """Linear/quadratic scores whose argmax defines the truth subsets."""
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    if scenario_id == 3:
        return np.column_stack(
            [
                x1 + 1.5 * x2 - 0.5 * x3 + 2.0 * x1 * x3,
                -x1 - 2.0 * x3,
                x1 - 1.5 * x2 - 2.0 * x1 * x2,
            ]
        )
    if scenario_id in (4, 5):
        return np.column_stack(
            [x1**2 / 2.0 + x1 * x2 / 2.0, x2**2 / 2.0 - x1 * x2 / 2.0]
        )
    raise UndefinedSubsetError(f"scenario {scenario_id} has no score-based subsets")


def n_subsets(scenario_id: int) -> int:
    _check_scenario(scenario_id)
    if scenario_id == 2:
        return 2
    if scenario_id == 3:
        return 3
    if scenario_id in (4, 5):
        return 2
    raise UndefinedSubsetError(f"scenario {scenario_id} defines no truth subsets")


def classify_subsets(scenario_id: int, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """1-based subset labels and a boundary-tie mask for each row."""
    _check_scenario(scenario_id)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if scenario_id in (1, 6):
        raise UndefinedSubsetError(f"scenario {scenario_id} defines no truth subsets")
    if scenario_id == 2:
        x2 = X[:, 1]
        labels = np.where(x2 > 0, 1, 2)
        ties = x2 == 0.0
        labels[ties] = 1
        return labels.astype(np.int64), ties
    scores = _truth_scores(scenario_id, X)
    best_idx = np.argmax(scores, axis=1)  # lowest index wins exact ties
    best = scores[np.arange(scores.shape[0]), best_idx]
    ties = (scores == best[:, None]).sum(axis=1) > 1
    return (best_idx + 1).astype(np.int64), ties


def truth_subset(scenario_id: int, x) -> SubsetLabel:
    labels, ties = classify_subsets(scenario_id, np.atleast_2d(x))
    return SubsetLabel(label=int(labels[0]), boundary=bool(ties[0]))


def _check_scenario(scenario_id: int) -> None:
    if scenario_id not in SCENARIO_IDS:
        raise ConfigError(f"scenario must be one of {SCENARIO_IDS}, got {scenario_id}")
