"""The adaptive trial engine.

Four-step conduct: (1) run-in with equal randomization, (2) after every
post-run-in outcome, drop any arm whose predictive response probability is
strictly below every rival at every point of a reference grid, stopping the
trial when one arm remains, (3) allocate each adaptive-phase patient to the
arm maximizing the posterior predictive response probability at the
patient's biomarker profile, (4) report the least-squares partition with
per-leaf arm recommendations.

The engine is deterministic given its seed and the command sequence, which
is what makes journal replay exact in the service layer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatchError,
    DuplicateOutcomeError,
    InvalidPhaseError,
    UnknownPatientError,
)
from .partitions import PartitionCatalog, PriorParams, build_catalog
from .posterior import BetaHyper, PosteriorState, rebuild_posterior

ALLOCATION_ARGMAX = "argmax"
ALLOCATION_POWER = "power"


class Phase(str, enum.Enum):
    RUN_IN = "run_in"
    ADAPTIVE = "adaptive"
    STOPPED = "stopped"


class StopReason(str, enum.Enum):
    SINGLE_ARM_LEFT = "single_arm_left"
    MAX_ENROLLMENT = "max_enrollment"


@dataclass(frozen=True)
class DesignConfig:
    """Everything needed to run one trial."""

    n_markers: int
    arm_universe: tuple[int, ...] = (1, 2, 3)
    n_max: int = 300
    n_runin: int = 100
    hyper: BetaHyper = field(default_factory=BetaHyper)
    prior: PriorParams | None = None
    grid_points_per_dim: int = 10
    allocation_mode: str = ALLOCATION_ARGMAX
    power_c: float = 1.0
    rng_seed: int = 0
    enumeration_cap: int = 10_000_000
    reference_points: np.ndarray | None = None
    marker_labels: tuple[str, ...] | None = None

    def effective_prior(self) -> PriorParams:
        return self.prior or PriorParams.uniform(self.n_markers)

    def validate(self, require_multiple_arms: bool = True) -> None:
        if self.n_markers < 1:
            raise ConfigError("need at least one biomarker")
        if not 0 < self.n_runin <= self.n_max:
            raise ConfigError(
                f"run-in size {self.n_runin} must satisfy 0 < n <= N={self.n_max}"
            )
        if require_multiple_arms and len(self.arm_universe) < 2:
            raise ConfigError("need at least two arms")
        if len(set(self.arm_universe)) != len(self.arm_universe):
            raise ConfigError("duplicate arm labels")
        if self.grid_points_per_dim < 2:
            raise ConfigError("need at least two grid points per dimension")
        if self.allocation_mode not in (ALLOCATION_ARGMAX, ALLOCATION_POWER):
            raise ConfigError(f"unknown allocation mode {self.allocation_mode!r}")
        if self.allocation_mode == ALLOCATION_POWER and not self.power_c > 0:
            raise ConfigError("power randomization exponent must be positive")
        if self.marker_labels is not None and len(self.marker_labels) != self.n_markers:
            raise ConfigError("marker_labels must have one entry per biomarker")
        if self.reference_points is not None:
            pts = np.asarray(self.reference_points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != self.n_markers:
                raise ConfigError("reference points must be an (n, K) matrix")
        self.effective_prior()  # validates prior shape against n_markers
        if self.effective_prior().n_markers != self.n_markers:
            raise ConfigError("prior is for a different number of markers")

    def labels(self) -> tuple[str, ...]:
        if self.marker_labels is not None:
            return self.marker_labels
        return tuple(f"biomarker {k + 1}" for k in range(self.n_markers))


def load_reference_points(path, n_markers: int) -> np.ndarray:
    """Read grid-substitute points: one biomarker vector per line.

    Values separated by whitespace or commas; blank lines and lines starting
    with '#' are skipped.
    """
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != n_markers:
                raise ConfigError(
                    f"{path}:{lineno}: expected {n_markers} values, got {len(parts)}"
                )
            rows.append([float(v) for v in parts])
    if not rows:
        raise ConfigError(f"{path}: no reference points found")
    return np.asarray(rows, dtype=np.float64)


@dataclass(frozen=True)
class GridSpec:
    """Reference points at which arms are compared for exclusion."""

    axes: list[np.ndarray] | None  # product grid, or None for explicit points
    points: np.ndarray

    @classmethod
    def from_data(cls, X: np.ndarray, per_dim: int) -> "GridSpec":
        mins = X.min(axis=0)
        maxs = X.max(axis=0)
        axes = [np.linspace(mins[k], maxs[k], per_dim) for k in range(X.shape[1])]
        points = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(
            -1, X.shape[1]
        )
        return cls(axes=axes, points=points)

    @classmethod
    def from_reference(cls, points: np.ndarray) -> "GridSpec":
        return cls(axes=None, points=np.asarray(points, dtype=float))


@dataclass(frozen=True)
class EnrollResult:
    patient_id: int
    arm: int
    phase: Phase


@dataclass(frozen=True)
class OutcomeResult:
    dropped: tuple[int, ...]
    stopped: bool
    stop_reason: StopReason | None


@dataclass(frozen=True)
class ArmDrop:
    arm: int
    at_observed: int


def choose_argmax(q: np.ndarray, rng: np.random.Generator) -> int:
    """Index of the largest q; exact ties break uniformly at random."""
    top = np.flatnonzero(q == q.max())
    if top.size == 1:
        return int(top[0])
    return int(rng.choice(top))


def power_probabilities(q: np.ndarray, c: float) -> np.ndarray:
    """Selection probabilities proportional to q**c."""
    w = np.asarray(q, dtype=float) ** c
    return w / w.sum()


def choose_power(q: np.ndarray, c: float, rng: np.random.Generator) -> int:
    """Sample an index with probability proportional to q**c."""
    return int(rng.choice(len(q), p=power_probabilities(q, c)))


class SubaTrial:
    """Single-trial state machine; mutations are strictly sequential."""

    def __init__(
        self,
        config: DesignConfig,
        catalog: PartitionCatalog | None = None,
        validate: bool = True,
    ):
        if validate:
            config.validate()
        self.config = config
        prior = config.effective_prior()
        if catalog is None:
            catalog = build_catalog(prior, cap=config.enumeration_cap)
        elif catalog.prior != prior:
            raise ConfigError("supplied catalog was normalized with a different prior")
        self.catalog = catalog
        self.arms_universe = tuple(config.arm_universe)
        self._arm_index = {a: i for i, a in enumerate(self.arms_universe)}
        self.rng = np.random.default_rng(config.rng_seed)
        n, k = config.n_max, config.n_markers
        self._X = np.zeros((n, k), dtype=np.float64)
        self._arms = np.full(n, -1, dtype=np.int64)
        self._y = np.full(n, -1, dtype=np.int64)
        self.n_enrolled = 0
        self.n_observed = 0
        self.active: list[int] = list(range(len(self.arms_universe)))
        self.phase = Phase.RUN_IN if config.n_runin > 0 else Phase.ADAPTIVE
        self.stop_reason: StopReason | None = None
        self.stop_size: int | None = None
        self.drops: list[ArmDrop] = []
        self.seq = 0
        self._posterior: PosteriorState | None = None

    # -- views --------------------------------------------------------------

    @property
    def X(self) -> np.ndarray:
        return self._X[: self.n_enrolled]

    @property
    def assigned_arms(self) -> np.ndarray:
        return self._arms[: self.n_enrolled]

    @property
    def outcomes(self) -> np.ndarray:
        return self._y[: self.n_enrolled]

    @property
    def active_arms(self) -> tuple[int, ...]:
        return tuple(self.arms_universe[i] for i in self.active)

    @property
    def stopped(self) -> bool:
        return self.phase is Phase.STOPPED

    def snapshot(self) -> tuple[int, int]:
        return (self.n_enrolled, self.n_observed)

    @property
    def posterior(self) -> PosteriorState:
        """Current posterior; rebuilt lazily whenever the data changed."""
        snap = self.snapshot()
        if self._posterior is None or self._posterior.snapshot != hash(snap):
            self._posterior = rebuild_posterior(
                self.catalog,
                self.X,
                np.where(self.assigned_arms >= 0, self.assigned_arms, 0),
                self.outcomes,
                self.config.hyper,
                len(self.arms_universe),
                snapshot=hash(snap),
            )
        return self._posterior

    def predictive_all(self, x: np.ndarray) -> np.ndarray:
        """q per universe arm at one profile (dropped arms included)."""
        x = self._check_point(x)
        return self.posterior.predictive(x[None])[0]

    def q_active(self, x: np.ndarray) -> dict[int, float]:
        q = self.predictive_all(x)
        return {self.arms_universe[i]: float(q[i]) for i in self.active}

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.config.n_markers:
            raise DimensionMismatchError(
                f"expected {self.config.n_markers} biomarkers, got {x.shape[0]}"
            )
        return x

    # -- mutations ------------------------------------------------------------

    def enroll(self, x) -> EnrollResult:
        """Record a new patient and assign an arm per the current phase."""
        if self.stopped:
            raise InvalidPhaseError(f"trial stopped ({self.stop_reason.value})")
        if self.n_enrolled >= self.config.n_max:
            raise InvalidPhaseError("maximum enrollment reached")
        x = self._check_point(x)
        phase = self.phase
        if phase is Phase.RUN_IN:
            arm_idx = self.active[int(self.rng.integers(len(self.active)))]
        else:
            q = self.posterior.predictive(x[None])[0]
            q_active = q[self.active]
            if self.config.allocation_mode == ALLOCATION_ARGMAX:
                pick = choose_argmax(q_active, self.rng)
            else:
                pick = choose_power(q_active, self.config.power_c, self.rng)
            arm_idx = self.active[pick]
        pid = self.n_enrolled
        self._X[pid] = x
        self._arms[pid] = arm_idx
        self.n_enrolled += 1
        self.seq += 1
        if self.phase is Phase.RUN_IN and self.n_enrolled >= self.config.n_runin:
            self.phase = Phase.ADAPTIVE
        return EnrollResult(
            patient_id=pid, arm=self.arms_universe[arm_idx], phase=phase
        )

    def record_outcome(self, patient_id: int, y: int) -> OutcomeResult:
        """Store a binary outcome, rebuild inference, run the exclusion rule."""
        if self.stopped:
            raise InvalidPhaseError(f"trial stopped ({self.stop_reason.value})")
        if not 0 <= patient_id < self.n_enrolled:
            raise UnknownPatientError(f"patient {patient_id} was never enrolled")
        if y not in (0, 1):
            raise ConfigError(f"outcome must be 0 or 1, got {y!r}")
        if self._y[patient_id] >= 0:
            raise DuplicateOutcomeError(
                f"patient {patient_id} already has an outcome"
            )
        self._y[patient_id] = int(y)
        self.n_observed += 1
        self.seq += 1
        dropped: tuple[int, ...] = ()
        if self.n_observed >= self.config.n_runin:
            dropped = self._exclusion_check()
        if (
            not self.stopped
            and self.n_enrolled >= self.config.n_max
            and self.n_observed >= self.config.n_max
        ):
            self._stop(StopReason.MAX_ENROLLMENT)
        return OutcomeResult(
            dropped=dropped, stopped=self.stopped, stop_reason=self.stop_reason
        )

    def current_grid(self) -> GridSpec:
        if self.config.reference_points is not None:
            return GridSpec.from_reference(self.config.reference_points)
        return GridSpec.from_data(self.X, self.config.grid_points_per_dim)

    def _exclusion_check(self) -> tuple[int, ...]:
        """Drop arms strictly inferior to every rival everywhere on the grid."""
        if len(self.active) < 2:
            return ()
        grid = self.current_grid()
        if grid.axes is not None:
            q = self.posterior.predictive_grid(grid.axes)
        else:
            q = self.posterior.predictive(grid.points)
        q = q[:, self.active]  # (H, n_active)
        inferior = []
        for j in range(q.shape[1]):
            rivals = np.delete(q, j, axis=1)
            if np.all(q[:, j] < rivals.min(axis=1)):
                inferior.append(j)
        if len(inferior) == len(self.active):
            # unreachable for strict dominance, but keep the safety invariant
            keep = int(np.argmax(q.mean(axis=0)))
            inferior = [j for j in inferior if j != keep]
        dropped_labels = []
        for j in sorted(inferior, reverse=True):
            arm_idx = self.active.pop(j)
            label = self.arms_universe[arm_idx]
            self.drops.append(ArmDrop(arm=label, at_observed=self.n_observed))
            dropped_labels.append(label)
            self.seq += 1
        if len(self.active) == 1 and not self.stopped:
            self._stop(StopReason.SINGLE_ARM_LEFT)
        return tuple(reversed(dropped_labels))

    def _stop(self, reason: StopReason) -> None:
        self.phase = Phase.STOPPED
        self.stop_reason = reason
        self.stop_size = self.n_observed
        self.seq += 1

    # -- reporting ------------------------------------------------------------

    def final_report(self) -> "FinalReport":
        if not self.stopped:
            raise InvalidPhaseError("trial is still running")
        return self.build_report()

    def build_report(self) -> "FinalReport":
        """Partition summary plus per-arm disposition (also usable mid-trial)."""
        posterior = self.posterior
        summary = posterior.least_squares_partition()
        recommended = summary.best_arm_restricted(self.active)
        arms = self.assigned_arms
        y = self.outcomes
        disposition = []
        drop_at = {d.arm: d.at_observed for d in self.drops}
        for i, label in enumerate(self.arms_universe):
            sel = arms == i
            disposition.append(
                ArmDisposition(
                    arm=label,
                    active=i in self.active,
                    dropped_at=drop_at.get(label),
                    n_assigned=int(sel.sum()),
                    n_responses=int(np.sum(y[sel] == 1)),
                )
            )
        return FinalReport(
            summary=summary,
            recommended_arm_per_leaf=tuple(
                self.arms_universe[i] for i in recommended
            ),
            disposition=tuple(disposition),
            drops=tuple(self.drops),
            stop_reason=self.stop_reason,
            stop_size=self.stop_size if self.stop_size is not None else self.n_observed,
            n_enrolled=self.n_enrolled,
            n_observed=self.n_observed,
        )


@dataclass(frozen=True)
class ArmDisposition:
    arm: int
    active: bool
    dropped_at: int | None
    n_assigned: int
    n_responses: int


@dataclass(frozen=True)
class FinalReport:
    summary: object  # PartitionSummary
    recommended_arm_per_leaf: tuple[int, ...]
    disposition: tuple[ArmDisposition, ...]
    drops: tuple[ArmDrop, ...]
    stop_reason: StopReason | None
    stop_size: int
    n_enrolled: int
    n_observed: int

    def partition_tree(self, arm_labels: tuple[int, ...]) -> dict:
        """JSON-ready tree of the reported partition (1-based markers)."""
        summary = self.summary
        leaf_meta = {}
        for pos in range(len(summary.leaf_cells)):
            leaf_meta[pos] = {
                "recommended_arm": self.recommended_arm_per_leaf[pos],
                "post_mean": {
                    str(arm_labels[t]): float(summary.leaf_post_mean[pos, t])
                    for t in range(summary.leaf_post_mean.shape[1])
                },
                "counts": {
                    str(arm_labels[t]): int(summary.leaf_counts[pos, t])
                    for t in range(summary.leaf_counts.shape[1])
                },
                "successes": {
                    str(arm_labels[t]): int(summary.leaf_successes[pos, t])
                    for t in range(summary.leaf_successes.shape[1])
                },
                "n_patients": int(summary.leaf_sizes[pos]),
            }

        def walk(node):
            if isinstance(node, int):
                return {"kind": "leaf", "leaf_index": node, **leaf_meta[node]}
            k, threshold, lower, upper = node
            return {
                "kind": "split",
                "marker": k + 1,
                "threshold": float(threshold),
                "lower": walk(lower),
                "upper": walk(upper),
            }

        return walk(summary.partition.bound)

    def to_dict(self, arm_labels: tuple[int, ...]) -> dict:
        return {
            "partition": self.partition_tree(arm_labels),
            "layout": self.summary.partition.layout.serialize(),
            "objective": self.summary.objective,
            "objective_value": float(self.summary.objective_value),
            "stop_reason": self.stop_reason.value if self.stop_reason else None,
            "stop_size": self.stop_size,
            "n_enrolled": self.n_enrolled,
            "n_observed": self.n_observed,
            "drops": [
                {"arm": d.arm, "at_observed": d.at_observed} for d in self.drops
            ],
            "disposition": [
                {
                    "arm": d.arm,
                    "active": d.active,
                    "dropped_at": d.dropped_at,
                    "n_assigned": d.n_assigned,
                    "n_responses": d.n_responses,
                }
                for d in self.disposition
            ],
        }
