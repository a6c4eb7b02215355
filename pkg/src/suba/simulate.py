"""Monte Carlo study harness.

Each replicate draws one shared patient stream (biomarkers, outcome
uniforms, and a fresh query profile) and runs every requested design
against it, so design comparisons are paired (common random numbers).
Every stream is a deterministic function of (master seed, replicate,
stream label): replicates are order-independent and parallel-safe, and a
re-run of any study is bit-identical.
"""

from __future__ import annotations

import multiprocessing
import os
from dataclasses import dataclass, replace

import numpy as np

from .comparators import (
    ARConfig,
    ARCounts,
    CODING_CATEGORICAL,
    CODING_NUMERIC,
    ar_assign,
    er_assign,
    fit_reg_design,
    reg_assign,
)
from .design import DesignConfig, SubaTrial
from .errors import (
    ConfigError,
    DegenerateDesignError,
    EmptyPostRunInError,
    NonConvergenceError,
    UndefinedSubsetError,
)
from .partitions import PartitionCatalog, PriorParams, build_catalog
from .posterior import BetaHyper
from .scenarios import (
    N_ARMS,
    N_MARKERS,
    classify_subsets,
    draw_biomarkers,
    n_subsets,
    response_matrix,
)

DESIGN_SUBA = "suba"
DESIGN_ER = "er"
DESIGN_AR = "ar"
DESIGN_REG = "reg"
ALL_DESIGNS = (DESIGN_SUBA, DESIGN_ER, DESIGN_AR, DESIGN_REG)

ARM_LABELS = (1, 2, 3)


def substream(master_seed: int, replicate: int, label: str) -> np.random.Generator:
    """Independent generator for one (replicate, purpose) pair."""
    key = (int(master_seed), int(replicate)) + tuple(label.encode())
    return np.random.default_rng(np.random.SeedSequence(key))


_CATALOG_CACHE: dict[PriorParams, PartitionCatalog] = {}


def get_catalog(prior: PriorParams) -> PartitionCatalog:
    """Build (or reuse) the normalized catalog for a prior; read-only after."""
    if prior not in _CATALOG_CACHE:
        _CATALOG_CACHE[prior] = build_catalog(prior)
    return _CATALOG_CACHE[prior]


@dataclass(frozen=True)
class StudyConfig:
    """One simulation study: a scenario, designs to run, and sizes."""

    scenario: int
    designs: tuple[str, ...] = ALL_DESIGNS
    replicates: int = 200
    n_max: int = 300
    n_runin: int = 100
    phi: float = 0.5
    max_rounds: int = 3
    a: float = 1.0
    b: float = 1.0
    grid_points_per_dim: int = 10
    allocation_mode: str = "argmax"
    power_c: float = 1.0
    ar_boundaries: tuple[float, ...] = (-0.5, 0.5)
    reg_coding: str = CODING_CATEGORICAL
    master_seed: int = 0
    n_jobs: int | None = None

    def validate(self) -> None:
        if self.replicates < 1:
            raise ConfigError("need at least one replicate")
        unknown = set(self.designs) - set(ALL_DESIGNS)
        if unknown:
            raise ConfigError(f"unknown designs: {sorted(unknown)}")
        if not self.designs:
            raise ConfigError("need at least one design")
        if self.reg_coding not in (CODING_CATEGORICAL, CODING_NUMERIC):
            raise ConfigError(f"unknown reg coding {self.reg_coding!r}")
        self.design_config(0).validate()

    def prior(self) -> PriorParams:
        return PriorParams.uniform(N_MARKERS, phi=self.phi, max_rounds=self.max_rounds)

    def design_config(self, replicate: int) -> DesignConfig:
        return DesignConfig(
            n_markers=N_MARKERS,
            arm_universe=ARM_LABELS,
            n_max=self.n_max,
            n_runin=self.n_runin,
            hyper=BetaHyper(self.a, self.b),
            prior=self.prior(),
            grid_points_per_dim=self.grid_points_per_dim,
            allocation_mode=self.allocation_mode,
            power_c=self.power_c,
            rng_seed=np.random.SeedSequence(
                (int(self.master_seed), int(replicate)) + tuple(b"suba")
            ),
        )


@dataclass
class TrialRecord:
    """One design's outcomes on one replicate's shared patient stream."""

    design: str
    arms: np.ndarray  # 1-based arm labels, length N
    responses: np.ndarray  # 0/1 outcomes, length N
    stop_size: int | None = None  # adaptive design only
    drops: tuple = ()
    q_diffs: tuple[float, float] | None = None  # q(1)-q(2), q(1)-q(3) at fresh draw

    def orr(self, n_runin: int) -> float:
        post = self.responses[n_runin:]
        if post.size == 0:
            raise EmptyPostRunInError("no patients treated after the run-in")
        return float(post.mean())

    def arm_counts(self, n_runin: int) -> np.ndarray:
        post = self.arms[n_runin:]
        return np.array([np.sum(post == t) for t in ARM_LABELS], dtype=np.int64)


@dataclass
class ReplicateResult:
    replicate: int
    records: dict[str, TrialRecord]
    subset_labels: np.ndarray | None  # 1-based truth-subset label per patient
    subset_ties: np.ndarray | None

    def subset_counts(self, design: str, n_runin: int, n_sub: int) -> np.ndarray:
        """(n_subsets, n_arms) post-run-in allocation counts, ties excluded."""
        rec = self.records[design]
        arms = rec.arms[n_runin:]
        labels = self.subset_labels[n_runin:]
        ties = self.subset_ties[n_runin:]
        out = np.zeros((n_sub, N_ARMS), dtype=np.int64)
        for s in range(n_sub):
            sel = (labels == s + 1) & ~ties
            for t_idx, t in enumerate(ARM_LABELS):
                out[s, t_idx] = np.sum(arms[sel] == t)
        return out


# ---------------------------------------------------------------------------
# Single-design trial runs; all share (X, u, theta)


def _draw_outcome(u: float, theta_row: np.ndarray, arm_label: int) -> int:
    return int(u < theta_row[arm_label - 1])


def run_er(X, u, theta, rng) -> TrialRecord:
    n = X.shape[0]
    arms = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    for i in range(n):
        arms[i] = er_assign(rng, ARM_LABELS)
        y[i] = _draw_outcome(u[i], theta[i], arms[i])
    return TrialRecord(DESIGN_ER, arms, y)


def run_ar(X, u, theta, rng, n_runin, boundaries) -> TrialRecord:
    n = X.shape[0]
    counts = ARCounts(N_ARMS, ARConfig(boundaries=boundaries))
    arms = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    for i in range(n):
        if i < n_runin:
            arm = er_assign(rng, ARM_LABELS)
        else:
            arm = ARM_LABELS[ar_assign(counts, float(X[i, 0]), rng)]
        arms[i] = arm
        y[i] = _draw_outcome(u[i], theta[i], arm)
        counts.update(arm - 1, float(X[i, 0]), int(y[i]))
    return TrialRecord(DESIGN_AR, arms, y)


def run_reg(X, u, theta, rng, n_runin, coding) -> TrialRecord:
    n = X.shape[0]
    arms = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    fit = None
    for i in range(n):
        if i < n_runin:
            arm = er_assign(rng, ARM_LABELS)
        else:
            arm_idx = reg_assign(
                fit, X[i], list(range(N_ARMS)), rng, N_ARMS
            )
            arm = ARM_LABELS[arm_idx]
        arms[i] = arm
        y[i] = _draw_outcome(u[i], theta[i], arm)
        if i >= n_runin - 1 and i < n - 1:
            # refit after every outcome once the run-in data is complete
            try:
                fit = fit_reg_design(
                    arms[: i + 1] - 1,
                    X[: i + 1],
                    y[: i + 1],
                    N_ARMS,
                    coding=coding,
                    start=fit.coef if fit is not None else None,
                )
            except (NonConvergenceError, DegenerateDesignError):
                fit = None  # fall back to uniform until the data recovers
    return TrialRecord(DESIGN_REG, arms, y)


def run_suba(
    X, u, theta, fresh_x, config: DesignConfig, catalog: PartitionCatalog
) -> TrialRecord:
    n = X.shape[0]
    trial = SubaTrial(config, catalog=catalog)
    arms = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    i = 0
    while i < n and not trial.stopped:
        res = trial.enroll(X[i])
        arms[i] = res.arm
        y[i] = _draw_outcome(u[i], theta[i], res.arm)
        trial.record_outcome(res.patient_id, int(y[i]))
        i += 1
    stop_size = trial.stop_size if trial.stop_size is not None else trial.n_observed
    # early stop: remaining patients all receive the surviving arm so that
    # response-rate and allocation summaries stay comparable across designs
    if i < n:
        (survivor,) = trial.active_arms
        for j in range(i, n):
            arms[j] = survivor
            y[j] = _draw_outcome(u[j], theta[j], survivor)
    q = trial.posterior.predictive(np.asarray(fresh_x, dtype=float)[None])[0]
    q_diffs = (float(q[0] - q[1]), float(q[0] - q[2]))
    return TrialRecord(
        DESIGN_SUBA,
        arms,
        y,
        stop_size=int(stop_size),
        drops=tuple((d.arm, d.at_observed) for d in trial.drops),
        q_diffs=q_diffs,
    )


def run_replicate(
    study: StudyConfig, replicate: int, catalog: PartitionCatalog | None
) -> ReplicateResult:
    """Run every design of the study against one shared patient stream."""
    X = draw_biomarkers(study.scenario, substream(study.master_seed, replicate, "biomarkers"), study.n_max)
    u = substream(study.master_seed, replicate, "outcomes").random(study.n_max)
    fresh_x = draw_biomarkers(
        study.scenario, substream(study.master_seed, replicate, "fresh"), 1
    )[0]
    theta = response_matrix(study.scenario, X)
    records: dict[str, TrialRecord] = {}
    for design in study.designs:
        rng = substream(study.master_seed, replicate, design)
        if design == DESIGN_ER:
            records[design] = run_er(X, u, theta, rng)
        elif design == DESIGN_AR:
            records[design] = run_ar(
                X, u, theta, rng, study.n_runin, study.ar_boundaries
            )
        elif design == DESIGN_REG:
            records[design] = run_reg(
                X, u, theta, rng, study.n_runin, study.reg_coding
            )
        elif design == DESIGN_SUBA:
            if catalog is None:
                catalog = get_catalog(study.prior())
            records[design] = run_suba(
                X, u, theta, fresh_x, study.design_config(replicate), catalog
            )
    try:
        labels, ties = classify_subsets(study.scenario, X)
    except UndefinedSubsetError:
        labels, ties = None, None
    return ReplicateResult(
        replicate=replicate,
        records=records,
        subset_labels=labels,
        subset_ties=ties,
    )


# ---------------------------------------------------------------------------
# Study-level aggregation


def _mc_se(values: np.ndarray) -> float:
    """Monte Carlo standard error; undefined (nan) for a single replicate."""
    if values.size < 2:
        return float("nan")
    return float(values.std(ddof=1) / np.sqrt(values.size))


@dataclass
class StudyResult:
    config: StudyConfig
    replicates: list[ReplicateResult]

    @property
    def has_post_runin(self) -> bool:
        return self.config.n_max > self.config.n_runin

    def orr_values(self, design: str) -> np.ndarray:
        return np.array(
            [r.records[design].orr(self.config.n_runin) for r in self.replicates]
        )

    def anp(self, design: str) -> np.ndarray:
        counts = np.stack(
            [r.records[design].arm_counts(self.config.n_runin) for r in self.replicates]
        )
        return counts.mean(axis=0)

    def anp_by_subset(self, design: str) -> np.ndarray | None:
        try:
            n_sub = n_subsets(self.config.scenario)
        except UndefinedSubsetError:
            return None
        counts = np.stack(
            [
                r.subset_counts(design, self.config.n_runin, n_sub)
                for r in self.replicates
            ]
        )
        return counts.mean(axis=0)

    def stop_sizes(self) -> np.ndarray:
        return np.array(
            [r.records[DESIGN_SUBA].stop_size for r in self.replicates], dtype=float
        )

    def orr_diffs(self, other: str) -> np.ndarray:
        a = self.orr_values(DESIGN_SUBA)
        b = self.orr_values(other)
        return a - b

    def q_diff_matrix(self) -> np.ndarray:
        return np.array(
            [r.records[DESIGN_SUBA].q_diffs for r in self.replicates], dtype=float
        )

    def q_preference_fractions(self) -> tuple[float, float]:
        """Fractions of replicates ending with q(1) above q(2) and q(3)."""
        d = self.q_diff_matrix()
        return float(np.mean(d[:, 0] > 0)), float(np.mean(d[:, 1] > 0))

    def aggregate(self) -> dict:
        """JSON-ready summary in the shape of the reported tables."""
        cfg = self.config
        out: dict = {
            "scenario": cfg.scenario,
            "replicates": cfg.replicates,
            "n_max": cfg.n_max,
            "n_runin": cfg.n_runin,
            "phi": cfg.phi,
            "master_seed": cfg.master_seed,
            "designs": {},
        }
        for design in cfg.designs:
            entry: dict = {
                "anp": dict(zip(map(str, ARM_LABELS), self.anp(design).tolist()))
            }
            if self.has_post_runin:
                orr = self.orr_values(design)
                entry["orr_mean"] = float(orr.mean())
                entry["orr_se"] = _mc_se(orr)
            by_subset = self.anp_by_subset(design)
            if by_subset is not None:
                entry["anp_by_subset"] = {
                    f"S{j + 1}": dict(
                        zip(map(str, ARM_LABELS), by_subset[j].tolist())
                    )
                    for j in range(by_subset.shape[0])
                }
            out["designs"][design] = entry
        if DESIGN_SUBA in cfg.designs:
            stops = self.stop_sizes()
            out["designs"][DESIGN_SUBA]["mean_stop_size"] = float(stops.mean())
            out["designs"][DESIGN_SUBA]["drop_count_mean"] = float(
                np.mean([len(r.records[DESIGN_SUBA].drops) for r in self.replicates])
            )
            q1, q2 = self.q_preference_fractions()
            out["designs"][DESIGN_SUBA]["q1_gt_q2_fraction"] = q1
            out["designs"][DESIGN_SUBA]["q1_gt_q3_fraction"] = q2
            if self.has_post_runin:
                out["orr_diffs"] = {}
                for other in cfg.designs:
                    if other == DESIGN_SUBA:
                        continue
                    d = self.orr_diffs(other)
                    out["orr_diffs"][other] = {
                        "mean": float(d.mean()),
                        "se": _mc_se(d),
                        "suba_higher_fraction": float(np.mean(d > 0)),
                        "mean_abs": float(np.abs(d).mean()),
                    }
        return out

    def replicate_rows(self) -> list[dict]:
        """Tidy rows (one per replicate and design) for the CSV export."""
        rows = []
        cfg = self.config
        try:
            n_sub = n_subsets(cfg.scenario)
        except UndefinedSubsetError:
            n_sub = 0
        for rep in self.replicates:
            for design in cfg.designs:
                rec = rep.records[design]
                row: dict = {
                    "replicate": rep.replicate,
                    "design": design,
                    "scenario": cfg.scenario,
                }
                try:
                    row["orr"] = rec.orr(cfg.n_runin)
                except EmptyPostRunInError:
                    row["orr"] = float("nan")
                counts = rec.arm_counts(cfg.n_runin)
                for t_idx, t in enumerate(ARM_LABELS):
                    row[f"np_{t}"] = int(counts[t_idx])
                row["stop_size"] = rec.stop_size if rec.stop_size is not None else ""
                if n_sub:
                    sub = rep.subset_counts(design, cfg.n_runin, n_sub)
                    for s in range(n_sub):
                        for t_idx, t in enumerate(ARM_LABELS):
                            row[f"s{s + 1}_np_{t}"] = int(sub[s, t_idx])
                if rec.q_diffs is not None:
                    row["q1_minus_q2"] = rec.q_diffs[0]
                    row["q1_minus_q3"] = rec.q_diffs[1]
                row["drops"] = ";".join(f"{a}@{at}" for a, at in rec.drops)
                rows.append(row)
        return rows


# ---------------------------------------------------------------------------
# Parallel execution

_WORKER_STUDY: StudyConfig | None = None
_WORKER_CATALOG: PartitionCatalog | None = None


def _init_worker(study: StudyConfig) -> None:
    global _WORKER_STUDY, _WORKER_CATALOG
    _WORKER_STUDY = study
    _WORKER_CATALOG = (
        get_catalog(study.prior()) if DESIGN_SUBA in study.designs else None
    )
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(1)
    except Exception:
        pass


def _run_one(replicate: int) -> ReplicateResult:
    return run_replicate(_WORKER_STUDY, replicate, _WORKER_CATALOG)


def run_study(study: StudyConfig, progress=None) -> StudyResult:
    """Run all replicates (in parallel when n_jobs allows) and aggregate."""
    study.validate()
    jobs = study.n_jobs if study.n_jobs is not None else (os.cpu_count() or 1)
    jobs = max(1, min(jobs, study.replicates))
    if jobs == 1:
        catalog = get_catalog(study.prior()) if DESIGN_SUBA in study.designs else None
        results = []
        for rep in range(study.replicates):
            results.append(run_replicate(study, rep, catalog))
            if progress is not None:
                progress(rep + 1, study.replicates)
    else:
        ctx = multiprocessing.get_context()
        with ctx.Pool(jobs, initializer=_init_worker, initargs=(study,)) as pool:
            chunk = max(1, study.replicates // (jobs * 8))
            results = []
            for res in pool.imap(_run_one, range(study.replicates), chunksize=chunk):
                results.append(res)
                if progress is not None:
                    progress(len(results), study.replicates)
    results.sort(key=lambda r: r.replicate)
    return StudyResult(config=study, replicates=results)


# ---------------------------------------------------------------------------
# Sensitivity sweeps

PHI_SWEEP = (0.2, 0.5, 0.8)
N_SWEEP = (100, 200, 300)


@dataclass
class SweepResult:
    axis: str
    values: tuple
    results: list[StudyResult]

    def summary(self) -> dict:
        out = {"axis": self.axis, "values": list(self.values), "studies": []}
        for value, res in zip(self.values, self.results):
            entry = {"value": value, "aggregate": res.aggregate()}
            out["studies"].append(entry)
        return out


def sensitivity_sweep(
    study: StudyConfig, axis: str, values: tuple | None = None, progress=None
) -> SweepResult:
    """Repeat the study along one axis, reusing the same master seed so the
    runs share patient streams (paired comparisons across the axis)."""
    if axis == "phi":
        values = values or PHI_SWEEP
        configs = [replace(study, phi=float(v)) for v in values]
    elif axis == "N":
        values = values or N_SWEEP
        configs = [replace(study, n_max=int(v)) for v in values]
    else:
        raise ConfigError(f"unknown sweep axis {axis!r} (use 'phi' or 'N')")
    results = []
    for i, cfg in enumerate(configs):
        wrapped = None
        if progress is not None:
            wrapped = lambda done, total, _i=i: progress(_i, done, total)  # noqa: E731
        results.append(run_study(cfg, progress=wrapped))
    return SweepResult(axis=axis, values=tuple(values), results=results)
