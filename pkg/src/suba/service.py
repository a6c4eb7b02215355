"""Live-trial conduct service: HTTP+JSON over the trial engine.

One journal file per trial; every mutation appends its events before the
response is sent (write-ahead). Mutations are serialized per trial; reads
never touch the journal. On startup every journal in the directory is
replayed through a fresh engine with strict verification, so the in-memory
state provably matches the log.
"""

from __future__ import annotations

import os
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import Depends, FastAPI, HTTPException, Request
from pydantic import BaseModel, Field

from .design import DesignConfig, SubaTrial
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DuplicateOutcomeError,
    InvalidPhaseError,
    JournalError,
    NoDataError,
    SubaError,
    UnknownPatientError,
)
from .journal import (
    EVT_ASSIGNED,
    EVT_CREATED,
    EVT_DROPPED,
    EVT_ENROLLED,
    EVT_OUTCOME,
    EVT_STOPPED,
    Journal,
    TrialEvent,
)
from .partitions import PriorParams
from .posterior import BetaHyper
from .simulate import get_catalog


class TrialConfigIn(BaseModel):
    n_markers: int = Field(ge=1, le=8)
    arms: list[int] = [1, 2, 3]
    N: int = 300
    runin: int = 100
    a: float = 1.0
    b: float = 1.0
    phi: float = 0.5
    max_rounds: int = 3
    split_probs: list[float] | None = None
    grid: int = 10
    allocation: str = "argmax"
    power_c: float = 1.0
    seed: int = 0
    marker_labels: list[str] | None = None
    reference_points: list[list[float]] | None = None

    def to_design(self) -> DesignConfig:
        prior = (
            PriorParams(
                split_probs=tuple(self.split_probs),
                phi=self.phi,
                n_markers=self.n_markers,
                max_rounds=self.max_rounds,
            )
            if self.split_probs is not None
            else PriorParams.uniform(
                self.n_markers, phi=self.phi, max_rounds=self.max_rounds
            )
        )
        return DesignConfig(
            n_markers=self.n_markers,
            arm_universe=tuple(self.arms),
            n_max=self.N,
            n_runin=self.runin,
            hyper=BetaHyper(self.a, self.b),
            prior=prior,
            grid_points_per_dim=self.grid,
            allocation_mode=self.allocation,
            power_c=self.power_c,
            rng_seed=self.seed,
            marker_labels=tuple(self.marker_labels) if self.marker_labels else None,
            reference_points=(
                np.asarray(self.reference_points, dtype=float)
                if self.reference_points
                else None
            ),
        )


class CreateTrialIn(BaseModel):
    config: TrialConfigIn
    idempotency_key: str | None = None


class EnrollIn(BaseModel):
    biomarkers: list[float]


class OutcomeIn(BaseModel):
    y: int = Field(ge=0, le=1)


class LiveTrial:
    """One trial: engine + journal + a per-trial writer lock."""

    def __init__(self, trial_id: str, config_in: TrialConfigIn, journal: Journal):
        self.trial_id = trial_id
        self.config_in = config_in
        design = config_in.to_design()
        design.validate()
        self.engine = SubaTrial(design, catalog=get_catalog(design.effective_prior()))
        self.journal = journal
        self.lock = threading.Lock()

    # -- command handlers (journal-before-response) -------------------------

    def enroll(self, biomarkers: list[float]) -> dict:
        with self.lock:
            x = np.asarray(biomarkers, dtype=float)
            if self.engine.stopped:
                raise InvalidPhaseError(
                    f"trial stopped ({self.engine.stop_reason.value})"
                )
            q = self.engine.q_active(x)  # validates dimension too
            res = self.engine.enroll(x)
            self.journal.append(
                EVT_ENROLLED,
                {"patient_id": res.patient_id, "biomarkers": list(map(float, x))},
            )
            self.journal.append(EVT_ASSIGNED, self._assignment_payload(res, q))
            return self._recommendation_view(res, q)

    def _assignment_payload(self, res, q: dict) -> dict:
        return {
            "patient_id": res.patient_id,
            "arm": res.arm,
            "phase": res.phase.value,
            "allocation_mode": self.engine.config.allocation_mode,
            "q": {str(arm): val for arm, val in q.items()},
        }

    def _recommendation_view(self, res, q: dict) -> dict:
        return {
            "patient_id": res.patient_id,
            "arm": res.arm,
            "recommended_arm": res.arm,
            "phase": res.phase.value,
            "allocation_mode": self.engine.config.allocation_mode,
            "q": {str(arm): val for arm, val in q.items()},
            "posterior_snapshot": self._snapshot_id(),
            "seq": self.journal.last_seq,
        }

    def record_outcome(self, patient_id: int, y: int) -> dict:
        with self.lock:
            res = self.engine.record_outcome(patient_id, y)
            self.journal.append(EVT_OUTCOME, {"patient_id": patient_id, "y": int(y)})
            for arm in res.dropped:
                self.journal.append(
                    EVT_DROPPED,
                    {"arm": arm, "at_observed": self.engine.n_observed},
                )
            if res.stopped:
                self.journal.append(
                    EVT_STOPPED,
                    {
                        "reason": res.stop_reason.value,
                        "stop_size": self.engine.stop_size,
                    },
                )
            return {
                "patient_id": patient_id,
                "dropped_arms": list(res.dropped),
                "stopped": res.stopped,
                "stop_reason": res.stop_reason.value if res.stop_reason else None,
                "active_arms": list(self.engine.active_arms),
                "seq": self.journal.last_seq,
            }

    # -- read-only views -----------------------------------------------------

    def _snapshot_id(self) -> str:
        return f"{self.engine.n_enrolled}.{self.engine.n_observed}"

    def state_view(self) -> dict:
        eng = self.engine
        X = eng.X
        pending = [
            {"patient_id": int(i), "arm": int(eng.arms_universe[eng.assigned_arms[i]])}
            for i in range(eng.n_enrolled)
            if eng.outcomes[i] < 0
        ]
        return {
            "trial_id": self.trial_id,
            "phase": eng.phase.value,
            "stop_reason": eng.stop_reason.value if eng.stop_reason else None,
            "n_enrolled": eng.n_enrolled,
            "n_observed": eng.n_observed,
            "n_max": eng.config.n_max,
            "n_runin": eng.config.n_runin,
            "arm_universe": list(eng.arms_universe),
            "active_arms": list(eng.active_arms),
            "drops": [
                {"arm": d.arm, "at_observed": d.at_observed} for d in eng.drops
            ],
            "pending_outcomes": pending,
            "marker_labels": list(eng.config.labels()),
            "n_markers": eng.config.n_markers,
            "biomarker_ranges": (
                [[float(X[:, k].min()), float(X[:, k].max())] for k in range(X.shape[1])]
                if eng.n_enrolled
                else None
            ),
            "allocation_mode": eng.config.allocation_mode,
            "posterior_snapshot": self._snapshot_id(),
            "seq": self.journal.last_seq,
        }

    def partition_view(self) -> dict:
        if self.engine.n_observed < 1:
            raise NoDataError("no outcomes recorded yet")
        report = self.engine.build_report()
        payload = report.to_dict(self.engine.arms_universe)
        payload["posterior_snapshot"] = self._snapshot_id()
        return payload

    def predictive_view(self, x: np.ndarray) -> dict:
        q = self.engine.q_active(x)
        return {
            "q": {str(arm): val for arm, val in q.items()},
            "active_arms": list(self.engine.active_arms),
            "posterior_snapshot": self._snapshot_id(),
        }

    # -- replay ---------------------------------------------------------------

    @classmethod
    def replay(cls, path: Path) -> "LiveTrial":
        """Rebuild a trial from its journal, verifying every derived event."""
        journal = Journal(path)
        if not journal.events or journal.events[0].kind != EVT_CREATED:
            raise JournalError(f"{path} does not start with {EVT_CREATED}")
        created = journal.events[0].payload
        trial = cls.__new__(cls)
        trial.trial_id = created["trial_id"]
        trial.config_in = TrialConfigIn(**created["config"])
        design = trial.config_in.to_design()
        design.validate()
        trial.engine = SubaTrial(design, catalog=get_catalog(design.effective_prior()))
        trial.journal = journal
        trial.lock = threading.Lock()
        derived = replay_events(trial.engine, journal.events)
        verify_derived(journal.events, derived)
        return trial


def replay_events(engine: SubaTrial, events: list[TrialEvent]) -> dict[int, dict]:
    """Feed journaled commands through the engine; return derived payloads.

    Commands are enrollments and outcomes; everything else is derived. The
    returned map has, for every derived event's seq, the payload the fresh
    engine produced, ready to compare with what was journaled.
    """
    derived: dict[int, dict] = {}
    i = 0
    while i < len(events):
        event = events[i]
        if event.kind == EVT_ENROLLED:
            x = np.asarray(event.payload["biomarkers"], dtype=float)
            q = engine.q_active(x)
            res = engine.enroll(x)
            derived[event.seq + 1] = {
                "patient_id": res.patient_id,
                "arm": res.arm,
                "phase": res.phase.value,
                "allocation_mode": engine.config.allocation_mode,
                "q": {str(arm): val for arm, val in q.items()},
            }
        elif event.kind == EVT_OUTCOME:
            res = engine.record_outcome(
                event.payload["patient_id"], event.payload["y"]
            )
            seq = event.seq + 1
            for arm in res.dropped:
                derived[seq] = {"arm": arm, "at_observed": engine.n_observed}
                seq += 1
            if res.stopped:
                derived[seq] = {
                    "reason": res.stop_reason.value,
                    "stop_size": engine.stop_size,
                }
        i += 1
    return derived


def verify_derived(events: list[TrialEvent], derived: dict[int, dict]) -> None:
    import json as _json

    for event in events:
        if event.kind in (EVT_ASSIGNED, EVT_DROPPED, EVT_STOPPED):
            fresh = derived.get(event.seq)
            if fresh is None:
                raise JournalError(
                    f"replay produced no event for seq {event.seq} ({event.kind})"
                )
            if _json.dumps(fresh, sort_keys=True) != _json.dumps(
                event.payload, sort_keys=True
            ):
                raise JournalError(
                    f"replay mismatch at seq {event.seq} ({event.kind}): "
                    f"{fresh} != {event.payload}"
                )


class TrialManager:
    """All live trials plus the idempotency index, keyed by journal files."""

    def __init__(self, journal_dir: Path | str):
        self.journal_dir = Path(journal_dir)
        self.journal_dir.mkdir(parents=True, exist_ok=True)
        self.trials: dict[str, LiveTrial] = {}
        self.idempotency: dict[str, str] = {}
        self.lock = threading.Lock()
        for path in sorted(self.journal_dir.glob("*.jsonl")):
            trial = LiveTrial.replay(path)
            self.trials[trial.trial_id] = trial
            key = trial.journal.events[0].payload.get("idempotency_key")
            if key:
                self.idempotency[key] = trial.trial_id

    def create(self, request: CreateTrialIn) -> LiveTrial:
        with self.lock:
            if request.idempotency_key and request.idempotency_key in self.idempotency:
                return self.trials[self.idempotency[request.idempotency_key]]
            request.config.to_design().validate()  # reject before journaling
            trial_id = uuid.uuid4().hex[:12]
            journal = Journal(self.journal_dir / f"{trial_id}.jsonl")
            journal.append(
                EVT_CREATED,
                {
                    "trial_id": trial_id,
                    "config": request.config.model_dump(),
                    "idempotency_key": request.idempotency_key,
                },
            )
            trial = LiveTrial(trial_id, request.config, journal)
            self.trials[trial_id] = trial
            if request.idempotency_key:
                self.idempotency[request.idempotency_key] = trial_id
            return trial

    def get(self, trial_id: str) -> LiveTrial:
        trial = self.trials.get(trial_id)
        if trial is None:
            raise HTTPException(status_code=404, detail=f"no trial {trial_id}")
        return trial


def _parse_vector(raw: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in raw.split(",") if v != ""], dtype=float)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=f"bad vector {raw!r}") from exc


def create_app(journal_dir: Path | str = "./journals", static_dir=None) -> FastAPI:
    app = FastAPI(title="suba trial service", version="1.0")
    manager = TrialManager(journal_dir)
    app.state.manager = manager

    token = os.environ.get("SUBA_SERVICE_TOKEN")

    async def check_token(request: Request) -> None:
        if token and request.headers.get("authorization") != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or bad token")

    auth = [Depends(check_token)]

    @app.exception_handler(SubaError)
    async def suba_error_handler(request: Request, exc: SubaError):
        from fastapi.responses import JSONResponse

        status = 500
        if isinstance(exc, (ConfigError, DimensionMismatchError)):
            status = 422
        elif isinstance(exc, (InvalidPhaseError, DuplicateOutcomeError)):
            status = 409
        elif isinstance(exc, UnknownPatientError):
            status = 404
        elif isinstance(exc, NoDataError):
            status = 409
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.post("/trials", status_code=201, dependencies=auth)
    def create_trial(body: CreateTrialIn):
        trial = manager.create(body)
        return {
            "trial_id": trial.trial_id,
            "config": trial.config_in.model_dump(),
            "seq": trial.journal.last_seq,
        }

    @app.post("/trials/{trial_id}/patients", dependencies=auth)
    def enroll(trial_id: str, body: EnrollIn):
        return manager.get(trial_id).enroll(body.biomarkers)

    @app.post(
        "/trials/{trial_id}/patients/{patient_id}/outcome", dependencies=auth
    )
    def outcome(trial_id: str, patient_id: int, body: OutcomeIn):
        return manager.get(trial_id).record_outcome(patient_id, body.y)

    @app.get("/trials/{trial_id}/state", dependencies=auth)
    def state(trial_id: str):
        return manager.get(trial_id).state_view()

    @app.get("/trials/{trial_id}/partition", dependencies=auth)
    def partition(trial_id: str):
        return manager.get(trial_id).partition_view()

    @app.get("/trials/{trial_id}/predictive", dependencies=auth)
    def predictive(trial_id: str, x: str):
        return manager.get(trial_id).predictive_view(_parse_vector(x))

    @app.get("/trials/{trial_id}/events", dependencies=auth)
    def events(trial_id: str, since: int = 0):
        trial = manager.get(trial_id)
        return {
            "events": [
                {
                    "seq": e.seq,
                    "ts": e.ts,
                    "kind": e.kind,
                    "payload": e.payload,
                }
                for e in trial.journal.since(since)
            ],
            "last_seq": trial.journal.last_seq,
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
