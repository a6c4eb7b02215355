"""Generate console contract fixtures from the real trial service.

Drives three scripted journals through the HTTP API (fresh trial;
mid-trial with a marker-2-driven truth; stopped trial) and freezes the
exact JSON responses under tests/fixtures/. The console contract tests
assert that the rendered numbers equal these payloads verbatim.

Run from the repository root:  python frontend/scripts/make_fixtures.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from suba.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def dump(scenario_dir: Path, name: str, payload) -> None:
    scenario_dir.mkdir(parents=True, exist_ok=True)
    (scenario_dir / f"{name}.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )


def snapshot(client, trial_id: str, out: Path, whatif_x: list[float]) -> None:
    dump(out, "state", client.get(f"/trials/{trial_id}/state").json())
    dump(out, "events", client.get(f"/trials/{trial_id}/events").json())
    packed = ",".join(str(v) for v in whatif_x)
    dump(
        out,
        "predictive",
        client.get(f"/trials/{trial_id}/predictive", params={"x": packed}).json(),
    )
    partition = client.get(f"/trials/{trial_id}/partition")
    if partition.status_code == 200:
        dump(out, "partition", partition.json())
    else:
        dump(out, "partition_error", partition.json())


def make_fresh(client) -> None:
    config = {
        "n_markers": 4,
        "arms": [1, 2, 3],
        "N": 60,
        "runin": 20,
        "seed": 21,
    }
    trial_id = client.post("/trials", json={"config": config}).json()["trial_id"]
    out = FIXTURES / "fresh"
    rec = client.post(
        f"/trials/{trial_id}/patients",
        json={"biomarkers": [0.1, -0.2, 0.3, 0.0]},
    ).json()
    dump(out, "recommendation", rec)
    snapshot(client, trial_id, out, [0.0, 0.0, 0.0, 0.0])


def make_midtrial(client) -> None:
    # truth driven by biomarker 2: arm 1 responds when it is positive,
    # arm 3 when negative, arm 2 is mediocre everywhere
    config = {
        "n_markers": 4,
        "arms": [1, 2, 3],
        "N": 120,
        "runin": 45,
        "seed": 1234,
    }
    trial_id = client.post("/trials", json={"config": config}).json()["trial_id"]
    rng = np.random.default_rng(77)

    def respond(arm: int, x) -> int:
        if arm == 1:
            p = 0.85 if x[1] > 0 else 0.15
        elif arm == 3:
            p = 0.85 if x[1] < 0 else 0.15
        else:
            p = 0.35
        return int(rng.random() < p)

    for _ in range(70):
        x = rng.uniform(-1, 1, 4)
        rec = client.post(
            f"/trials/{trial_id}/patients", json={"biomarkers": list(x)}
        ).json()
        client.post(
            f"/trials/{trial_id}/patients/{rec['patient_id']}/outcome",
            json={"y": respond(rec["arm"], x)},
        )
    out = FIXTURES / "midtrial"
    rec = client.post(
        f"/trials/{trial_id}/patients",
        json={"biomarkers": [0.25, 0.7, -0.1, 0.4]},
    ).json()
    dump(out, "recommendation", rec)
    snapshot(client, trial_id, out, [0.0, 2.5, 0.0, 0.0])  # outside observed range
    partition = json.loads((out / "partition.json").read_text())
    root = partition["partition"]
    assert root["kind"] == "split" and root["marker"] == 2, (
        "mid-trial fixture must split on biomarker 2 at the root; "
        f"got {root.get('kind')}/{root.get('marker')}"
    )


def make_stopped(client) -> None:
    config = {
        "n_markers": 2,
        "arms": [1, 2],
        "N": 30,
        "runin": 8,
        "max_rounds": 2,
        "grid": 6,
        "seed": 5,
    }
    trial_id = client.post("/trials", json={"config": config}).json()["trial_id"]
    rng = np.random.default_rng(3)
    while True:
        state = client.get(f"/trials/{trial_id}/state").json()
        if state["phase"] == "stopped":
            break
        rec = client.post(
            f"/trials/{trial_id}/patients",
            json={"biomarkers": list(rng.uniform(-1, 1, 2))},
        ).json()
        client.post(
            f"/trials/{trial_id}/patients/{rec['patient_id']}/outcome",
            json={"y": 1 if rec["arm"] == 1 else 0},
        )
    out = FIXTURES / "stopped"
    denied = client.post(
        f"/trials/{trial_id}/patients", json={"biomarkers": [0.0, 0.0]}
    )
    dump(out, "enroll_denied", {"status": denied.status_code, "body": denied.json()})
    snapshot(client, trial_id, out, [0.2, 0.2])


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(journal_dir=Path(tmp) / "journals")
        with TestClient(app) as client:
            make_fresh(client)
            make_midtrial(client)
            make_stopped(client)
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
