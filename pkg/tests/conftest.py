"""Shared fixtures: the desk-scale studies used by the acceptance gate.

Studies default to 200 replicates with common random numbers (the desk
scale); set SUBA_ACCEPTANCE_REPLICATES to run a quick smoke pass (the
statistical criteria are calibrated for 200 and may fail below it).
"""

import os
import sys

import pytest

from suba.simulate import (
    ALL_DESIGNS,
    StudyConfig,
    run_study,
)

ACCEPT_SEED = 20141107


def desk_replicates() -> int:
    return int(os.environ.get("SUBA_ACCEPTANCE_REPLICATES", "200"))


def desk_study(scenario: int, designs=ALL_DESIGNS, **kw) -> StudyConfig:
    params = dict(
        scenario=scenario,
        designs=designs,
        replicates=desk_replicates(),
        master_seed=ACCEPT_SEED,
    )
    params.update(kw)
    return StudyConfig(**params)


def _progress(tag: str):
    def show(done, total):
        if done == total or done % 20 == 0:
            print(f"    [{tag}] {done}/{total} replicates", file=sys.stderr, flush=True)

    return show


def _run(tag: str, config: StudyConfig):
    print(f"\n  running desk study: {tag} "
          f"(scenario {config.scenario}, {config.replicates} replicates)",
          file=sys.stderr, flush=True)
    return run_study(config, progress=_progress(tag))


@pytest.fixture(scope="session")
def study_scenario1():
    return _run("scenario-1", desk_study(1))


@pytest.fixture(scope="session")
def study_scenario2():
    return _run("scenario-2", desk_study(2))


@pytest.fixture(scope="session")
def study_scenario4():
    return _run("scenario-4", desk_study(4))


@pytest.fixture(scope="session")
def study_scenario5():
    return _run("scenario-5", desk_study(5))


@pytest.fixture(scope="session")
def study_scenario6():
    return _run("scenario-6", desk_study(6))


@pytest.fixture(scope="session")
def phi_sweep_studies(study_scenario2):
    """Scenario-2 studies at phi 0.2 / 0.5 / 0.8 with shared streams.

    The phi=0.5 entry reuses the scenario-2 desk study (same master seed,
    and the adaptive design's substreams do not depend on which other
    designs ran alongside it).
    """
    lo = _run("phi-0.2", desk_study(2, designs=("suba",), phi=0.2))
    hi = _run("phi-0.8", desk_study(2, designs=("suba",), phi=0.8))
    return {0.2: lo, 0.5: study_scenario2, 0.8: hi}


@pytest.fixture(scope="session")
def n_sweep_studies(study_scenario1):
    """Scenario-1 studies at N 100 / 200 / 300 with shared stream prefixes."""
    n100 = _run("N-100", desk_study(1, designs=("suba",), n_max=100))
    n200 = _run("N-200", desk_study(1, designs=("suba",), n_max=200))
    return {100: n100, 200: n200, 300: study_scenario1}
