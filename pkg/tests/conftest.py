"""Shared fixtures: the glycerol preset and cached end-to-end runs."""

from dataclasses import dataclass, field

import pytest

from dropletfem.config import PRESETS
from dropletfem.properties import FluidPair
from dropletfem.timeloop import RunConfig, RunReport, run


@dataclass
class RecordedRun:
    report: RunReport
    snapshots: list = field(default_factory=list)  # (step, state, mesh, err)


def record_run(config: RunConfig, fp: FluidPair) -> RecordedRun:
    rec = RecordedRun(report=None)
    rec.report = run(config, fp, on_snapshot=lambda k, s, m, e: rec.snapshots.append((k, s, m, e)))
    return rec


@pytest.fixture(scope="session")
def glycerol() -> FluidPair:
    return FluidPair(**PRESETS["glycerol85"])


@pytest.fixture(scope="session")
def run_doerfler(glycerol) -> RecordedRun:
    return record_run(RunConfig(amr_strategy="doerfler", output_every=1), glycerol)


@pytest.fixture(scope="session")
def run_max(glycerol) -> RecordedRun:
    return record_run(RunConfig(amr_strategy="max_threshold", output_every=1), glycerol)


@pytest.fixture(scope="session")
def run_none(glycerol) -> RecordedRun:
    return record_run(RunConfig(amr_strategy="none", output_every=1), glycerol)
