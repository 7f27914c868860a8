from __future__ import annotations

import numpy as np
import pytest

from snnagent.agent import run_trial
from snnagent.experiments import doubling_schedule
from snnagent.params import Params
from snnagent.world import load_world


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture()
def accept(request):
    """Report one acceptance criterion: print a PASS/FAIL line and assert."""
    def report(n: int, ok: bool, detail: str) -> None:
        line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        request.config.stash[_ACCEPTANCE].append((n, line))
        assert ok, detail
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params() -> Params:
    return Params()


@pytest.fixture(scope="session")
def closed_world():
    return load_world().with_events({})


@pytest.fixture(scope="session")
def trained(closed_world):
    """An agent after 1024 door-closed steps (shared, treat as read-only)."""
    result = run_trial(closed_world, doubling_schedule(1024), Params(), np.random.default_rng(7))
    return result


@pytest.fixture()
def trained_net(trained):
    return trained.agent.net.copy()


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
