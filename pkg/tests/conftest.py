from __future__ import annotations

import pytest

from coastwaves.config import load_config
from coastwaves.pipeline import Pipeline

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    log = pytestconfig.stash[ACCEPTANCE]

    def record(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        log[n] = line
        print(line)

    return record


_PIPELINES: dict[str, Pipeline] = {}


@pytest.fixture(scope="session")
def pipeline():
    """Shared, lazily evaluated pipelines for the shipped fixtures."""

    def get(name: str) -> Pipeline:
        if name not in _PIPELINES:
            _PIPELINES[name] = Pipeline(load_config(name))
        return _PIPELINES[name]

    return get


@pytest.fixture(scope="session")
def ex1(pipeline):
    return pipeline("example1")


@pytest.fixture(scope="session")
def ex3(pipeline):
    return pipeline("example3_case1_unperturbed")


@pytest.fixture(scope="session")
def ex3p(pipeline):
    return pipeline("example3_case1")
