"""Shared fixtures and the acceptance summary printed after the run."""

import functools
from pathlib import Path

import pytest

from quantinv.sysfile import load_system

DATA = Path(__file__).resolve().parents[1] / "src" / "quantinv" / "data"

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def record(criterion: str, passed: bool, detail: str = ""):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@functools.lru_cache(maxsize=None)
def load(name):
    return load_system(DATA / name)


@pytest.fixture(scope="session")
def ex1():
    return load("ex1.sys")


@pytest.fixture(scope="session")
def ex2():
    return load("ex2.sys")


@pytest.fixture(scope="session")
def ex3():
    return load("ex3.sys")


@functools.lru_cache(maxsize=None)
def ex2_verdict():
    """Example 2 ULDI analysis at level 8 (about 15 s), shared by tests."""
    import time
    from quantinv.analyzer import decide_uldi
    sys, meta = load("ex2.sys")
    t0 = time.perf_counter()
    v = decide_uldi(sys, level=8, assume=meta["assume"])
    return v, time.perf_counter() - t0
