import os
import sys
import time

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

# every property runs 1000 derandomised (seeded) cases
settings.register_profile(
    "repo",
    max_examples=1000,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large,
                           HealthCheck.filter_too_much],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

_ACCEPTANCE = []
SUITE_LIMIT = 600.0  # seconds for the full run
_START = [None]


def pytest_sessionstart(session):
    _START[0] = time.perf_counter()


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _START[0]
    session.config._suite_elapsed = elapsed
    if elapsed > SUITE_LIMIT and exitstatus == 0:
        session.exitstatus = 1


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    label = dict(report.user_properties).get("criterion")
    if label is not None:
        _ACCEPTANCE.append((label, report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, duration in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}  ({duration:.2f}s)")
    elapsed = getattr(terminalreporter.config, "_suite_elapsed", None)
    if elapsed is not None:
        status = "PASS" if elapsed <= SUITE_LIMIT else "FAIL"
        terminalreporter.write_line(f"{status}  11 session wall time {elapsed:.1f}s "
                                    f"(limit {SUITE_LIMIT:.0f}s)")


@pytest.fixture
def criterion(record_property):
    """Label an acceptance test; the label appears in the summary and on stdout."""

    def label(text):
        record_property("criterion", text)
        print(f"\n[acceptance] {text}")

    return label
