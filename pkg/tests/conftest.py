import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("regulus", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("regulus")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one summary line per acceptance criterion ------------------------------------

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    n, title = marker
    entry = _criteria.setdefault(n, {"title": title, "ok": True, "seconds": 0.0})
    entry["seconds"] += report.duration
    if report.failed:
        entry["ok"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if e['ok'] else 'FAIL'}  {e['title']}  "
                                    f"({e['seconds']:.1f} s)")
