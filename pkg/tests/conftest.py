import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("eik", max_examples=60, deadline=None)
settings.load_profile("eik")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion")


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, name = mark.args
    failed = rep.failed or (rep.when == "call" and rep.skipped)
    _, status, details = _CRITERIA.get(number, (name, "PASS", {}))
    if failed:
        status = "FAIL"
    if item.user_properties:
        details[item.nodeid] = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _CRITERIA[number] = (name, status, details)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, status, details = _CRITERIA[number]
        line = f"criterion {number:2d} {name}: {status}"
        terminalreporter.write_line(f"{line}  [{' | '.join(details.values())}]" if details else line)
