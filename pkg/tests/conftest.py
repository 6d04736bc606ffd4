import sys
from collections import OrderedDict
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_criteria: "OrderedDict[int, dict]" = OrderedDict()


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="also run long, non-gating checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow, non-gating (use --runslow)")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        entry = _criteria.setdefault(number, {"title": title, "results": []})
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        entry["results"].append((item.name, status))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        statuses = {s for _, s in entry["results"]}
        if "FAIL" in statuses:
            overall = "FAIL"
        elif statuses == {"SKIP"}:
            overall = "SKIP"
        else:
            overall = "PASS"
        detail = ""
        if len(entry["results"]) > 1 or overall != "PASS":
            detail = "  [" + ", ".join(f"{n}={s}" for n, s in entry["results"]) + "]"
        tr.write_line(f"criterion {number:2d} {overall}: {entry['title']}{detail}")
