"""Shared preset runs and the per-criterion acceptance report."""

from collections import OrderedDict
from functools import lru_cache

import pytest

from adiabatica.pipeline import execute
from adiabatica.scenario import preset


@lru_cache(maxsize=None)
def preset_run(name, T=None):
    return execute(preset(name).with_overrides(T=T))


@pytest.fixture(scope="session")
def run():
    return preset_run


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = OrderedDict()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    number, title = mark.args
    entry = item.config._criteria.setdefault(number, {"title": title, "ok": True, "notes": []})
    entry["ok"] &= rep.passed
    notes = [f"{k}={v}" for k, v in item.user_properties]
    if not rep.passed:
        notes.append(f"{item.name} failed")
    entry["notes"].extend(notes)


def pytest_terminal_summary(terminalreporter, config):
    criteria = getattr(config, "_criteria", {})
    if not criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(criteria):
        e = criteria[number]
        status = "PASS" if e["ok"] else "FAIL"
        tr.write_line(f"C{number:<2} {status}  {e['title']}: {'; '.join(e['notes'])}")
