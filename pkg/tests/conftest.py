from collections import defaultdict

import pytest

CRITERIA = {
    1: "energy identity and 4th-order residual decay",
    2: "Godunov reference vs exact Riemann solution",
    3: "singular limit: L1/L2 errors decrease, finest <= 1/3 coarsest",
    4: "uniform-bound monitors within 2x coarsest",
    5: "L-infinity scaling within 2x coarsest",
    6: "entropy inequality residual",
    7: "admissible constants feasibility",
    8: "initial-data admissibility across the sweep",
    9: "infrastructure round-trips and determinism",
}

_outcomes = defaultdict(dict)
_notes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    rep.criterion = marker.args[0] if marker else None


def pytest_runtest_logreport(report):
    n = getattr(report, "criterion", None)
    if n is None:
        return
    prev = _outcomes[n].get(report.nodeid, "passed")
    if report.failed:
        _outcomes[n][report.nodeid] = "failed"
    elif report.when == "call":
        _outcomes[n][report.nodeid] = "failed" if prev == "failed" else report.outcome


@pytest.fixture
def note(request):
    """Attach a measured value to the criterion summary line."""
    marker = request.node.get_closest_marker("criterion")

    def add(text):
        if marker:
            _notes[marker.args[0]].append(text)
    return add


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        res = _outcomes.get(n)
        if not res:
            tr.write_line(f"criterion {n}: NOT RUN  {title}")
            continue
        failed = sum(1 for v in res.values() if v == "failed")
        verdict = "FAIL" if failed else "PASS"
        extra = f" ({failed}/{len(res)} checks failed)" if failed else f" ({len(res)} checks)"
        tr.write_line(f"criterion {n}: {verdict}  {title}{extra}")
        for text in _notes.get(n, []):
            tr.write_line(f"    {text}")
