import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_criteria: dict[int, tuple[str, str]] = {}
_notes: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    failed = report.failed
    if report.when == "setup" and failed or report.when == "call":
        prev = _criteria.get(n, (title, "PASS"))[1]
        _criteria[n] = (title, "FAIL" if failed or prev == "FAIL" else "PASS")


@pytest.fixture
def note(request):
    """Attach a measured value to the running criterion's summary line."""
    marker = request.node.get_closest_marker("criterion")

    def add(text: str) -> None:
        _notes.setdefault(marker.args[0], []).append(text)

    return add


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, status = _criteria[n]
        detail = "; ".join(_notes.get(n, []))
        terminalreporter.write_line(f"criterion {n}: {status}  {title}" + (f"  [{detail}]" if detail else ""))
