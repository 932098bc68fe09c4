from pathlib import Path

import pytest

from unisynth.machines import read_mm

EXAMPLE_PLANT = """\
mm role=plant
inputs: o_c o_e
outputs: o_p
init: s0
state s0 {o_p}
  !o_e -> s1
  else -> s0
state s1 {}
  o_e -> s0
  else -> s1
"""

_criteria: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion this test checks")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = getattr(report, "criterion", None)
    if label is None:
        return
    if report.passed:
        outcome = "PASS"
    elif report.skipped and hasattr(report, "wasxfail"):
        outcome = "FAIL (expected, see notes)"
    elif report.skipped:
        outcome = "SKIP"
    else:
        outcome = "FAIL"
    _criteria.setdefault(label, []).append((report.nodeid.split("::")[-1], outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: (int(s.split()[0]), s)):
        for name, outcome in _criteria[label]:
            terminalreporter.write_line(f"criterion {label:<34s} {outcome:<28s} {name}")


@pytest.fixture
def example_plant():
    return read_mm(EXAMPLE_PLANT)


@pytest.fixture
def tmp_files(tmp_path: Path):
    def write(name: str, text: str) -> str:
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write
