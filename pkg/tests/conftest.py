import pytest

ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    status = "PASS" if report.passed else "FAIL"
    ACCEPTANCE_LINES[crit] = f"{status}  criterion {crit}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def criterion(record_property):
    def tag(label):
        record_property("criterion", label)

    return tag
