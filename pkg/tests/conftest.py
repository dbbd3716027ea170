import pytest

from skipflow import load_corpus, parse_program


@pytest.fixture(scope="session")
def jdk():
    return load_corpus("jdk_onexit")


@pytest.fixture(scope="session")
def sunflow():
    return load_corpus("sunflow_display")


@pytest.fixture(scope="session")
def loop_corpus():
    return load_corpus("loop_counter")


def prog(text, check=True):
    return parse_program(text, check=check)


# -- acceptance report: one PASS/FAIL line per criterion ----------------------

_criteria: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.rsplit("::", 1)[-1]
        _criteria[name] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _criteria.items():
        terminalreporter.write_line(f"{verdict}  {name}")
