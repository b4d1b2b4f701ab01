import pytest

from factorlp.circuit import normalize
from factorlp.generators import dwc_example_relation, example_circuit, example_relation, projects_database

_acceptance = {}


@pytest.fixture
def sample_circuit():
    return example_circuit()


@pytest.fixture
def sample_normalized():
    return normalize(example_circuit())


@pytest.fixture
def sample_relation():
    return example_relation()


@pytest.fixture
def dwc_relation():
    return dwc_example_relation()


@pytest.fixture
def projects_db():
    return projects_database()


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" in report.nodeid and report.when == "call":
        _acceptance[report.nodeid] = report.passed
    elif "test_acceptance.py::test_criterion_" in report.nodeid and report.failed:
        _acceptance[report.nodeid] = False


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance):
        name = nodeid.split("::test_criterion_")[1]
        number, _, label = name.partition("_")
        verdict = "PASS" if _acceptance[nodeid] else "FAIL"
        terminalreporter.write_line(f"criterion {int(number):2d} {label.replace('_', ' ')}: {verdict}")
