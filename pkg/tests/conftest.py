import shutil

import pytest

from groupsent.synthetic import bundled_corpus_dir

_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        if report.when == "setup" and report.outcome == "passed":
            return
        outcome = "xfailed" if hasattr(report, "wasxfail") else report.outcome
        _acceptance.append((name, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        tag = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP", "xfailed": "XFAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{tag:5s} {name}")


@pytest.fixture
def corpus(tmp_path):
    """A private copy of the bundled synthetic corpus."""
    dst = tmp_path / "corpus"
    shutil.copytree(bundled_corpus_dir(), dst)
    return dst
