import pytest

from memdse.technology import default_tech


@pytest.fixture(autouse=True)
def _bundled_tech(monkeypatch):
    # every test sees the shipped library unless it sets MEMDSE_TECH itself
    monkeypatch.delenv("MEMDSE_TECH", raising=False)


@pytest.fixture
def tech():
    return default_tech()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
