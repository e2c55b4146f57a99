import pytest

from litmap.synthetic import SA_ROOT, labelled_corpus, se_taxonomy
from litmap.taxonomy import subbranch

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} ({detail})"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def se_tax():
    return se_taxonomy()


@pytest.fixture(scope="session")
def sa_tax(se_tax):
    return subbranch(se_tax, SA_ROOT)


@pytest.fixture(scope="session")
def gold_fixture(sa_tax):
    return labelled_corpus(sa_tax, 100, seed=11)
