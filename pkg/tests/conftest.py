import pathlib

import pytest
from hypothesis import settings

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")


@pytest.fixture
def corpus():
    return CORPUS


def read(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    def record(n: int, ok: bool, detail: str = ""):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
