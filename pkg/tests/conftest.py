import pytest

ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def record_criterion():
    """Store one PASS/FAIL line per acceptance criterion for the summary."""
    def record(key: str, ok: bool, detail: str) -> bool:
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[key] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=int):
            terminalreporter.write_line(ACCEPTANCE[key])
