import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def criterion_log():
    """Record the one-line verdict of an acceptance criterion."""

    def log(k: int, ok: bool, detail: str) -> None:
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[k] = line
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_LINES):
        terminalreporter.write_line(_LINES[k])
