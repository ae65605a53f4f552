import pytest

_LINES = {}


@pytest.fixture(scope="session")
def record():
    """``record(n, ok, detail)`` stores one acceptance line and returns ``ok``."""
    def _record(n, ok, detail):
        _LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_LINES[n])
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
