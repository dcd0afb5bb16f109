import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store a pass/fail line for an acceptance criterion."""

    def _record(key: str, ok: bool, detail: str):
        ACCEPTANCE[key] = (bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.lstrip("C"))):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:>4} {'PASS' if ok else 'FAIL'}  {detail}")
