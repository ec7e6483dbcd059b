import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store one acceptance line: record(number, passed, text)."""

    def _rec(num, passed, text):
        ACCEPTANCE[num] = (bool(passed), text)
        print(f"criterion {num}: {'PASS' if passed else 'FAIL'}  {text}")

    return _rec


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {text}")
