import pytest

# Filled by tests/test_acceptance.py; echoed after the run so the lines survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def verdict():
    """Record one PASS/FAIL/SKIP line per criterion and fail the test on FAIL."""

    def record(number: int, ok, detail: str):
        # ok: True, False, None (skipped) or "n/a" (not an acceptance target)
        status = {True: "PASS", False: "FAIL", None: "SKIP", "n/a": "N/A"}[ok]
        line = f"[{status}] criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        if ok is False:
            pytest.fail(line, pytrace=False)
        if ok is None:
            pytest.skip(line)

    return record
