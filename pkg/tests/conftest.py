import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; they are echoed in the terminal summary."""

    def add(label, ok, seconds, detail=""):
        line = f"{label}: {'PASS' if ok else 'FAIL'} ({seconds:.2f} s) {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
