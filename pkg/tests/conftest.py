import pytest

# filled by test_acceptance, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion, even when its asserts fail."""
    import time

    class Recorder:
        def __init__(self):
            self.start = time.perf_counter()
            self.number = None
            self.detail = ""

        def __call__(self, number, detail=""):
            self.number, self.detail = number, detail

        def passed(self, detail=""):
            elapsed = time.perf_counter() - self.start
            ACCEPTANCE_LINES[self.number] = f"PASS criterion {self.number}: {detail} ({elapsed:.2f}s)"

    rec = Recorder()
    yield rec
    if rec.number is not None and rec.number not in ACCEPTANCE_LINES:
        ACCEPTANCE_LINES[rec.number] = f"FAIL criterion {rec.number}: {rec.detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
