import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion(request):
    """Print and collect one pass/fail line per acceptance criterion."""
    def record(number: int, passed: bool, detail: str, elapsed: float, limit: float) -> bool:
        ok = passed and elapsed <= limit
        line = (f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}  "
                f"[{elapsed:.1f}s, limit {limit:g}s]")
        print(line)
        request.config.stash[ACCEPTANCE_LINES].append(line)
        return ok
    return record
