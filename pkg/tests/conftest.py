import numpy as np
import pytest

from circledomain import fixtures, validate_domain


@pytest.fixture
def disk_pair():
    return validate_domain(fixtures.disk_pair())


@pytest.fixture
def two_squares():
    return validate_domain(fixtures.two_squares())


@pytest.fixture
def rings():
    return validate_domain(fixtures.rings())


def circle(center, radius, n=720):
    return center + radius * np.exp(2j * np.pi * np.arange(n) / n)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Report an acceptance criterion: one summary line, then assert it."""

    def _record(number: int, title: str, checks: dict, seconds: float, limit: float | None = None, detail: str = ""):
        checks = dict(checks)
        if limit is not None:
            checks[f"runtime {seconds:.1f}s < {limit:g}s"] = seconds < limit
        failed = [name for name, ok in checks.items() if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"criterion {number:>2} {status}  {title} ({seconds:.1f}s)"
        if detail:
            line += f"  {detail}"
        if failed:
            line += "  failed: " + "; ".join(failed)
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert not failed, line

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
