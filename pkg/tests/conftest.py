import mpmath
import pytest

mpmath.mp.dps = 40

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def mp_phi():
    """High-precision Phi, independent of the package's erf path."""
    return lambda x: float(mpmath.ncdf(mpmath.mpf(x)))


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def report(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
