import pytest

from photonoc.kernel import Simulator

from helpers import ACCEPTANCE

TITLES = {
    1: "bandwidth ceilings and 1 M-request runtime",
    2: "hotspot bottleneck",
    3: "zero-load latency formulas",
    4: "arbitration properties",
    5: "mesh statistics",
    6: "power reproduction",
    7: "inventory reproduction",
    8: "configuration ordering",
    9: "bursty latency effect (substitute for trace geomeans)",
    10: "determinism",
}


@pytest.fixture
def sim():
    return Simulator()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[n]
        ok = all(p for _, p, _ in checks)
        failed = [c for c, p, _ in checks if not p]
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {TITLES.get(n, '')}"
        if failed:
            line += f"  (failing: {', '.join(failed)})"
        tr.write_line(line)
    for n in sorted(ACCEPTANCE):
        for check, passed, detail in ACCEPTANCE[n]:
            tr.write_line(f"  {n:2d}.{'ok ' if passed else 'BAD'} {check}: {detail}")
