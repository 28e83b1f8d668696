from __future__ import annotations

import pytest

from solar3d.sim import SimConfig

# criterion id -> list of (part, passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict[str, list[tuple[str, bool, str]]] = {}


def record(criterion: str, part: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    return bool(passed)


@pytest.fixture(scope="session")
def coarse_cfg() -> SimConfig:
    """Half-hour steps and 1 m^2 sub-cells: fast enough for per-test simulation."""
    return SimConfig(step_minutes=30.0, subcell_area=1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=int):
        parts = ACCEPTANCE[crit]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name}: {'pass' if p else 'FAIL'} ({d})" for name, p, d in parts)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} | {detail}")
