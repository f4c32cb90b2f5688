from __future__ import annotations

import pytest

from pgmt import coarea, flow, track
from pgmt.suites import default_curves

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    """Print (and keep for the summary) one PASS/FAIL line per criterion."""
    def rec(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok
    return rec


@pytest.fixture(scope="session")
def histories() -> dict[str, flow.FlowHistory]:
    opts = flow.FlowOptions()
    return {label: flow.run_to_extinction(flow.make_curve(spec, opts.n_vertices), opts, label)
            for label, spec in default_curves(0)}


@pytest.fixture(scope="session")
def circle_history(histories) -> flow.FlowHistory:
    return histories["circle"]


@pytest.fixture(scope="session")
def circle_track(tracks) -> track.SpaceTimeTrack:
    return tracks["circle"]


@pytest.fixture(scope="session")
def calibration_k1() -> coarea.Calibration:
    return coarea.calibrate_c1(1)


@pytest.fixture(scope="session")
def tracks(histories) -> dict[str, track.SpaceTimeTrack]:
    return {label: track.build_track(h) for label, h in histories.items()}
