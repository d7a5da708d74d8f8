import pytest
from hypothesis import settings

from flipping_rotators import MediumSpec
from flipping_rotators.engine import simulate
from flipping_rotators.structures import analyze

# the first call of a compiled kernel pays for JIT compilation
settings.register_profile("repo", deadline=None)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def analyzed_run(spec, cap):
    """Simulate, analyze, and enforce the at-most-two-live-reflectors bound."""
    res = simulate(spec, cap, log=True)
    an = analyze(res.log)
    an.finish(res.kind, res.period)
    assert an.max_live <= 2
    return res, an


@pytest.fixture(scope="session")
def iid_half_runs():
    """Twelve IID(0.5) realizations with their analyzers and a two-period log."""
    out = []
    for seed in range(12):
        spec = MediumSpec.iid(0.5, seed)
        res, an = analyzed_run(spec, 2_000_000)
        assert res.periodic
        long = simulate(spec, 2 * res.period + 10, log=True, stop_on_period=False)
        out.append((seed, res, an, long.log.tolist()))
    return out
