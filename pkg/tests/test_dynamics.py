import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flipping_rotators import Medium, MediumSpec, SimState, reverse_step, run, simulate, step
from flipping_rotators.dynamics import CAP_REACHED, HALTED, PERIODIC, TrajectoryLog
from flipping_rotators.lattice import ORIGIN, SiteCoord, key_site, neighbor, norm_sq, site_key
from flipping_rotators.medium import LEFT, RIGHT, initial_orientation

SQ3_2 = math.sqrt(3.0) / 2.0


def vector_oracle(spec, steps):
    """Positions from plain 2-d vectors and rotation matrices.

    Sites are recovered from coordinates, scatterer states live in a dict,
    and none of the package's neighbour or rotation tables is used.
    """
    x, y = 0.0, 0.0
    vx, vy = 1.0, 0.0
    state = {}
    out = [(0, 0, 0)]
    c, s = 0.5, SQ3_2
    for _ in range(steps):
        x, y = x + vx, y + vy
        sub = 0 if abs(x / 1.5 - round(x / 1.5)) < 1e-6 else 1
        apb = round((x - sub) / 1.5)
        amb = round(y / SQ3_2)
        a, b = (apb + amb) // 2, (apb - amb) // 2
        x, y = 1.5 * apb + sub, SQ3_2 * amb
        site = SiteCoord(a, b, sub)
        o = state.get(site)
        if o is None:
            o = initial_orientation(spec, site)
        if o == RIGHT:
            vx, vy = c * vx + s * vy, -s * vx + c * vy
        else:
            vx, vy = c * vx - s * vy, s * vx + c * vy
        state[site] = -o
        out.append((a, b, sub))
    return out


@pytest.mark.parametrize("spec", [
    MediumSpec.iid(0.5, 7),
    MediumSpec.iid(0.2, 3),
    MediumSpec.admissible(0.5, 1),
    MediumSpec.example5(0.3, 2),
    MediumSpec.homogeneous(LEFT),
], ids=["iid-half", "iid-low", "admissible", "family", "all-left"])
def test_python_and_compiled_steppers_match_vector_oracle(spec):
    n = 3000
    expected = vector_oracle(spec, n)
    log = TrajectoryLog()
    res = run(Medium(spec), n, observers=[log])
    # run() stops at the first exact recurrence
    assert len(log.sites) == n + 1 or res.kind == PERIODIC
    assert [tuple(s) for s in log.sites] == expected[:len(log.sites)]
    fast = simulate(spec, n, log=True, stop_on_period=False)
    assert [tuple(key_site(int(k))) for k in fast.log] == expected


def test_first_step_goes_to_b00():
    for spec in (MediumSpec.iid(0.5, 1), MediumSpec.homogeneous(RIGHT)):
        st_ = step(SimState(), Medium(spec))
        assert st_.site == SiteCoord(0, 0, 1) and st_.time == 1


def test_state_parity_is_validated():
    with pytest.raises(ValueError):
        SimState(ORIGIN, 1)


@settings(max_examples=60)
@given(st.integers(0, 2**63), st.floats(0.0, 1.0), st.integers(1, 400))
def test_reverse_step_inverts_step(seed, p, n):
    spec = MediumSpec.iid(p, seed)
    m = Medium(spec)
    state = SimState()
    for _ in range(n):
        state = step(state, m)
    for _ in range(n):
        state = reverse_step(state, m)
    assert state == SimState()
    assert m.dirty_count == 0 and m.visits == {}


def test_reverse_from_arbitrary_state():
    rng = random.Random(5)
    m = Medium(MediumSpec.iid(0.5, 99))
    for _ in range(200):
        m.record_visit(SiteCoord(rng.randint(-5, 5), rng.randint(-5, 5), rng.randint(0, 1)))
    start = SimState(SiteCoord(2, -1, 1), 3, 17)
    before = (dict(m.visits), set(m.flipped))
    s = start
    for _ in range(50):
        s = step(s, m)
    for _ in range(50):
        s = reverse_step(s, m)
    assert s == start and (m.visits, m.flipped) == before


def test_periodic_run_agrees_between_engines():
    spec = MediumSpec.iid(0.5, 7)
    slow = run(Medium(spec), 100_000)
    fast = simulate(spec, 100_000)
    assert slow.kind == fast.kind == PERIODIC
    assert slow.period == fast.period == 17820
    assert slow.origin_returns == fast.origin_returns.tolist()
    assert slow.max_displacement_sq == pytest.approx(fast.max_displacement_sq)


def test_period_is_an_exact_recurrence():
    spec = MediumSpec.iid(0.5, 7)
    first = simulate(spec, 10**6)
    replay = simulate(spec, 2 * first.period, log=True, stop_on_period=False)
    tp = first.period
    assert np.array_equal(replay.log[:tp], replay.log[tp:2 * tp])
    assert replay.final_key == site_key(ORIGIN) and replay.final_dir == 0
    assert replay.final_dirty == 0
    # no earlier exact recurrence
    early = simulate(spec, tp - 1)
    assert early.kind == CAP_REACHED


def test_all_left_medium_is_not_periodic_at_twelve():
    res = run(Medium(MediumSpec.homogeneous(LEFT)), 100)
    assert res.kind == CAP_REACHED
    assert res.origin_returns[0] == 6
    fast = simulate(MediumSpec.homogeneous(LEFT), 100)
    assert fast.kind == CAP_REACHED and fast.origin_returns.tolist() == res.origin_returns


def test_observer_can_halt():
    seen = []

    def obs(site, t):
        seen.append(t)
        return t == 10

    res = run(Medium(MediumSpec.iid(0.5, 1)), 1000, observers=[obs])
    assert res.kind == HALTED and res.steps == 10 and seen == list(range(11))


def test_msd_samples_are_exact_squared_distances():
    spec = MediumSpec.iid(0.5, 12)
    times = [0, 1, 2, 50, 999]
    res = simulate(spec, 1000, log=True, stop_on_period=False, sample_times=times)
    for t, v in zip(times, res.samples):
        assert v == pytest.approx(norm_sq(key_site(int(res.log[t]))))
    assert res.samples[0] == 0 and res.samples[1] == 1


def test_invalid_caps_rejected():
    with pytest.raises(ValueError):
        simulate(MediumSpec.iid(0.5), 0)
    with pytest.raises(ValueError):
        run(Medium(MediumSpec.iid(0.5)), 0)
    with pytest.raises(ValueError):
        simulate(MediumSpec.iid(0.5), 10, sample_times=[5, 2])


def test_neighbor_used_by_reverse_is_consistent():
    s = SiteCoord(3, 4, 1)
    assert neighbor(neighbor(s, 1), 4) == s
