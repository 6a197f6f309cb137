import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recurrence_recon import stats as rs
from recurrence_recon.core import InsufficientDataError, Trajectory
from recurrence_recon.recmat import build_matrix


def row_from_times(times, lead=0):
    """Row whose visit starts are separated by ``times`` (single-sample visits)."""
    starts = np.concatenate(([0], np.cumsum(times))) + lead
    row = np.zeros(starts[-1] + 1, dtype=bool)
    row[starts] = True
    return row


def test_visit_rule_hand_trace():
    row = np.array([1, 1, 0, 0, 1, 0, 1], bool)
    assert rs.return_times(row, 0).times.tolist() == [4, 2]
    # same bits after a prefix: only entries from i onward count
    row2 = np.concatenate(([1, 0, 1], row))
    assert rs.return_times(row2, 3).times.tolist() == [4, 2]


def test_period_three_orbit():
    R = build_matrix(Trajectory(np.tile([0.1, 0.5, 0.9], 10)), 0.05)
    for i in range(27):
        assert rs.first_return_time(R, i) == 3
    assert set(rs.return_times(R, 0).times.tolist()) == {3}


def test_constant_trajectory():
    R = build_matrix(Trajectory(np.zeros(5)), 1.0)
    assert rs.first_return_time(R, 0) == 1


def test_window_exhaustion():
    R = build_matrix(Trajectory([0.0, 0.5, 1.0, 1.5]), 0.1)
    assert rs.first_return_time(R, 3) is None
    assert len(rs.return_times(R, 3)) == 0


@settings(max_examples=60, deadline=None)
@given(bits=st.lists(st.booleans(), min_size=2, max_size=60), i=st.integers(0, 58))
def test_first_return_consistency(bits, i):
    row = np.array(bits)
    i = min(i, row.size - 1)
    row[i] = True
    first = rs.first_return_time(row, i)
    times = rs.return_times(row, i).times
    if i + 1 < row.size and row[i + 1]:
        assert first == 1  # orbit still inside the ball
    elif times.size:
        assert first == times[0]
    else:
        assert first is None


@settings(max_examples=60, deadline=None)
@given(bits=st.lists(st.booleans(), min_size=3, max_size=60), data=st.data())
def test_extending_a_visit_keeps_the_sample(bits, data):
    row = np.array(bits)
    row[0] = True
    before = rs.return_times(row, 0).times
    # positions right after a visit and not touching the next one
    ends = [p for p in range(1, row.size - 1) if row[p - 1] and not row[p] and not row[p + 1]]
    if not ends:
        return
    p = data.draw(st.sampled_from(ends))
    row[p] = True
    assert np.array_equal(rs.return_times(row, 0).times, before)


def test_exponential_accepts_geometric_times():
    g = np.random.default_rng(0).geometric(0.05, 5000)
    rep = rs.test_exponential(rs.ReturnTimeSample(0, 1.0, g))
    assert rep.p_value > 0.01
    assert rep.extra["mean"] == pytest.approx(20, rel=0.05)


def test_exponential_rejects_constant_times():
    rep = rs.test_exponential(rs.ReturnTimeSample(0, 1.0, np.full(200, 7)))
    assert rep.p_value < 1e-6


def test_exponential_needs_data():
    with pytest.raises(InsufficientDataError):
        rs.test_exponential(rs.ReturnTimeSample(0, 1.0, np.arange(1, 20)))


def test_independence_iid():
    t = np.random.default_rng(1).geometric(0.1, 400)
    rep = rs.test_independence(rs.ReturnTimeSample(0, 1.0, t), seed=1)
    assert abs(rep.statistic) < 0.15 and rep.p_value > 0.01


def test_independence_alternating():
    t = np.tile([2, 9], 50)
    rep = rs.test_independence(rs.ReturnTimeSample(0, 1.0, t))
    assert rep.statistic < -0.9 and rep.p_value < 0.01


def test_independence_constant_branch():
    rep = rs.test_independence(rs.ReturnTimeSample(0, 1.0, np.full(60, 5)))
    assert rep.extra["status"] == "insufficient_variance"
    assert np.isnan(rep.statistic)


def test_seed_determinism():
    t = np.random.default_rng(3).geometric(0.05, 300)
    s = rs.ReturnTimeSample(0, 1.0, t)
    assert rs.test_independence(s, seed=9).p_value == rs.test_independence(s, seed=9).p_value
    assert rs.test_exponential(s, seed=9).p_value == rs.test_exponential(s, seed=9).p_value


def test_poisson_counts_synthetic():
    row = np.random.default_rng(5).random(100_000) < 0.01
    rep = rs.test_poisson_counts(row, 0, 500)
    assert 0.8 < rep.statistic < 1.2 and rep.p_value > 0.01


def test_poisson_counts_periodic():
    row = np.zeros(20_000, bool)
    row[::10] = True
    rep = rs.test_poisson_counts(row, 0, 50)
    assert rep.statistic == pytest.approx(0.0) and rep.p_value < 1e-6


def test_poisson_counts_errors():
    with pytest.raises(InsufficientDataError, match="mean is zero"):
        rs.test_poisson_counts(np.zeros(1000, bool), 0, 10)
    with pytest.raises(InsufficientDataError, match="windows"):
        rs.test_poisson_counts(np.ones(100, bool), 0, 10)


def test_ball_row_measure(rng):
    pts = rng.uniform(size=(2001, 1))
    row, eps = rs.ball_row(pts, 100, 0.01)
    assert row[100] and np.count_nonzero(row) - 1 == 20


def test_sample_csv():
    assert rs.ReturnTimeSample(0, 1.0, np.array([4, 2])).to_csv() == "4\n2\n"
