"""Return-time statistics for an epsilon-ball around one orbit point.

The ball is row ``i`` of a recurrence matrix.  Consecutive recurrences
(the orbit lingering inside the ball) are merged into a single visit before
any gap is measured.

Every operation accepts either a :class:`RecurrenceMatrix` or a plain 1-D
boolean row; the latter lets long series be analysed without building an
N x N matrix (see :func:`ball_row`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import InputError, InsufficientDataError, Metric, RecurrenceMatrix, format_report
from .core import distances_from_diff
from .recmat import _points

MIN_SAMPLE = 50
MIN_WINDOWS = 30


@dataclass
class ReturnTimeSample:
    reference_index: int
    epsilon: float
    times: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def to_csv(self) -> str:
        return "".join(f"{int(t)}\n" for t in self.times)


@dataclass
class TestReport:
    test: str
    statistic: float
    p_value: float
    n: int
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        return format_report({"test": self.test, "n": self.n, "statistic": self.statistic,
                              "p_value": self.p_value, **self.extra})


def _row(R, i: int) -> tuple[np.ndarray, float]:
    if isinstance(R, RecurrenceMatrix):
        if not 0 <= i < R.n:
            raise InputError(f"index {i} out of range for N={R.n}")
        return R.bits[i], R.epsilon
    row = np.asarray(R, dtype=bool)
    if row.ndim != 1 or not 0 <= i < row.size:
        raise InputError(f"index {i} out of range for a row of length {row.size}")
    return row, float("nan")


def ball_row(traj, i: int, measure: float, metric: Metric | str = Metric.EUCLIDEAN) -> tuple[np.ndarray, float]:
    """Row ``i`` at the radius that captures a fraction ``measure`` of the
    other samples, and that radius.  The radius sits midway between two
    consecutive distances from point ``i``."""
    pts = _points(traj)
    n = pts.shape[0]
    if not 0 <= i < n:
        raise InputError(f"index {i} out of range for N={n}")
    if not 0 < measure < 1:
        raise InputError("measure must lie in (0, 1)")
    d = distances_from_diff(pts[i][None, :] - pts, Metric.parse(metric))
    others = np.sort(np.delete(d, i))
    k = max(1, min(int(round(measure * (n - 1))), n - 2))
    eps = 0.5 * (others[k - 1] + others[k])
    if not eps > 0:
        raise InputError("ball radius collapsed to zero (repeated points)")
    return d < eps, float(eps)


def visit_starts(row: np.ndarray) -> np.ndarray:
    """Indices where a run of consecutive recurrences begins."""
    row = np.asarray(row, dtype=bool)
    prev = np.concatenate(([False], row[:-1]))
    return np.flatnonzero(row & ~prev)


def first_return_time(R, i: int) -> int | None:
    row, _ = _row(R, i)
    later = np.flatnonzero(row[i + 1:])
    return int(later[0]) + 1 if later.size else None


def return_times(R, i: int) -> ReturnTimeSample:
    """Gaps between successive visit starts from time ``i`` onward.

    >>> return_times(np.array([1, 1, 0, 0, 1, 0, 1], bool), 0).times.tolist()
    [4, 2]
    """
    row, eps = _row(R, i)
    starts = visit_starts(row[i:])
    return ReturnTimeSample(i, eps, np.diff(starts))


def _require(n: int, what: str) -> None:
    if n < MIN_SAMPLE:
        raise InsufficientDataError(f"{what} needs at least {MIN_SAMPLE} return times, got {n}")


def test_exponential(sample: ReturnTimeSample, seed: int = 0) -> TestReport:
    """KS test of normalized return times against the unit exponential.

    Times are integers, so each is first spread uniformly over the unit step
    below it (``t - U(0, 1)``, seeded); otherwise the lattice alone rejects
    exponentiality once the sample is large compared with the mean time.
    """
    t = np.asarray(sample.times, dtype=float)
    _require(t.size, "exponential test")
    mean = float(t.mean())
    x = t - np.random.default_rng(seed).uniform(size=t.size)
    res = stats.kstest(x / x.mean(), "expon", method="asymp")
    return TestReport("exponential_ks", float(res.statistic), float(res.pvalue), t.size,
                      {"mean": mean})


def test_independence(sample: ReturnTimeSample, n_shuffles: int = 1000, seed: int = 0) -> TestReport:
    """Lag-1 autocorrelation with a two-sided permutation p-value."""
    t = np.asarray(sample.times, dtype=float)
    _require(t.size, "independence test")
    if np.ptp(t) == 0:
        return TestReport("lag1_permutation", float("nan"), float("nan"), t.size,
                          {"status": "insufficient_variance"})

    def lag1(v):
        return float(np.corrcoef(v[:-1], v[1:])[0, 1])

    r = lag1(t)
    rng = np.random.default_rng(seed)
    hits = sum(abs(lag1(rng.permutation(t))) >= abs(r) for _ in range(n_shuffles))
    return TestReport("lag1_permutation", r, (hits + 1) / (n_shuffles + 1), t.size,
                      {"status": "ok", "autocorrelation": r})


def test_poisson_counts(R, i: int, window: int) -> TestReport:
    """Visit counts per disjoint window versus Poisson(empirical mean).

    ``statistic`` is the variance/mean dispersion index; the p-value comes
    from a chi-square goodness-of-fit test with tail bins pooled until every
    expected frequency is at least 5.
    """
    row, _ = _row(R, i)
    if window < 1:
        raise InputError("window must be positive")
    n_win = row.size // window
    if n_win < MIN_WINDOWS:
        raise InsufficientDataError(f"only {n_win} windows of length {window}; need {MIN_WINDOWS}")
    starts = visit_starts(row[: n_win * window])
    counts = np.bincount(starts // window, minlength=n_win)
    mean = float(counts.mean())
    if mean == 0:
        raise InsufficientDataError("no visits to the ball: Poisson mean is zero")
    dispersion = float(counts.var(ddof=1) / mean)

    kmax = int(counts.max())
    probs = stats.poisson.pmf(np.arange(kmax + 1), mean)
    probs[-1] += stats.poisson.sf(kmax, mean)
    observed = np.bincount(counts, minlength=kmax + 1).astype(float)
    expected = probs * n_win
    obs_bins, exp_bins = _pool(observed, expected)
    if len(obs_bins) >= 3:
        p = float(stats.chisquare(obs_bins, exp_bins, ddof=1).pvalue)
    else:
        p = float("nan")
    return TestReport("poisson_counts", dispersion, p, n_win,
                      {"mean": mean, "windows": n_win, "bins": len(obs_bins)})


def _pool(observed: np.ndarray, expected: np.ndarray, floor: float = 5.0):
    """Merge adjacent bins (left to right, then the tail) until each expected
    count reaches ``floor``."""
    obs, exp = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= floor:
            obs.append(o_acc)
            exp.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp:
            obs[-1] += o_acc
            exp[-1] += e_acc
        else:
            obs.append(o_acc)
            exp.append(e_acc)
    exp = np.array(exp)
    obs = np.array(obs)
    exp *= obs.sum() / exp.sum()
    return obs, exp


# keep pytest from collecting these when imported into test modules
for _obj in (TestReport, test_exponential, test_independence, test_poisson_counts):
    _obj.__test__ = False
