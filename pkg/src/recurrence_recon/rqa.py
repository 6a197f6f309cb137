"""Recurrence-based invariants: recurrence rate, diagonal line statistics,
order-2 Renyi entropy (K2) and the correlation sum / D2."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .core import InsufficientDataError, InputError, Metric, RecurrenceMatrix, Trajectory
from .core import distances_from_diff
from .recmat import count_recurrent_pairs, off_diagonal_rate

MIN_SEGMENTS = 100


@dataclass
class DiagonalHistogram:
    counts: dict[int, int]
    epsilon: float
    n: int

    def to_csv(self) -> str:
        return "".join(f"{k},{v}\n" for k, v in sorted(self.counts.items()))


@dataclass
class K2Fit:
    k2: float
    intercept: float
    residual: float
    lengths: np.ndarray
    p_cum: np.ndarray
    n_segments: int


def recurrence_rate(R: RecurrenceMatrix) -> float:
    return off_diagonal_rate(R.bits)


def run_lengths(b: np.ndarray) -> np.ndarray:
    """Lengths of maximal runs of True in a 1-D boolean array."""
    padded = np.concatenate(([0], np.asarray(b, dtype=np.int8), [0]))
    edges = np.diff(padded)
    return np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)


def diagonal_histogram(R: RecurrenceMatrix, lmin: int = 1) -> DiagonalHistogram:
    """Maximal diagonal segments off the line of identity, both triangles."""
    if lmin < 1:
        raise InputError("lmin must be >= 1")
    counts: Counter = Counter()
    for k in range(1, R.n):
        runs = run_lengths(np.diagonal(R.bits, k))
        runs = runs[runs >= lmin]
        if runs.size:
            ls, cs = np.unique(runs, return_counts=True)
            for length, c in zip(ls.tolist(), cs.tolist()):
                counts[length] += 2 * c
    return DiagonalHistogram(dict(sorted(counts.items())), R.epsilon, R.n)


def _diagonal_runs(pts: np.ndarray, epsilon: float, metric: Metric) -> np.ndarray:
    """Histogram (index = length) of upper-triangle segments, streamed over
    diagonals so no N x N matrix is formed."""
    n = pts.shape[0]
    hist = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, n):
        b = distances_from_diff(pts[k:] - pts[:-k], metric) < epsilon
        if b.any():
            hist += np.bincount(run_lengths(b), minlength=n + 1)
    return hist


def k2_fit(traj: Trajectory, epsilon: float, metric: Metric | str = Metric.EUCLIDEAN,
           lrange: tuple[int, int] = (2, 12)) -> K2Fit:
    lo, hi = lrange
    if not 1 <= lo < hi:
        raise InputError(f"bad length range {lrange}")
    metric = Metric.parse(metric)
    hist = _diagonal_runs(traj.points, float(epsilon), metric)
    total = int(hist.sum())
    cum = np.cumsum(hist[::-1])[::-1]  # cum[l] = #segments with length >= l
    lengths = np.arange(lo, hi + 1)
    at = cum[np.minimum(lengths, cum.size - 1)] * (lengths < cum.size)
    short = lengths[at < MIN_SEGMENTS]
    if short.size:
        raise InsufficientDataError(
            f"fewer than {MIN_SEGMENTS} diagonal segments at lengths {short.tolist()}"
        )
    p_cum = at / total
    x = lengths * traj.dt
    y = -np.log(p_cum)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((slope * x + intercept - y) ** 2)))
    return K2Fit(float(slope), float(intercept), residual, lengths, p_cum, total)


def estimate_k2(traj: Trajectory, epsilon: float, metric: Metric | str = Metric.EUCLIDEAN,
                lrange: tuple[int, int] = (2, 12)) -> float:
    """Slope of ``-ln P(length >= l)`` against ``l * dt`` over ``lrange``."""
    return k2_fit(traj, epsilon, metric, lrange).k2


def correlation_sum(traj: Trajectory, epsilons, metric: Metric | str = Metric.EUCLIDEAN) -> list[tuple[float, float]]:
    """Off-diagonal recurrence rate at each threshold."""
    eps = [float(e) for e in epsilons]
    if any(e <= 0 for e in eps) or any(b < a for a, b in zip(eps, eps[1:])):
        raise InputError("epsilons must be positive and ascending")
    n = traj.n
    if n < 2:
        raise InputError("correlation sum needs N >= 2")
    pairs = n * (n - 1) // 2
    return [(e, count_recurrent_pairs(traj, e, metric) / pairs) for e in eps]


def d2_slope(curve, eps_min: float | None = None, eps_max: float | None = None) -> tuple[float, float]:
    """Least-squares log-log slope of a correlation-sum curve and its RMS residual."""
    e = np.array([c[0] for c in curve])
    c = np.array([c[1] for c in curve])
    keep = c > 0
    if eps_min is not None:
        keep &= e >= eps_min
    if eps_max is not None:
        keep &= e <= eps_max
    if keep.sum() < 2:
        raise InsufficientDataError("need at least two nonzero points in the fit range")
    x, y = np.log(e[keep]), np.log(c[keep])
    coef = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, x) - y) ** 2)))
    return float(coef[0]), resid


def curve_csv(curve) -> str:
    return "".join(f"{e!r},{c!r}\n" for e, c in curve)
