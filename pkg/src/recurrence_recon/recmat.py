"""Recurrence matrix construction, threshold calibration, and file I/O.

Construction follows the strict convention ``R[i, j] = 1`` iff
``d(x_i, x_j) < epsilon``; a pair at distance exactly ``epsilon`` is not a
recurrence.
"""

from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .core import (
    CalibrationError,
    FormatError,
    InputError,
    Metric,
    RecurrenceMatrix,
    Trajectory,
    distances_from_diff,
)

MAGIC = b"RQM1"
_HEADER = struct.Struct("<4sQdB")

# candidate pairs evaluated per vectorised batch
_CHUNK = 2_000_000
# grid cell side is inflated by this factor so float rounding in the
# binning can never split a true neighbour pair across non-adjacent cells
_CELL_SLACK = 1.0 + 1e-9


@dataclass(frozen=True)
class EpsilonCalibration:
    target_rate: float
    achieved_rate: float
    epsilon: float


def _points(traj) -> np.ndarray:
    if isinstance(traj, Trajectory):
        return traj.points
    return Trajectory(traj).points


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise InputError(f"epsilon must be positive and finite, got {epsilon}")
    return epsilon


def _dense_bits(pts: np.ndarray, epsilon: float, metric: Metric, block: int = 256) -> np.ndarray:
    n = pts.shape[0]
    bits = np.empty((n, n), dtype=bool)
    for a in range(0, n, block):
        diff = pts[a:a + block, None, :] - pts[None, :, :]
        bits[a:a + block] = distances_from_diff(diff, metric) < epsilon
    return bits


def _half_offsets(dim: int) -> list[tuple[int, ...]]:
    """Zero offset plus every offset whose first nonzero component is +1."""
    out = []
    for off in itertools.product((-1, 0, 1), repeat=dim):
        nz = [o for o in off if o != 0]
        if not nz or nz[0] > 0:
            out.append(off)
    return out


def _grid_candidates(pts: np.ndarray, side: float) -> Iterator[tuple[np.ndarray, np.ndarray]] | None:
    """Yield index batches ``(i, j)``, ``i != j``, covering every unordered pair
    whose maximum-norm distance is below ``side``.  Each pair appears once.

    Returns None when the cell lattice cannot be linearised in int64.
    """
    n, dim = pts.shape
    lo = pts.min(axis=0)
    keys = np.floor((pts - lo) / (side * _CELL_SLACK)).astype(np.int64) + 1
    extent = keys.max(axis=0) + 2
    if np.prod(extent.astype(float)) > 2.0**62:
        return None
    strides = np.ones(dim, dtype=np.int64)
    for k in range(dim - 2, -1, -1):
        strides[k] = strides[k + 1] * extent[k + 1]
    lin = keys @ strides
    order = np.argsort(lin, kind="stable")
    uniq, starts, counts = np.unique(lin[order], return_index=True, return_counts=True)

    def batches():
        for off in _half_offsets(dim):
            shift = int(np.dot(off, strides))
            same = shift == 0
            pos = np.searchsorted(uniq, uniq + shift)
            pos_c = np.minimum(pos, uniq.size - 1)
            found = (pos < uniq.size) & (uniq[pos_c] == uniq + shift)
            a_cells = np.flatnonzero(found)
            b_cells = pos[found]
            sizes = counts[a_cells] * counts[b_cells]
            if same:
                keep = counts[a_cells] > 1
                a_cells, b_cells, sizes = a_cells[keep], b_cells[keep], sizes[keep]
            if a_cells.size == 0:
                continue
            # group cell pairs into batches of roughly _CHUNK candidates
            cum = np.cumsum(sizes)
            cut = 0
            while cut < a_cells.size:
                base = cum[cut - 1] if cut else 0
                stop = int(np.searchsorted(cum, base + _CHUNK, side="right"))
                stop = max(stop, cut + 1)
                ac, bc, sz = a_cells[cut:stop], b_cells[cut:stop], sizes[cut:stop]
                total = int(sz.sum())
                cell_of = np.repeat(np.arange(ac.size), sz)
                first = np.concatenate(([0], np.cumsum(sz)[:-1]))
                local = np.arange(total, dtype=np.int64) - first[cell_of]
                bcount = counts[bc][cell_of]
                ia = local // bcount
                ib = local - ia * bcount
                if same:
                    m = ia < ib
                    ia, ib, cell_of = ia[m], ib[m], cell_of[m]
                i = order[starts[ac][cell_of] + ia]
                j = order[starts[bc][cell_of] + ib]
                yield i, j
                cut = stop

    return batches()


def _grid_bits(pts: np.ndarray, epsilon: float, metric: Metric) -> np.ndarray | None:
    gen = _grid_candidates(pts, epsilon)
    if gen is None:
        return None
    n = pts.shape[0]
    bits = np.zeros((n, n), dtype=bool)
    np.fill_diagonal(bits, True)
    for i, j in gen:
        hit = distances_from_diff(pts[i] - pts[j], metric) < epsilon
        bits[i[hit], j[hit]] = True
        bits[j[hit], i[hit]] = True
    return bits


def build_matrix(traj, epsilon: float, metric: Metric | str = Metric.EUCLIDEAN,
                 method: str = "auto") -> RecurrenceMatrix:
    """Recurrence matrix of ``traj`` at threshold ``epsilon``.

    ``method`` is ``"grid"`` (cell binning, near-linear for small epsilon),
    ``"direct"`` (all pairs) or ``"auto"``.  Both produce identical bits.
    """
    pts = _points(traj)
    epsilon = _check_epsilon(epsilon)
    metric = Metric.parse(metric)
    if method not in ("auto", "grid", "direct"):
        raise InputError(f"unknown method {method!r}")
    bits = None
    if method == "auto":
        # binning only pays off when the lattice has many occupied cells
        span = np.ptp(pts, axis=0) / epsilon
        method = "grid" if np.prod(np.maximum(span, 1.0)) > 27 and pts.shape[0] > 64 else "direct"
    if method == "grid":
        bits = _grid_bits(pts, epsilon, metric)
    if bits is None:
        bits = _dense_bits(pts, epsilon, metric)
    return RecurrenceMatrix(bits, epsilon, metric)


def recurrence_row(traj, i: int, epsilon: float, metric: Metric | str = Metric.EUCLIDEAN) -> np.ndarray:
    """Row ``i`` of the recurrence matrix without building the full matrix."""
    pts = _points(traj)
    if not 0 <= i < pts.shape[0]:
        raise InputError(f"index {i} out of range for N={pts.shape[0]}")
    epsilon = _check_epsilon(epsilon)
    return distances_from_diff(pts[i][None, :] - pts, Metric.parse(metric)) < epsilon


def count_recurrent_pairs(traj, epsilon: float, metric: Metric | str = Metric.EUCLIDEAN) -> int:
    """Number of unordered pairs ``i < j`` with ``d < epsilon`` (bounded memory)."""
    pts = _points(traj)
    epsilon = _check_epsilon(epsilon)
    metric = Metric.parse(metric)
    gen = _grid_candidates(pts, epsilon)
    total = 0
    if gen is None:
        n = pts.shape[0]
        for a in range(0, n, 256):
            d = distances_from_diff(pts[a:a + 256, None, :] - pts[None, :, :], metric)
            rows = np.arange(a, min(a + 256, n))[:, None]
            total += int(np.count_nonzero((d < epsilon) & (np.arange(n)[None, :] > rows)))
        return total
    for i, j in gen:
        total += int(np.count_nonzero(distances_from_diff(pts[i] - pts[j], metric) < epsilon))
    return total


def off_diagonal_rate(bits: np.ndarray) -> float:
    n = bits.shape[0]
    if n < 2:
        raise InputError("recurrence rate needs N >= 2")
    return float((np.count_nonzero(bits) - n) / (n * (n - 1)))


def _upper_distances(pts: np.ndarray, metric: Metric) -> np.ndarray:
    n = pts.shape[0]
    out = []
    for a in range(0, n - 1, 256):
        b = min(a + 256, n - 1)
        for i in range(a, b):
            out.append(distances_from_diff(pts[i] - pts[i + 1:], metric))
    return np.concatenate(out)


def _threshold_for_count(sorted_d: np.ndarray, target_count: float) -> tuple[float, int]:
    """Choose epsilon whose strict count ``#{d < eps}`` is nearest to ``target_count``.

    Thresholds sit midway between adjacent distinct distances so that small
    perturbations of the data (e.g. rigid motions) cannot flip a pair.
    """
    m = sorted_d.size
    values, first = np.unique(sorted_d, return_index=True)
    if values[-1] == 0.0:
        raise CalibrationError("all points coincide: every epsilon > 0 gives rate 1")
    # reachable counts: #{d < v} for each distinct v > 0, plus all pairs
    pos = values > 0
    counts = np.append(first[pos], m)
    prev = np.concatenate(([0.0], values[:-1]))
    mids = np.append(0.5 * (prev + values)[pos], values[-1] * (1.0 + 1e-6))
    k = int(np.argmin(np.abs(counts - target_count)))
    return float(mids[k]), int(counts[k])


def calibrate_epsilon(traj, target_rate: float, metric: Metric | str = Metric.EUCLIDEAN,
                      seed: int = 0, max_pairs: int = 2_000_000) -> EpsilonCalibration:
    """Threshold whose off-diagonal recurrence rate is closest to ``target_rate``.

    Exact over all pairs when there are at most ``max_pairs`` of them;
    otherwise a seeded pair subsample gives a starting quantile that is refined
    by bisection on the exact rate.
    """
    pts = _points(traj)
    metric = Metric.parse(metric)
    if not 0 < target_rate <= 1:
        raise InputError(f"target rate must lie in (0, 1], got {target_rate}")
    n = pts.shape[0]
    if n < 2:
        raise InputError("calibration needs N >= 2")
    m = n * (n - 1) // 2

    if m <= max_pairs:
        d = np.sort(_upper_distances(pts, metric))
        eps, count = _threshold_for_count(d, target_rate * m)
        return EpsilonCalibration(float(target_rate), count / m, eps)

    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=max_pairs)
    j = rng.integers(0, n - 1, size=max_pairs)
    j = j + (j >= i)
    d = np.sort(distances_from_diff(pts[i] - pts[j], metric))
    if d[-1] == 0.0:
        raise CalibrationError("all sampled points coincide: every epsilon > 0 gives rate 1")

    def rate(eps):
        return count_recurrent_pairs(pts, eps, metric) / m

    q = np.quantile(d, target_rate)
    if target_rate >= 1.0 or q <= 0:
        eps, _ = _threshold_for_count(d, target_rate * d.size)
        return EpsilonCalibration(float(target_rate), rate(eps), eps)
    spread = 4.0 * np.sqrt(target_rate * (1 - target_rate) / max_pairs) + 1e-4
    lo = float(np.quantile(d, max(target_rate - spread, 0.0)))
    hi = float(np.quantile(d, min(target_rate + spread, 1.0)))
    lo = lo if lo > 0 else q / 2
    r_lo, r_hi = rate(lo), rate(hi)
    while r_lo > target_rate and lo > 1e-300:
        lo /= 2
        r_lo = rate(lo)
    while r_hi < target_rate:
        hi *= 2
        r_hi = rate(hi)
    best = min(((abs(r_lo - target_rate), lo, r_lo), (abs(r_hi - target_rate), hi, r_hi)))
    tol = max(0.5 / m, 1e-5 * target_rate)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        r = rate(mid)
        best = min(best, (abs(r - target_rate), mid, r))
        if abs(r - target_rate) <= tol or hi - lo <= 1e-12 * hi:
            break
        if r < target_rate:
            lo = mid
        else:
            hi = mid
    _, eps, r = best
    return EpsilonCalibration(float(target_rate), float(r), float(eps))


def save_matrix(R: RecurrenceMatrix, path) -> None:
    """Write the RQM1 format: header, then row-major bits packed LSB-first,
    each row padded to a whole byte."""
    payload = np.packbits(R.bits, axis=1, bitorder="little")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, R.n, R.epsilon, R.metric.code))
        fh.write(payload.tobytes())


def load_matrix(path) -> RecurrenceMatrix:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, n, epsilon, code = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if n < 1:
        raise FormatError(f"{path}: matrix size must be positive")
    row_bytes = (n + 7) // 8
    payload = data[_HEADER.size:]
    if len(payload) != n * row_bytes:
        raise FormatError(
            f"{path}: payload has {len(payload)} bytes, n={n} requires {n * row_bytes}"
        )
    packed = np.frombuffer(payload, dtype=np.uint8).reshape(n, row_bytes)
    bits = np.unpackbits(packed, axis=1, count=n, bitorder="little").astype(bool)
    try:
        return RecurrenceMatrix(bits, epsilon, Metric.from_code(code))
    except InputError as exc:
        raise FormatError(f"{path}: {exc}") from None


def export_pgm(R: RecurrenceMatrix, path) -> None:
    """Binary PGM (P5): black where R = 1, white where R = 0."""
    pixels = np.where(R.bits, 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{R.n} {R.n}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
