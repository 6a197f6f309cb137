"""Shared data types: trajectories, metrics and binary recurrence matrices."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class RecurrenceError(Exception):
    """Base class for all errors raised by this package."""


class InputError(RecurrenceError, ValueError):
    """Invalid arguments or inconsistent input shapes."""


class FormatError(RecurrenceError):
    """A file does not conform to its expected on-disk format."""


class GenerationError(RecurrenceError):
    """A trajectory generator failed (bad parameters or blow-up)."""


class CalibrationError(RecurrenceError):
    """No threshold can realise the requested recurrence rate."""


class DegenerateInputError(RecurrenceError):
    """Input is valid in shape but carries no usable information."""


class InsufficientDataError(RecurrenceError):
    """Too few samples for a statistical estimate or test."""


class Metric(str, Enum):
    EUCLIDEAN = "euclidean"
    MAXIMUM = "maximum"
    MANHATTAN = "manhattan"

    @property
    def code(self) -> int:
        return _METRIC_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "Metric":
        for metric, c in _METRIC_CODES.items():
            if c == code:
                return metric
        raise FormatError(f"unknown metric id {code}")

    @classmethod
    def parse(cls, value: "str | Metric") -> "Metric":
        if isinstance(value, Metric):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise InputError(f"unknown metric {value!r} (expected one of {names})") from None


_METRIC_CODES = {Metric.EUCLIDEAN: 0, Metric.MAXIMUM: 1, Metric.MANHATTAN: 2}


def distances_from_diff(diff: np.ndarray, metric: Metric) -> np.ndarray:
    """Norm of coordinate differences along the last axis.

    Coordinates are accumulated in a fixed left-to-right order so that every
    code path comparing against a threshold sees bit-identical distances.
    """
    metric = Metric.parse(metric)
    diff = np.asarray(diff, dtype=np.float64)
    if metric is Metric.MAXIMUM:
        return np.abs(diff).max(axis=-1)
    if metric is Metric.MANHATTAN:
        acc = np.abs(diff[..., 0])
        for k in range(1, diff.shape[-1]):
            acc = acc + np.abs(diff[..., k])
        return acc
    acc = diff[..., 0] * diff[..., 0]
    for k in range(1, diff.shape[-1]):
        acc = acc + diff[..., k] * diff[..., k]
    return np.sqrt(acc)


def metric_distance(p, q, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """Distance between two points under ``metric``.

    >>> metric_distance((0, 0), (3, 4))
    5.0
    """
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    q = np.atleast_1d(np.asarray(q, dtype=np.float64))
    if p.ndim != 1 or p.shape != q.shape:
        raise InputError(f"dimension mismatch: {p.shape} vs {q.shape}")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise InputError("coordinates must be finite")
    return float(distances_from_diff(p - q, metric))


def pairwise_distances(points: np.ndarray, metric: Metric | str = Metric.EUCLIDEAN) -> np.ndarray:
    """Dense N x N distance matrix (O(N^2) memory)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return distances_from_diff(pts[:, None, :] - pts[None, :, :], metric)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered, uniformly sampled orbit of ``N`` points in ``dim`` dimensions."""

    points: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError(f"trajectory needs shape (N>=1, dim>=1), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("trajectory coordinates must be finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InputError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class RecurrenceMatrix:
    """Symmetric binary matrix with its generating threshold and metric.

    ``bits[i, j]`` is True iff ``d(x_i, x_j) < epsilon``; the diagonal is
    always set because ``d(x, x) = 0 < epsilon``.
    """

    bits: np.ndarray
    epsilon: float
    metric: Metric = Metric.EUCLIDEAN

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.dtype != np.bool_:
            if not np.all((bits == 0) | (bits == 1)):
                raise InputError("recurrence matrix entries must be 0 or 1")
            bits = bits.astype(bool)
        if bits.ndim != 2 or bits.shape[0] != bits.shape[1] or bits.shape[0] < 1:
            raise InputError(f"recurrence matrix must be square and non-empty, got {bits.shape}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InputError(f"epsilon must be positive, got {self.epsilon}")
        if not np.array_equal(bits, bits.T):
            raise InputError("recurrence matrix must be symmetric")
        if not np.all(np.diagonal(bits)):
            raise InputError("recurrence matrix must have a unit diagonal")
        object.__setattr__(self, "bits", _frozen(bits))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "metric", Metric.parse(self.metric))

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RecurrenceMatrix):
            return NotImplemented
        return (
            self.epsilon == other.epsilon
            and self.metric is other.metric
            and np.array_equal(self.bits, other.bits)
        )

    __hash__ = None


def format_report(fields: dict) -> str:
    """Render ``key: value`` lines in insertion order.

    Lists of index pairs are written as ``i,j`` tokens separated by spaces;
    floats use ``repr`` so reports round-trip exactly.
    """
    lines = []
    for key, value in fields.items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        elif isinstance(value, (list, tuple)):
            parts = []
            for item in value:
                if isinstance(item, (list, tuple)):
                    parts.append(",".join(str(v) for v in item))
                else:
                    parts.append(repr(item) if isinstance(item, float) else str(item))
            text = " ".join(parts)
        elif value is None:
            text = "none"
        else:
            text = str(value)
        lines.append(f"{key}: {text}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(":")
        out[key.strip()] = value.strip()
    return out
