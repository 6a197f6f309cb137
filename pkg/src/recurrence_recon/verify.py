"""Finite-data checks of the separation hypothesis and twin identification.

A pair ``(i, j)`` is separated when some ``z`` is recurrent with ``j`` but not
with ``i`` *and* some ``z'`` is recurrent with ``i`` but not with ``j``.  In
bitset terms: ``col_j & ~col_i`` and ``col_i & ~col_j`` are both non-empty.
``R = 0`` is taken as the far-witness criterion (``d >= eps``), which differs
from a strict ``d > eps`` only on a measure-zero set of distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import RecurrenceMatrix, format_report


@dataclass
class SeparationReport:
    satisfied: bool
    violating_pairs: list[tuple[int, int]]
    twin_classes: list[list[int]]
    n: int = 0
    n_effective: int = field(init=False)

    def __post_init__(self):
        self.n_effective = len(self.twin_classes)

    def to_text(self) -> str:
        nontrivial = [c for c in self.twin_classes if len(c) > 1]
        return format_report({
            "satisfied": self.satisfied,
            "n": self.n,
            "n_effective": self.n_effective,
            "n_violating_pairs": len(self.violating_pairs),
            "n_twin_groups": len(nontrivial),
            "violating_pairs": self.violating_pairs,
            "twin_groups": nontrivial,
        })


def packed_columns(bits: np.ndarray) -> np.ndarray:
    """Columns of a symmetric bit matrix packed into uint64 words, one row per column."""
    n = bits.shape[0]
    packed = np.packbits(bits, axis=1, bitorder="little")
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.concatenate([packed, np.zeros((n, pad), dtype=np.uint8)], axis=1)
    return np.ascontiguousarray(packed).view(np.uint64)


def twin_classes(R: RecurrenceMatrix) -> list[list[int]]:
    """Classes of identical columns, ordered by first occurrence."""
    words = packed_columns(R.bits)
    groups: dict[bytes, list[int]] = {}
    for i in range(R.n):
        groups.setdefault(words[i].tobytes(), []).append(i)
    return list(groups.values())


def witness_table(R: RecurrenceMatrix) -> np.ndarray:
    """``W[i, j]`` is True iff some z has ``R[i, z] = 0`` and ``R[j, z] = 1``."""
    words = packed_columns(R.bits)
    n = R.n
    table = np.empty((n, n), dtype=bool)
    for i in range(n):
        table[i] = np.any(words & ~words[i], axis=1)
    return table


def check_separation(R: RecurrenceMatrix) -> SeparationReport:
    w = witness_table(R)
    ok = w & w.T
    iu, ju = np.nonzero(~np.triu(ok, k=1) & np.triu(np.ones_like(ok), k=1))
    pairs = [(int(i), int(j)) for i, j in zip(iu, ju)]
    return SeparationReport(
        satisfied=not pairs,
        violating_pairs=pairs,
        twin_classes=twin_classes(R),
        n=R.n,
    )


def collapse_twins(R: RecurrenceMatrix) -> tuple[RecurrenceMatrix, np.ndarray]:
    """Quotient matrix over twin classes and the map old index -> class index.

    One representative (the earliest index) is kept per class, so the
    quotient preserves first-occurrence time order.
    """
    classes = twin_classes(R)
    index_map = np.empty(R.n, dtype=np.int64)
    for k, members in enumerate(classes):
        index_map[members] = k
    reps = np.array([c[0] for c in classes])
    quotient = RecurrenceMatrix(R.bits[np.ix_(reps, reps)], R.epsilon, R.metric)
    return quotient, index_map
