"""Twin surrogates and a recurrence-based synchronization index."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DegenerateInputError, InputError, RecurrenceMatrix, Trajectory
from .verify import twin_classes


@dataclass
class SurrogateSpec:
    count: int = 1
    seed: int = 0
    min_twin_classes: int = 10

    def __post_init__(self):
        if self.count < 1:
            raise InputError("surrogate count must be >= 1")


def twin_surrogate_indices(R: RecurrenceMatrix, count: int = 1, seed: int = 0) -> list[np.ndarray]:
    """Index paths of twin surrogates.

    From the current index the walk moves to the successor of a uniformly
    chosen member of the current twin class (the class includes the point
    itself).  Successors are cyclic: index N-1 is followed by 0.
    """
    n = R.n
    classes = twin_classes(R)
    class_of = np.empty(n, dtype=np.int64)
    for k, members in enumerate(classes):
        class_of[members] = k
    members = [np.asarray(c) for c in classes]
    rng = np.random.default_rng(seed)
    paths = []
    for _ in range(count):
        path = np.empty(n, dtype=np.int64)
        cur = int(rng.integers(n))
        path[0] = cur
        for t in range(1, n):
            group = members[class_of[cur]]
            if group.size > 1:
                cur = int(group[rng.integers(group.size)])
            cur = (cur + 1) % n
            path[t] = cur
        paths.append(path)
    return paths


def twin_surrogate(traj: Trajectory, R: RecurrenceMatrix, spec: SurrogateSpec | None = None) -> list[Trajectory]:
    spec = spec or SurrogateSpec()
    if traj.n != R.n:
        raise InputError(f"trajectory has N={traj.n} but matrix has N={R.n}")
    if R.n < 2:
        raise InputError("surrogates need N >= 2")
    n_twin = sum(len(c) > 1 for c in twin_classes(R))
    if n_twin < spec.min_twin_classes:
        warnings.warn(
            f"only {n_twin} twin classes (< {spec.min_twin_classes}); surrogates will be "
            "close to cyclic rotations of the original",
            stacklevel=2,
        )
    paths = twin_surrogate_indices(R, spec.count, spec.seed)
    return [Trajectory(traj.points[p], dt=traj.dt) for p in paths]


def sync_index(Rx: RecurrenceMatrix, Ry: RecurrenceMatrix) -> float:
    """Pearson (phi) correlation of the off-diagonal bits of two matrices."""
    if Rx.n != Ry.n:
        raise InputError(f"size mismatch: {Rx.n} vs {Ry.n}")
    iu = np.triu_indices(Rx.n, 1)
    x, y = Rx.bits[iu], Ry.bits[iu]
    n11 = int(np.count_nonzero(x & y))
    n10 = int(np.count_nonzero(x & ~y))
    n01 = int(np.count_nonzero(~x & y))
    n00 = x.size - n11 - n10 - n01
    prod = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00)
    if prod == 0:
        raise DegenerateInputError("a matrix has constant off-diagonal bits (zero variance)")
    root = math.isqrt(prod)
    den = root if root * root == prod else math.sqrt(prod)
    return (n11 * n00 - n10 * n01) / den
