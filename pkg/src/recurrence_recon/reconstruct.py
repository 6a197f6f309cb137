"""Rebuild a point set from a binary recurrence matrix alone.

Pipeline: identify twins, turn shared epsilon-neighbourhoods into a
dissimilarity (Jaccard), optionally complete saturated entries by shortest
paths, embed with SMACOF stress majorization, then re-expand twins as
coincident points.  ``validate`` measures how much of the original
recurrence structure the reconstruction reproduces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse, stats
from scipy.sparse import csgraph

from .core import (
    DegenerateInputError,
    InputError,
    Metric,
    RecurrenceMatrix,
    Trajectory,
    format_report,
    pairwise_distances,
)
from .recmat import _threshold_for_count, off_diagonal_rate
from .verify import collapse_twins

PROXIES = ("jaccard", "completed")


@dataclass(frozen=True, eq=False)
class ProxyDistanceMatrix:
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass
class ReconstructionResult:
    embedded: Trajectory
    stress: float
    matched_epsilon: float
    bit_agreement: float
    distance_rank_correlation: float
    stress_trace: list[float] = field(default_factory=list)
    n_effective: int = 0
    proxy: str = "completed"

    def to_text(self) -> str:
        return format_report({
            "n": self.embedded.n,
            "n_effective": self.n_effective,
            "m": self.embedded.dim,
            "proxy": self.proxy,
            "stress": self.stress,
            "iterations": len(self.stress_trace) - 1,
            "matched_epsilon": self.matched_epsilon,
            "bit_agreement": self.bit_agreement,
            "distance_rank_correlation": self.distance_rank_correlation,
        })


def proxy_distances(R: RecurrenceMatrix) -> ProxyDistanceMatrix:
    """Jaccard dissimilarity of epsilon-neighbourhoods,
    ``1 - |N_i & N_j| / |N_i | N_j|``."""
    if R.n < 2:
        raise InputError("proxy distances need N >= 2")
    b = R.bits.astype(np.float32)
    inter = np.rint(b @ b.T).astype(np.int64)
    size = np.diagonal(inter).copy()
    union = size[:, None] + size[None, :] - inter
    delta = 1.0 - inter / union
    np.fill_diagonal(delta, 0.0)
    return ProxyDistanceMatrix(delta)


def complete_proxy(delta: ProxyDistanceMatrix, k: int = 12) -> ProxyDistanceMatrix:
    """Replace saturated entries (``delta == 1``, disjoint neighbourhoods) by
    shortest-path lengths through the ``k``-nearest-neighbour graph.

    Unsaturated entries are kept: Jaccard distance obeys the triangle
    inequality, so no path can undercut them.  The minimum spanning tree is
    added to the graph so every pair receives a finite value.
    """
    d = delta.values
    n = d.shape[0]
    saturated = d >= 1.0
    np.fill_diagonal(saturated, False)
    if not saturated.any():
        return delta
    w = np.where(d > 0, d, 1e-12)
    np.fill_diagonal(w, 0.0)
    k = min(k, n - 1)
    nn = np.argpartition(w + np.diag(np.full(n, np.inf)), k - 1, axis=1)[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = nn.ravel()
    knn = sparse.coo_matrix((w[rows, cols], (rows, cols)), shape=(n, n)).tocsr()
    mst = csgraph.minimum_spanning_tree(w)
    graph = knn.maximum(knn.T).maximum(mst).maximum(mst.T)
    geo = csgraph.dijkstra(graph, directed=False)
    out = np.where(saturated, np.maximum(geo, 1.0), d)
    return ProxyDistanceMatrix(out)


def _classical_scaling(d: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    n = d.shape[0]
    d2 = d * d
    b = -0.5 * (d2 - d2.mean(axis=0)[None, :] - d2.mean(axis=1)[:, None] + d2.mean())
    lo = max(n - m, 0)
    vals, vecs = linalg.eigh(b, subset_by_index=[lo, n - 1])
    vals, vecs = vals[::-1], vecs[:, ::-1]
    x = np.zeros((n, m))
    k = vals.size
    x[:, :k] = vecs * np.sqrt(np.maximum(vals, 0.0))
    for c in range(k):
        j = np.argmax(np.abs(x[:, c]))
        if x[j, c] < 0:
            x[:, c] = -x[:, c]
    scale = d[np.triu_indices(n, 1)].mean()
    dead = np.all(np.abs(x) < 1e-12 * max(scale, 1e-300), axis=0)
    if dead.any():
        x[:, dead] = rng.normal(scale=1e-3 * scale, size=(n, int(dead.sum())))
    return x


def _raw_stress(d: np.ndarray, x: np.ndarray) -> tuple[float, np.ndarray]:
    dx = pairwise_distances(x)
    r = d - dx
    return 0.5 * float(np.sum(r * r)), dx


def embed(delta: ProxyDistanceMatrix | np.ndarray, m: int = 3, seed: int = 0,
          max_iter: int = 500, rtol: float = 1e-9, return_trace: bool = False):
    """SMACOF embedding of a dissimilarity matrix into ``m`` dimensions.

    Starts from classical scaling and applies Guttman transforms until the
    relative stress improvement drops below ``rtol``.  Raw stress is
    ``sum_{i<j} (delta_ij - |x_i - x_j|)^2``.
    """
    d = delta.values if isinstance(delta, ProxyDistanceMatrix) else np.asarray(delta, dtype=float)
    if m < 1:
        raise InputError("embedding dimension must be >= 1")
    n = d.shape[0]
    if n < 2 or not np.any(d > 0):
        raise DegenerateInputError("dissimilarities are all zero: nothing to embed")
    rng = np.random.default_rng(seed)
    x = _classical_scaling(d, m, rng)
    sigma, dx = _raw_stress(d, x)
    trace = [sigma]
    for _ in range(max_iter):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dx > 0, d / dx, 0.0)
        np.fill_diagonal(ratio, 0.0)
        bmat = -ratio
        bmat[np.diag_indices(n)] = ratio.sum(axis=1)
        x_new = bmat @ x / n
        sigma_new, dx_new = _raw_stress(d, x_new)
        if sigma_new > sigma:
            break
        improvement = sigma - sigma_new
        x, dx, sigma = x_new, dx_new, sigma_new
        trace.append(sigma)
        if sigma == 0.0 or improvement <= rtol * trace[-2]:
            break
    traj = Trajectory(x)
    if return_trace:
        return traj, trace
    return traj


def normalized_stress(delta: np.ndarray, x: np.ndarray) -> float:
    sigma, _ = _raw_stress(delta, x)
    return float(np.sqrt(sigma / (0.5 * np.sum(delta * delta))))


def _proxy(R: RecurrenceMatrix, proxy: str) -> ProxyDistanceMatrix:
    if proxy not in PROXIES:
        raise InputError(f"unknown proxy {proxy!r}; choose from {PROXIES}")
    delta = proxy_distances(R)
    return complete_proxy(delta) if proxy == "completed" else delta


def validate(R: RecurrenceMatrix, reconstructed: Trajectory | np.ndarray,
             proxy: str = "completed") -> tuple[float, float, float]:
    """Compare a reconstruction with the matrix it came from.

    Returns ``(matched_epsilon, bit_agreement, distance_rank_correlation)``.
    The reconstructed threshold is picked so both matrices have the same
    recurrence rate; agreement is measured over off-diagonal entries.
    """
    pts = reconstructed.points if isinstance(reconstructed, Trajectory) else np.asarray(reconstructed)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] != R.n:
        raise InputError(f"size mismatch: matrix has N={R.n}, reconstruction has {pts.shape[0]}")
    if R.n < 2:
        raise InputError("validation needs N >= 2")
    iu = np.triu_indices(R.n, 1)
    dist = pairwise_distances(pts, Metric.EUCLIDEAN)
    upper = dist[iu]
    rate = off_diagonal_rate(R.bits)
    if np.all(upper == 0):
        eps = 1.0
    else:
        eps, _ = _threshold_for_count(np.sort(upper), rate * upper.size)
    agreement = float(np.mean((upper < eps) == R.bits[iu]))
    delta = _proxy(R, proxy).values[iu]
    if np.ptp(delta) == 0 or np.ptp(upper) == 0:
        rho = float("nan")
    else:
        rho = float(stats.spearmanr(delta, upper).statistic)
    return float(eps), agreement, rho


def reconstruct(R: RecurrenceMatrix, m: int = 3, seed: int = 0,
                proxy: str = "completed") -> ReconstructionResult:
    """Full pipeline from a recurrence matrix to a validated point set."""
    quotient, index_map = collapse_twins(R)
    if quotient.n < 2:
        raise DegenerateInputError("matrix has a single twin class; no geometry to recover")
    delta = _proxy(quotient, proxy)
    small, trace = embed(delta, m=m, seed=seed, return_trace=True)
    stress = normalized_stress(delta.values, small.points)
    full = Trajectory(small.points[index_map])
    eps, agreement, rho = validate(R, full, proxy=proxy)
    return ReconstructionResult(
        embedded=full,
        stress=stress,
        matched_epsilon=eps,
        bit_agreement=agreement,
        distance_rank_correlation=rho,
        stress_trace=trace,
        n_effective=quotient.n,
        proxy=proxy,
    )
