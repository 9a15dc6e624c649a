"""NMF-based clustering of manifold coordinates: similarity construction,
adaptive cluster-count selection via an elbow on the factorization error,
and row-argmax assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .manifold import ManifoldCoords, _gaussian_kernel, median_offdiag, pairwise_distances

MAX_ITERS = 200
REL_TOL = 1e-4
RESTARTS = 3
UPDATE_FLOOR = 1e-12


@dataclass(frozen=True)
class NMFFactors:
    w: np.ndarray
    h: np.ndarray
    error: float
    iterations: int
    seed: int
    converged: bool
    error_history: tuple[float, ...]


@dataclass(frozen=True)
class Clustering:
    labels: np.ndarray  # (N,) int cluster index, 0-based, compacted
    clusters: tuple[tuple[int, ...], ...]  # member corpus indices per cluster
    n_clusters: int
    index_remap: tuple[tuple[int, int], ...]  # (raw column, compacted index)


@dataclass(frozen=True)
class ClusterSearch:
    n_clusters: int
    errors: tuple[tuple[int, float], ...]  # (k, err) for the computed prefix
    factors: NMFFactors  # best factorization at the chosen k


def similarity_matrix(coords: ManifoldCoords | np.ndarray) -> tuple[np.ndarray, float]:
    """Gaussian similarity over coordinate rows; returns (S, sigma used)."""
    points = coords.coords if isinstance(coords, ManifoldCoords) else np.asarray(coords)
    distances = pairwise_distances(points)
    sigma = median_offdiag(distances)
    if not (sigma > 0):
        raise NumericalError("degenerate geometry: all coordinates identical")
    return _gaussian_kernel(distances, sigma), sigma


def nmf_factorize(
    similarity: np.ndarray,
    k: int,
    seed: int,
    max_iters: int = MAX_ITERS,
    rel_tol: float = REL_TOL,
) -> NMFFactors:
    """Multiplicative-update factorization S ~ W H^T with nonnegative factors.

    Init entries are uniform on (0, 1] scaled by mean(S); updates floor at
    1e-12 so zeros cannot absorb. Stops when the relative error change
    drops below rel_tol, else flags non-convergence after max_iters.
    """
    n = similarity.shape[0]
    if similarity.shape != (n, n):
        raise ValueError("similarity matrix must be square")
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={n}")
    rng = np.random.default_rng(seed)
    scale = float(similarity.mean())
    w = (1.0 - rng.random((n, k))) * scale
    h = (1.0 - rng.random((n, k))) * scale
    history: list[float] = []
    prev: float | None = None
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        w *= (similarity @ h) / np.maximum(w @ (h.T @ h), UPDATE_FLOOR)
        np.maximum(w, UPDATE_FLOOR, out=w)
        h *= (similarity @ w) / np.maximum(h @ (w.T @ w), UPDATE_FLOOR)
        np.maximum(h, UPDATE_FLOOR, out=h)
        error = float(np.linalg.norm(similarity - w @ h.T, "fro"))
        history.append(error)
        if prev is not None and abs(prev - error) / max(prev, UPDATE_FLOOR) < rel_tol:
            converged = True
            break
        prev = error
    return NMFFactors(
        w=w, h=h, error=history[-1], iterations=iterations, seed=seed,
        converged=converged, error_history=tuple(history),
    )


def _restart_seed(seed: int, k: int, restart: int) -> int:
    # Deterministic child seed per (base seed, k, restart).
    return int(np.random.SeedSequence((seed & 0x7FFFFFFF, k, restart)).generate_state(1)[0])


def best_factorization(similarity: np.ndarray, k: int, seed: int, restarts: int = RESTARTS) -> NMFFactors:
    """Best of `restarts` seeded runs, lowest reconstruction error wins."""
    best: NMFFactors | None = None
    for restart in range(restarts):
        child = _restart_seed(seed, k, restart)
        factors = nmf_factorize(similarity, k, child)
        if best is None or factors.error < best.error:
            best = factors
    return best


def select_num_clusters(
    similarity: np.ndarray,
    k_min: int = 2,
    k_max: int | None = None,
    epsilon_k: float = 0.05,
    seed: int = 0,
) -> ClusterSearch:
    """Elbow scan over k: stop at the last k whose increment still paid off.

    err(k) is the best-of-restarts reconstruction error. The scan walks k
    upward and returns the smallest k whose relative improvement toward
    k+1 falls below epsilon_k (or whose error is already ~zero); if no
    elbow appears the range maximum is returned. Only the scanned prefix
    of the err(k) curve is computed.
    """
    n = similarity.shape[0]
    if k_max is None:
        k_max = min(20, n - 1)
    if not (1 <= k_min <= k_max <= n):
        raise ValueError(f"need 1 <= k_min <= k_max <= N, got [{k_min}, {k_max}], N={n}")
    factors = best_factorization(similarity, k_min, seed)
    errors = [(k_min, factors.error)]
    chosen = k_max
    for k in range(k_min + 1, k_max + 1):
        if factors.error <= 1e-12:
            chosen = k - 1
            break
        nxt = best_factorization(similarity, k, seed)
        errors.append((k, nxt.error))
        if (factors.error - nxt.error) / factors.error < epsilon_k:
            chosen = k - 1
            break
        factors = nxt
    else:
        chosen = k_max
    return ClusterSearch(n_clusters=chosen, errors=tuple(errors), factors=factors)


def assign_clusters(w: np.ndarray) -> Clustering:
    """Row-argmax labels (ties to the lowest column), empty columns compacted."""
    if w.ndim != 2 or w.shape[0] == 0:
        raise ValueError("W must be a nonempty 2-D factor")
    raw = np.argmax(w, axis=1)
    used = sorted(set(int(c) for c in raw))
    remap = {c: i for i, c in enumerate(used)}
    labels = np.array([remap[int(c)] for c in raw], dtype=np.int64)
    clusters: list[list[int]] = [[] for _ in used]
    for idx, lab in enumerate(labels):
        clusters[int(lab)].append(idx)
    return Clustering(
        labels=labels,
        clusters=tuple(tuple(members) for members in clusters),
        n_clusters=len(used),
        index_remap=tuple((c, remap[c]) for c in used),
    )
