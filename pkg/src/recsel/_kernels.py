"""Hot numeric kernels with a numba lane and a pure-numpy fallback.

The lane is chosen at import time: set RECSEL_NUMBA=0 (or "false"/"off"/"no")
to force the numpy implementations. When numba is not importable the numpy
lane is used silently. Both lanes are deterministic; fastmath stays off so
float semantics are preserved.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("RECSEL_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in {"0", "false", "off", "no"}

_LOG2_INV = 1.0 / np.log(2.0)


def pairwise_sq_dists_numpy(points: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, (N, N), exact zero diagonal.

    Computed from explicit coordinate differences (not the Gram expansion)
    so the result is exactly symmetric and nonnegative.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n, dim = pts.shape
    out = np.empty((n, n), dtype=np.float64)
    # Row blocks keep the (block, N, dim) intermediate under ~256 MB.
    block = max(1, int(2**25 // max(1, n * dim)))
    for start in range(0, n, block):
        stop = min(n, start + block)
        diff = pts[start:stop, None, :] - pts[None, :, :]
        out[start:stop] = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(out, 0.0)
    return out


def jsd_rows_numpy(p_rows: np.ndarray, q_rows: np.ndarray) -> np.ndarray:
    """Base-2 Jensen-Shannon divergence per aligned row pair, clamped to [0, 1].

    Rows are probability vectors over a shared support; zero entries follow
    the 0*log(0/q) = 0 convention. The mixture keeps every needed ratio
    finite, so no continuity errors can arise here.
    """
    p = np.asarray(p_rows, dtype=np.float64)
    q = np.asarray(q_rows, dtype=np.float64)
    m = (p + q) * 0.5
    safe_m = np.where(m > 0.0, m, 1.0)
    pterm = p * np.log2(np.where(p > 0.0, p / safe_m, 1.0))
    qterm = q * np.log2(np.where(q > 0.0, q / safe_m, 1.0))
    vals = 0.5 * pterm.sum(axis=1) + 0.5 * qterm.sum(axis=1)
    return np.clip(vals, 0.0, 1.0)


try:  # pragma: no cover - exercised only when numba is installed
    if not _WANT_NUMBA:
        raise ImportError("numba disabled by RECSEL_NUMBA")
    from numba import njit, prange

    @njit(cache=True, parallel=True, fastmath=False)
    def _pairwise_sq_numba(pts):
        n, dim = pts.shape
        out = np.zeros((n, n), dtype=np.float64)
        for i in prange(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(dim):
                    diff = pts[i, k] - pts[j, k]
                    acc += diff * diff
                out[i, j] = acc
                out[j, i] = acc
        return out

    @njit(cache=True, parallel=True, fastmath=False)
    def _jsd_rows_numba(p_rows, q_rows, log2_inv):
        n, dim = p_rows.shape
        out = np.empty(n, dtype=np.float64)
        for i in prange(n):
            acc_p = 0.0
            acc_q = 0.0
            for k in range(dim):
                p = p_rows[i, k]
                q = q_rows[i, k]
                m = (p + q) * 0.5
                if p > 0.0:
                    acc_p += p * (np.log(p / m) * log2_inv)
                if q > 0.0:
                    acc_q += q * (np.log(q / m) * log2_inv)
            val = 0.5 * acc_p + 0.5 * acc_q
            if val < 0.0:
                val = 0.0
            elif val > 1.0:
                val = 1.0
            out[i] = val
        return out

    def pairwise_sq_dists_numba(points: np.ndarray) -> np.ndarray:
        pts = np.ascontiguousarray(points, dtype=np.float64)
        return _pairwise_sq_numba(pts)

    def jsd_rows_numba(p_rows: np.ndarray, q_rows: np.ndarray) -> np.ndarray:
        p = np.ascontiguousarray(p_rows, dtype=np.float64)
        q = np.ascontiguousarray(q_rows, dtype=np.float64)
        return _jsd_rows_numba(p, q, _LOG2_INV)

    USING_NUMBA = True
except ImportError:
    pairwise_sq_dists_numba = None
    jsd_rows_numba = None
    USING_NUMBA = False

if USING_NUMBA:
    pairwise_sq_dists = pairwise_sq_dists_numba
    jsd_rows = jsd_rows_numba
else:
    pairwise_sq_dists = pairwise_sq_dists_numpy
    jsd_rows = jsd_rows_numpy


def warmup() -> None:
    """Trigger JIT compilation once so timed paths measure steady state."""
    pts = np.array([[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]])
    pairwise_sq_dists(pts)
    rows = np.array([[0.5, 0.5], [1.0, 0.0]])
    jsd_rows(rows, rows[::-1].copy())
