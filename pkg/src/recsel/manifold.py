"""Spectral manifold machinery: pairwise distances, Gaussian adjacency,
normalized Laplacian, its eigendecomposition, diffusion-time selection,
and the low-dimensional embeddings used downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import pairwise_sq_dists
from .errors import NumericalError


@dataclass(frozen=True)
class KernelSpectrum:
    eigenvalues: np.ndarray  # ascending, first clamped to 0
    eigenvectors: np.ndarray  # columns aligned to eigenvalues, sign-fixed
    sigma: float


@dataclass(frozen=True)
class ManifoldCoords:
    coords: np.ndarray  # (N, d)
    t_opt: float | None = None

    @property
    def dim(self) -> int:
        return int(self.coords.shape[1])


def pairwise_distances(vectors: np.ndarray) -> np.ndarray:
    pts = np.asarray(vectors, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least 2 embedding vectors")
    return np.sqrt(pairwise_sq_dists(pts))


def median_offdiag(distances: np.ndarray) -> float:
    n = distances.shape[0]
    iu = np.triu_indices(n, k=1)
    return float(np.median(distances[iu]))


def _gaussian_kernel(distances: np.ndarray, sigma: float) -> np.ndarray:
    sq = distances * distances
    kernel = np.exp(-sq / (2.0 * sigma * sigma))
    np.fill_diagonal(kernel, 1.0)
    return kernel


def build_adjacency(
    distances: np.ndarray, sigma: float | None = None
) -> tuple[np.ndarray, float]:
    """Gaussian adjacency from a distance matrix; returns (A, sigma used)."""
    if sigma is None:
        sigma = median_offdiag(distances)
    if not (sigma > 0):
        raise NumericalError("degenerate geometry: median pairwise distance is zero")
    return _gaussian_kernel(distances, sigma), float(sigma)


def normalized_laplacian(adjacency: np.ndarray) -> np.ndarray:
    degrees = adjacency.sum(axis=1)
    if np.any(degrees <= 0):
        raise NumericalError("nonpositive degree in adjacency")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    lap = -(adjacency * inv_sqrt[:, None]) * inv_sqrt[None, :]
    np.fill_diagonal(lap, lap.diagonal() + 1.0)
    return (lap + lap.T) * 0.5


def spectral_decompose(laplacian: np.ndarray, sigma: float = 0.0) -> KernelSpectrum:
    """Full symmetric eigendecomposition, ascending eigenvalues.

    Eigenvalues within round-off of 0 clamp to exactly 0 (the normalized
    Laplacian always has a zero eigenvalue); each eigenvector's sign is
    fixed so its first nonzero entry is positive.
    """
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(laplacian)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    if eigenvalues[0] < -1e-8 or eigenvalues[-1] > 2.0 + 1e-8:
        raise NumericalError(
            f"Laplacian spectrum out of range: [{eigenvalues[0]}, {eigenvalues[-1]}]"
        )
    eigenvalues = np.maximum(eigenvalues, 0.0)
    eigenvalues[eigenvalues <= 1e-8] = 0.0
    eigenvectors = eigenvectors.copy()
    for j in range(eigenvectors.shape[1]):
        col = eigenvectors[:, j]
        nonzero = np.nonzero(col)[0]
        if nonzero.size and col[nonzero[0]] < 0:
            eigenvectors[:, j] = -col
    return KernelSpectrum(eigenvalues=eigenvalues, eigenvectors=eigenvectors, sigma=sigma)


def diffusion_eigenvalues(spectrum: KernelSpectrum, t: float) -> np.ndarray:
    if not (t > 0):
        raise ValueError("diffusion time must be positive")
    return np.exp(-t * spectrum.eigenvalues)


def select_diffusion_time(spectrum: KernelSpectrum, t_grid) -> float:
    """Grid argmax of d log lambda_2(t) / d log t, ties toward smaller t.

    log lambda_2(t) is exactly -t * mu_2, evaluated directly to avoid
    exp/log underflow; derivatives use centered differences on the interior
    and one-sided differences at the ends.
    """
    grid = [float(t) for t in t_grid]
    if not grid:
        raise ValueError("t_grid must be nonempty")
    if any(not math.isfinite(t) or t <= 0 for t in grid):
        raise ValueError("t_grid values must be finite and positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("t_grid must be strictly ascending")
    if spectrum.eigenvalues.size < 2:
        raise NumericalError("lambda_2 undefined for N < 2")
    if len(grid) == 1:
        return grid[0]
    mu2 = float(spectrum.eigenvalues[1])
    log_lam = [-t * mu2 for t in grid]
    log_t = [math.log(t) for t in grid]
    n = len(grid)
    best_idx = 0
    best_val = -math.inf
    for i in range(n):
        lo = max(0, i - 1)
        hi = min(n - 1, i + 1)
        criterion = (log_lam[hi] - log_lam[lo]) / (log_t[hi] - log_t[lo])
        if criterion > best_val:
            best_val = criterion
            best_idx = i
    return grid[best_idx]


def manifold_embed(
    spectrum: KernelSpectrum, d: int, t_opt: float | None = None
) -> ManifoldCoords:
    """First d Laplacian eigenvectors as rows, one per sample.

    The embedding does not depend on the diffusion time; t_opt is carried
    as metadata only.
    """
    n = spectrum.eigenvectors.shape[0]
    if not (1 <= d < n):
        raise ValueError(f"need 1 <= d < N, got d={d}, N={n}")
    return ManifoldCoords(coords=spectrum.eigenvectors[:, :d].copy(), t_opt=t_opt)


def kernel_coords(spectrum: KernelSpectrum, d: int, t_opt: float | None = None) -> ManifoldCoords:
    """Embedding scaled so dot products reproduce the smoothing kernel.

    Each eigenvector column j is scaled by sqrt(max(0, 1 - mu_j)), the
    square root of the normalized-adjacency eigenvalue. The Gram matrix of
    these rows equals the rank-d spectral truncation of D^{-1/2}AD^{-1/2},
    so dimensions whose kernel eigenvalue is negligible contribute
    negligible geometry. This is the representation the similarity stage
    consumes; it is independent of the diffusion time.
    """
    n = spectrum.eigenvectors.shape[0]
    if not (1 <= d < n):
        raise ValueError(f"need 1 <= d < N, got d={d}, N={n}")
    weights = np.sqrt(np.maximum(0.0, 1.0 - spectrum.eigenvalues[:d]))
    return ManifoldCoords(coords=spectrum.eigenvectors[:, :d] * weights, t_opt=t_opt)
