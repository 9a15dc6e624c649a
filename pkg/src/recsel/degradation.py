"""Token-level divergence scoring: softmax, KLD/JSD, per-sample means,
per-cluster degradation scores, quadratic cost, and efficiency scores.

JSD and KLD use base-2 logs so values live in [0, 1]; the efficiency-score
denominator uses the natural log (any fixed base only rescales rankings).
Scalar aggregations run as sequential Python sums in index order so results
are reproducible bit for bit by an independent replay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import jsd_rows
from .corpus import DivergenceRecord, InstructionSample
from .errors import NumericalError


@dataclass(frozen=True)
class SampleDivergence:
    id: str
    per_token_jsd: tuple[float, ...]
    mean_jsd: float


@dataclass(frozen=True)
class ClusterCDS:
    cluster: int
    cds: float
    members: int


@dataclass(frozen=True)
class EfficiencyScore:
    id: str
    mean_jsd: float
    cost: int
    ies: float


def softmax_with_temperature(logits, tau: float = 1.0) -> np.ndarray:
    if tau <= 0:
        raise ValueError("tau must be positive")
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("logits must be a nonempty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("logits must be finite")
    scaled = arr / tau
    scaled = scaled - scaled.max()
    exp = np.exp(scaled)
    return exp / exp.sum()


def kld(p, q) -> float:
    """Base-2 KL divergence with the 0*log(0/q) = 0 convention."""
    p_arr = np.asarray(p, dtype=np.float64)
    q_arr = np.asarray(q, dtype=np.float64)
    if p_arr.shape != q_arr.shape or p_arr.ndim != 1:
        raise ValueError("P and Q must be 1-D vectors over the same support")
    if np.any((q_arr == 0.0) & (p_arr > 0.0)):
        raise NumericalError("KLD undefined: P has mass where Q is zero")
    safe_q = np.where(q_arr > 0.0, q_arr, 1.0)
    terms = p_arr * np.log2(np.where(p_arr > 0.0, p_arr / safe_q, 1.0))
    return float(terms.sum())


def jsd(p, q) -> float:
    """Base-2 Jensen-Shannon divergence, clamped to [0, 1]."""
    p_arr = np.asarray(p, dtype=np.float64)
    q_arr = np.asarray(q, dtype=np.float64)
    if p_arr.shape != q_arr.shape or p_arr.ndim != 1:
        raise ValueError("P and Q must be 1-D vectors over the same support")
    return float(jsd_rows(p_arr[None, :], q_arr[None, :])[0])


def sample_divergence(record: DivergenceRecord, tau: float = 1.0) -> SampleDivergence:
    """Per-token JSD list and mean for one divergence record.

    Form-(b) records pass through; form-(a) records are reduced with the
    batched JSD kernel. tau is accepted for interface symmetry: form-(a)
    file records already hold probabilities (the producer applies the
    temperature), so it is unused here.
    """
    del tau
    if record.y_tokens < 1:
        raise ValueError("record has no output tokens")
    if record.per_token_jsd is not None:
        values = tuple(float(v) for v in record.per_token_jsd)
    else:
        values = tuple(float(v) for v in jsd_rows(record.p_rows, record.q_rows))
    total = 0.0
    for v in values:
        total += v
    return SampleDivergence(id=record.id, per_token_jsd=values, mean_jsd=total / len(values))


def cluster_cds(
    clusters: list[list[int]], divergences: list[SampleDivergence]
) -> list[ClusterCDS]:
    """Mean member divergence per cluster, in member-index order.

    clusters holds corpus indices; divergences is corpus-ordered.
    """
    out: list[ClusterCDS] = []
    for cluster_idx, members in enumerate(clusters):
        if not members:
            raise ValueError(f"cluster {cluster_idx} is empty")
        total = 0.0
        for idx in members:
            total += divergences[idx].mean_jsd
        out.append(ClusterCDS(cluster=cluster_idx, cds=total / len(members), members=len(members)))
    return out


def computational_cost(sample: InstructionSample) -> int:
    total = sample.x_tokens + sample.y_tokens
    if total < 2:
        raise ValueError("x_tokens + y_tokens must be >= 2")
    return total * total


def ies(divergence: SampleDivergence, sample: InstructionSample) -> EfficiencyScore:
    cost = computational_cost(sample)
    return EfficiencyScore(
        id=sample.id,
        mean_jsd=divergence.mean_jsd,
        cost=cost,
        ies=divergence.mean_jsd / math.log(cost),
    )
