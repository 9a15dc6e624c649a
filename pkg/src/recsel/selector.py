"""Budget allocation and the greedy consistency-gated selection walk."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

from .concepts import (
    DEFAULT_THETA,
    ConceptGraph,
    canonicalize_concepts,
    is_consistent,
    update_ccg,
)
from .corpus import MANIFEST_SCHEMA
from .errors import ConfigError


@dataclass(frozen=True)
class BudgetAllocation:
    """Integer per-cluster quotas plus the fractional shares they came from."""

    quotas: tuple[int, ...]
    fractions: tuple[float, ...]
    budget: int
    log: tuple[str, ...]


@dataclass
class SelectionResult:
    selected: list[str]
    cumulative_cost: float
    records: list[dict[str, Any]]
    realized: list[int]
    order: list[int]
    graph: ConceptGraph


def allocate_budget(
    cds_values: Sequence[float], sizes: Sequence[int], budget: int
) -> BudgetAllocation:
    """Proportional floors, then largest-remainder redistribution with caps.

    Quotas never exceed cluster sizes; capped overflow re-enters the pool.
    A cluster's standing priority for a leftover unit is its fractional
    share minus what it already holds (ties go to the lower index). When
    every CDS is zero the shares fall back to cluster sizes.
    """
    if len(cds_values) != len(sizes) or not sizes:
        raise ValueError("cds_values and sizes must be equal-length and nonempty")
    if budget < 1:
        raise ConfigError("budget must be at least 1")
    n_total = 0
    for size in sizes:
        if size < 1:
            raise ValueError("cluster sizes must be positive")
        n_total += size
    if budget >= n_total:
        raise ConfigError(
            f"budget {budget} must be smaller than the corpus size {n_total}"
        )
    for value in cds_values:
        if not math.isfinite(value) or value < 0.0:
            raise ValueError(f"CDS values must be finite and nonnegative, got {value!r}")
    total = 0.0
    for value in cds_values:
        total += value
    log: list[str] = []
    if total == 0.0:
        weights: Sequence[float] = [float(s) for s in sizes]
        total = float(n_total)
        log.append("all CDS zero; falling back to size-proportional shares")
    else:
        weights = cds_values
    fractions: list[float] = []
    for k in range(len(weights)):
        fractions.append(budget * weights[k] / total)
    quotas: list[int] = []
    assigned = 0
    for k, frac in enumerate(fractions):
        base = math.floor(frac)
        if base > sizes[k]:
            log.append(f"cluster {k} capped at size {sizes[k]} (floor was {base})")
            base = sizes[k]
        quotas.append(base)
        assigned += base
    leftover = budget - assigned
    while leftover > 0:
        best = -1
        best_priority = -math.inf
        for k in range(len(quotas)):
            if quotas[k] >= sizes[k]:
                continue
            priority = fractions[k] - quotas[k]
            if priority > best_priority:
                best = k
                best_priority = priority
        if best < 0:
            log.append(f"capacity exhausted with {leftover} budget units unassigned")
            break
        quotas[best] += 1
        leftover -= 1
        log.append(f"leftover unit -> cluster {best}")
    return BudgetAllocation(
        quotas=tuple(quotas),
        fractions=tuple(fractions),
        budget=budget,
        log=tuple(log),
    )


def order_clusters(cds_values: Sequence[float]) -> list[int]:
    """Cluster processing order: descending CDS, ties by ascending index."""
    return sorted(range(len(cds_values)), key=lambda k: (-cds_values[k], k))


def greedy_select(
    clusters: Sequence[Sequence[int]],
    ids: Sequence[str],
    cds_values: Sequence[float],
    allocation: BudgetAllocation,
    ies_values: Sequence[float],
    costs: Sequence[float],
    concept_sets: Sequence[Sequence[str]],
    cost_budget: float = math.inf,
    theta: float = DEFAULT_THETA,
) -> SelectionResult:
    """Walk each cluster's members by descending efficiency, gating on the
    shared concept graph and the cumulative cost ceiling.

    Clusters are visited in descending-CDS order. Every member gets a
    decision record: members past the cluster quota are rejected as
    cluster_budget without a consistency check; under quota, consistency
    is judged before cost.
    """
    if len(clusters) != len(allocation.quotas):
        raise ValueError("allocation does not match the clustering")
    graph = ConceptGraph()
    selected: list[str] = []
    records: list[dict[str, Any]] = []
    realized = [0 for _ in clusters]
    cumulative = 0.0
    order = order_clusters(cds_values)
    for k in order:
        members = sorted(clusters[k], key=lambda i: (-ies_values[i], i))
        quota = allocation.quotas[k]
        for i in members:
            record: dict[str, Any] = {
                "id": ids[i],
                "cluster": k,
                "ies": ies_values[i],
                "decision": "rejected",
                "reason": None,
            }
            if realized[k] >= quota:
                record["reason"] = "cluster_budget"
                records.append(record)
                continue
            canonical = canonicalize_concepts(list(concept_sets[i]), graph, theta)
            ok, _witness = is_consistent(canonical, graph)
            if not ok:
                record["reason"] = "inconsistent"
                records.append(record)
                continue
            if cumulative + costs[i] > cost_budget:
                record["reason"] = "cost_budget"
                records.append(record)
                continue
            update_ccg(graph, canonical)
            cumulative = cumulative + costs[i]
            realized[k] += 1
            selected.append(ids[i])
            record["decision"] = "selected"
            records.append(record)
    return SelectionResult(
        selected=selected,
        cumulative_cost=cumulative,
        records=records,
        realized=realized,
        order=order,
        graph=graph,
    )


def build_manifest(
    result: SelectionResult,
    allocation: BudgetAllocation,
    cds_values: Sequence[float],
    sizes: Sequence[int],
    seed: int,
    config_fingerprint: str,
    cost_budget: float = math.inf,
) -> dict[str, Any]:
    """Assemble the manifest document in its canonical field layout."""
    allocations = []
    for k in range(len(sizes)):
        allocations.append(
            {
                "cluster": k,
                "size": int(sizes[k]),
                "cds": cds_values[k],
                "quota": allocation.quotas[k],
                "realized": result.realized[k],
            }
        )
    return {
        "schema": MANIFEST_SCHEMA,
        "seed": seed,
        "config_fingerprint": config_fingerprint,
        "budget": allocation.budget,
        "cost_budget": None if math.isinf(cost_budget) else cost_budget,
        "n_clusters": len(sizes),
        "allocations": allocations,
        "selected": list(result.selected),
        "cumulative_cost": result.cumulative_cost,
        "records": result.records,
    }
