from __future__ import annotations

import math

import numpy as np
import pytest

from recsel import corpus, selector
from recsel.errors import ConfigError


def test_allocate_equal_cds_splits_evenly():
    alloc = selector.allocate_budget([0.4, 0.4], [20, 20], 10)
    assert alloc.quotas == (5, 5)


def test_allocate_proportional_fixture():
    alloc = selector.allocate_budget([0.3, 0.1], [50, 50], 10)
    assert alloc.quotas == (8, 2)
    assert alloc.fractions == (7.5, 2.5)


def test_allocate_cap_redirects_overflow():
    alloc = selector.allocate_budget([0.5, 0.1], [3, 20], 10)
    assert alloc.quotas == (3, 7)
    assert any("capped" in line for line in alloc.log)


def test_allocate_scale_invariance_exact():
    base = selector.allocate_budget([0.32, 0.11, 0.07], [30, 30, 30], 17)
    for factor in (2.0, 0.5, 10.0):
        scaled = selector.allocate_budget(
            [factor * 0.32, factor * 0.11, factor * 0.07], [30, 30, 30], 17
        )
        assert scaled.quotas == base.quotas


def test_allocate_total_is_budget_or_capacity():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n_clusters = int(rng.integers(1, 6))
        sizes = [int(rng.integers(1, 12)) for _ in range(n_clusters)]
        capacity = sum(sizes)
        if capacity < 2:
            continue
        budget = int(rng.integers(1, capacity))
        cds = [float(rng.uniform(0, 1)) for _ in range(n_clusters)]
        alloc = selector.allocate_budget(cds, sizes, budget)
        assert sum(alloc.quotas) == min(budget, capacity)
        assert all(q <= s for q, s in zip(alloc.quotas, sizes))


def test_allocate_zero_cds_falls_back_to_sizes():
    alloc = selector.allocate_budget([0.0, 0.0], [30, 10], 8)
    assert alloc.quotas == (6, 2)
    assert any("falling back" in line for line in alloc.log)


def test_allocate_leftover_tie_goes_to_lower_index():
    # fractions (2.5, 2.5) leave one unit; both priorities are 0.5.
    alloc = selector.allocate_budget([0.5, 0.5], [10, 10], 5)
    assert alloc.quotas == (3, 2)


def test_allocate_guards():
    with pytest.raises(ConfigError):
        selector.allocate_budget([0.5], [10], 0)
    with pytest.raises(ConfigError):
        selector.allocate_budget([0.5, 0.5], [5, 5], 10)
    with pytest.raises(ValueError):
        selector.allocate_budget([0.5], [10, 10], 3)
    with pytest.raises(ValueError):
        selector.allocate_budget([0.5, -0.1], [10, 10], 3)
    with pytest.raises(ValueError):
        selector.allocate_budget([0.5, math.nan], [10, 10], 3)
    with pytest.raises(ValueError):
        selector.allocate_budget([0.5, 0.5], [10, 0], 3)


def test_order_clusters_descending_cds():
    assert selector.order_clusters([0.1, 0.9, 0.5]) == [1, 2, 0]
    assert selector.order_clusters([0.4, 0.4, 0.9]) == [2, 0, 1]


def _tiny_instance():
    ids = ["a", "b", "c", "d", "e", "f"]
    clusters = [[0, 1, 2], [3, 4, 5]]
    cds = [0.2, 0.6]
    ies_values = [0.5, 0.9, 0.1, 0.8, 0.3, 0.7]
    costs = [10.0, 10.0, 10.0, 10.0, 10.0, 10.0]
    concepts = [[] for _ in ids]
    return ids, clusters, cds, ies_values, costs, concepts


def test_greedy_walk_order_and_records():
    ids, clusters, cds, ies_values, costs, concept_sets = _tiny_instance()
    alloc = selector.allocate_budget(cds, [3, 3], 3)
    result = selector.greedy_select(
        clusters, ids, cds, alloc, ies_values, costs, concept_sets
    )
    # Cluster 1 first (higher CDS), members by descending IES within it.
    assert result.order == [1, 0]
    assert [r["id"] for r in result.records] == ["d", "f", "e", "b", "a", "c"]
    assert result.selected == ["d", "f", "b"]
    assert result.realized == [1, 2]
    assert result.cumulative_cost == 30.0
    past_quota = [r for r in result.records if r["reason"] == "cluster_budget"]
    assert [r["id"] for r in past_quota] == ["e", "a", "c"]
    assert all(r["decision"] == "rejected" for r in past_quota)


def test_greedy_inconsistent_rejection_and_graph_growth():
    ids = ["a", "b", "c", "d"]
    clusters = [[0, 1, 2, 3]]
    concept_sets = [
        ["deep learning", "neural network"],
        ["quantum computing", "qubit"],
        # Both concepts are known vertices by now, but no edge links them.
        ["deep learning", "quantum computing"],
        [],
    ]
    alloc = selector.allocate_budget([0.5], [4], 3)
    result = selector.greedy_select(
        clusters, ids, [0.5], alloc, [0.9, 0.8, 0.7, 0.6], [4.0] * 4, concept_sets
    )
    assert result.selected == ["a", "b", "d"]
    reasons = {r["id"]: r["reason"] for r in result.records}
    assert reasons["c"] == "inconsistent"
    assert result.graph.has_edge("deep learning", "neural network")
    assert result.graph.has_edge("quantum computing", "qubit")
    assert not result.graph.has_edge("deep learning", "quantum computing")


def test_greedy_novel_concept_rides_along():
    # A pair of one known vertex and one brand-new concept is consistent;
    # selection then links them with a clique edge.
    ids = ["a", "b"]
    alloc = selector.allocate_budget([0.5], [3], 2)
    result = selector.greedy_select(
        [[0, 1]],
        ids,
        [0.5],
        alloc,
        [0.9, 0.8],
        [4.0, 4.0],
        [["deep learning", "neural network"], ["deep learning", "gradient descent"]],
    )
    assert result.selected == ["a", "b"]
    assert result.graph.has_edge("deep learning", "gradient descent")
    assert not result.graph.has_edge("neural network", "gradient descent")


def test_greedy_cost_budget_skips_but_keeps_walking():
    ids = ["a", "b", "c"]
    clusters = [[0, 1, 2]]
    alloc = selector.allocate_budget([0.5], [3], 2)
    result = selector.greedy_select(
        clusters,
        ids,
        [0.5],
        alloc,
        [0.9, 0.8, 0.7],
        [6.0, 5.0, 1.0],
        [[], [], []],
        cost_budget=7.0,
    )
    # "a" costs 6; "b" would push to 11 > 7 and is skipped; "c" fits at 7.
    assert result.selected == ["a", "c"]
    reasons = {r["id"]: r["reason"] for r in result.records}
    assert reasons["b"] == "cost_budget"
    assert result.cumulative_cost == 7.0


def test_greedy_quota_skip_never_touches_graph():
    ids = ["a", "b"]
    clusters = [[0, 1]]
    alloc = selector.allocate_budget([0.5], [2], 1)
    concept_sets = [["alpha beta"], ["gamma delta"]]
    result = selector.greedy_select(
        clusters, ids, [0.5], alloc, [0.9, 0.8], [4.0, 4.0], concept_sets
    )
    assert result.selected == ["a"]
    assert "gamma delta" not in result.graph.vertices


def test_greedy_ies_tie_breaks_by_index():
    ids = ["a", "b", "c"]
    clusters = [[0, 1, 2]]
    alloc = selector.allocate_budget([0.5], [3], 1)
    result = selector.greedy_select(
        clusters, ids, [0.5], alloc, [0.7, 0.7, 0.7], [4.0, 4.0, 4.0], [[], [], []]
    )
    assert result.selected == ["a"]


def test_greedy_allocation_shape_mismatch():
    alloc = selector.allocate_budget([0.5], [3], 2)
    with pytest.raises(ValueError):
        selector.greedy_select([[0], [1]], ["a", "b"], [0.5, 0.1], alloc, [1, 1], [4, 4], [[], []])


def test_build_manifest_round_trips(tmp_path):
    ids, clusters, cds, ies_values, costs, concept_sets = _tiny_instance()
    alloc = selector.allocate_budget(cds, [3, 3], 3)
    result = selector.greedy_select(
        clusters, ids, cds, alloc, ies_values, costs, concept_sets
    )
    doc = selector.build_manifest(
        result, alloc, cds, [3, 3], seed=7, config_fingerprint="abc123", cost_budget=math.inf
    )
    assert doc["cost_budget"] is None
    assert doc["n_clusters"] == 2
    assert [a["realized"] for a in doc["allocations"]] == [1, 2]
    path = tmp_path / "manifest.json"
    corpus.write_manifest(doc, path)
    assert corpus.read_manifest(path) == doc
    capped = selector.build_manifest(
        result, alloc, cds, [3, 3], seed=7, config_fingerprint="abc123", cost_budget=99.0
    )
    assert capped["cost_budget"] == 99.0
