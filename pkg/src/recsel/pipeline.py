"""Stage orchestration: manifold -> cluster -> scoring -> allocation -> selection."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence, TypeVar

import numpy as np

from . import cluster, concepts, degradation, manifold, selector
from .corpus import (
    DivergenceRecord,
    EmbeddingSet,
    InstructionSample,
    PipelineConfig,
    load_corpus,
    load_divergence_log,
    load_embeddings,
    write_manifest,
)
from .errors import RecselError

T = TypeVar("T")


@dataclass
class PipelineArtifacts:
    config: PipelineConfig
    n_samples: int
    sigma: float
    t_opt: float
    coords: manifold.ManifoldCoords
    search: cluster.ClusterSearch
    clustering: cluster.Clustering
    divergences: list[degradation.SampleDivergence]
    cds: list[degradation.ClusterCDS]
    scores: list[degradation.EfficiencyScore]
    allocation: selector.BudgetAllocation | None
    result: selector.SelectionResult | None
    manifest: dict[str, Any] | None
    timings: dict[str, float]


def _staged(stage: str, fn: Callable[..., T], *args: Any, **kwargs: Any) -> T:
    try:
        return fn(*args, **kwargs)
    except RecselError as exc:
        raise type(exc)(f"{stage}: {exc}") from exc


def manifold_stage(
    embeddings: EmbeddingSet, config: PipelineConfig
) -> tuple[manifold.KernelSpectrum, float, manifold.ManifoldCoords]:
    vectors = embeddings.vectors
    distances = manifold.pairwise_distances(vectors)
    adjacency, sigma = manifold.build_adjacency(distances)
    laplacian = manifold.normalized_laplacian(adjacency)
    spectrum = manifold.spectral_decompose(laplacian, sigma)
    t_opt = manifold.select_diffusion_time(spectrum, config.t_grid)
    n, dim_e = vectors.shape
    d_eff = max(1, min(config.d, dim_e, n - 1))
    coords = manifold.kernel_coords(spectrum, d_eff, t_opt)
    return spectrum, t_opt, coords


def cluster_stage(
    coords: manifold.ManifoldCoords, config: PipelineConfig
) -> tuple[cluster.ClusterSearch, cluster.Clustering]:
    similarity, _sigma_s = cluster.similarity_matrix(coords)
    n = similarity.shape[0]
    k_max = min(config.k_max, n - 1)
    k_min = min(config.k_min, k_max)
    search = cluster.select_num_clusters(
        similarity, k_min=k_min, k_max=k_max, epsilon_k=config.epsilon_K, seed=config.seed
    )
    clustering = cluster.assign_clusters(search.factors.w)
    return search, clustering


def scoring_stage(
    corpus: Sequence[InstructionSample],
    records: Sequence[DivergenceRecord],
    clustering: cluster.Clustering,
    config: PipelineConfig,
) -> tuple[
    list[degradation.SampleDivergence],
    list[degradation.ClusterCDS],
    list[degradation.EfficiencyScore],
]:
    divergences = [degradation.sample_divergence(rec, config.tau) for rec in records]
    members = [list(m) for m in clustering.clusters]
    cds_list = degradation.cluster_cds(members, divergences)
    scores = [degradation.ies(divergences[i], corpus[i]) for i in range(len(corpus))]
    return divergences, cds_list, scores


def selection_stage(
    corpus: Sequence[InstructionSample],
    clustering: cluster.Clustering,
    cds_list: Sequence[degradation.ClusterCDS],
    scores: Sequence[degradation.EfficiencyScore],
    config: PipelineConfig,
) -> tuple[selector.BudgetAllocation, selector.SelectionResult, dict[str, Any]]:
    budget = config.resolve_budget(len(corpus))
    cds_values = [c.cds for c in cds_list]
    sizes = [len(m) for m in clustering.clusters]
    allocation = selector.allocate_budget(cds_values, sizes, budget)
    stopwords = concepts.load_stopwords()
    concept_sets = [
        concepts.extract_concepts(
            s.instruction,
            s.output,
            stopwords,
            max_concepts=config.max_concepts,
            min_words=config.min_phrase_words,
            max_words=config.max_phrase_words,
        )
        for s in corpus
    ]
    result = selector.greedy_select(
        clusters=[list(m) for m in clustering.clusters],
        ids=[s.id for s in corpus],
        cds_values=cds_values,
        allocation=allocation,
        ies_values=[sc.ies for sc in scores],
        costs=[sc.cost for sc in scores],
        concept_sets=concept_sets,
        cost_budget=config.cost_budget,
        theta=config.theta,
    )
    manifest = selector.build_manifest(
        result=result,
        allocation=allocation,
        cds_values=cds_values,
        sizes=sizes,
        seed=config.seed,
        config_fingerprint=config.fingerprint(),
        cost_budget=config.cost_budget,
    )
    return allocation, result, manifest


def run(
    config: PipelineConfig,
    corpus_path: str | Path,
    embeddings_path: str | Path,
    divergences_path: str | Path | None,
    through: str = "select",
) -> PipelineArtifacts:
    """Execute the pipeline up to `through` ('cluster', 'score', or 'select')."""
    if through not in ("cluster", "score", "select"):
        raise ValueError(f"unknown pipeline stage {through!r}")
    config.validate()
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    corpus = _staged("corpus", load_corpus, corpus_path)
    embeddings = _staged("corpus", load_embeddings, embeddings_path, corpus)
    records: list[DivergenceRecord] = []
    if through in ("score", "select"):
        if divergences_path is None:
            raise ValueError("divergences_path is required beyond the cluster stage")
        records = _staged("corpus", load_divergence_log, divergences_path, corpus)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    spectrum, t_opt, coords = _staged("manifold", manifold_stage, embeddings, config)
    timings["manifold"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    search, clustering = _staged("cluster", cluster_stage, coords, config)
    timings["cluster"] = time.perf_counter() - t0

    artifacts = PipelineArtifacts(
        config=config,
        n_samples=len(corpus),
        sigma=spectrum.sigma,
        t_opt=t_opt,
        coords=coords,
        search=search,
        clustering=clustering,
        divergences=[],
        cds=[],
        scores=[],
        allocation=None,
        result=None,
        manifest=None,
        timings=timings,
    )
    if through == "cluster":
        return artifacts

    t0 = time.perf_counter()
    divergences, cds_list, scores = _staged(
        "degradation", scoring_stage, corpus, records, clustering, config
    )
    artifacts.divergences = divergences
    artifacts.cds = cds_list
    artifacts.scores = scores
    timings["degradation"] = time.perf_counter() - t0
    if through == "score":
        return artifacts

    t0 = time.perf_counter()
    allocation, result, manifest = _staged(
        "selection", selection_stage, corpus, clustering, cds_list, scores, config
    )
    artifacts.allocation = allocation
    artifacts.result = result
    artifacts.manifest = manifest
    timings["selection"] = time.perf_counter() - t0
    return artifacts


def build_report(artifacts: PipelineArtifacts) -> dict[str, Any]:
    """Human-readable run summary; every figure restates manifest or input data."""
    report: dict[str, Any] = {
        "config": artifacts.config.to_dict(),
        "config_fingerprint": artifacts.config.fingerprint(),
        "n_samples": artifacts.n_samples,
        "manifold": {
            "sigma": artifacts.sigma,
            "t_opt": artifacts.t_opt,
            "dimensions": int(artifacts.coords.coords.shape[1]),
        },
        "cluster_search": {
            "error_curve": [[k, err] for k, err in artifacts.search.errors],
            "chosen_k": artifacts.search.n_clusters,
            "n_clusters": artifacts.clustering.n_clusters,
            "sizes": [len(m) for m in artifacts.clustering.clusters],
        },
        "timings": artifacts.timings,
    }
    if artifacts.cds:
        report["degradation"] = [
            {"cluster": c.cluster, "size": c.members, "cds": c.cds} for c in artifacts.cds
        ]
    if artifacts.manifest is not None:
        reasons = {reason: 0 for reason in ("inconsistent", "cost_budget", "cluster_budget")}
        for rec in artifacts.manifest["records"]:
            if rec["decision"] == "rejected":
                reasons[rec["reason"]] += 1
        graph = artifacts.result.graph if artifacts.result is not None else None
        report["selection"] = {
            "budget": artifacts.manifest["budget"],
            "selected": len(artifacts.manifest["selected"]),
            "cumulative_cost": artifacts.manifest["cumulative_cost"],
            "rejections": reasons,
            "allocation": artifacts.manifest["allocations"],
            "allocation_log": list(artifacts.allocation.log) if artifacts.allocation else [],
        }
        report["ccg"] = {
            "vertices": graph.n_vertices() if graph else 0,
            "edges": graph.n_edges() if graph else 0,
        }
    return report


def run_pipeline(
    config: PipelineConfig,
    corpus_path: str | Path,
    embeddings_path: str | Path,
    divergences_path: str | Path,
    out_dir: str | Path,
) -> tuple[Path, Path]:
    """Full run; writes manifest.json and report.json, cleaning up on failure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    report_path = out / "report.json"
    written: list[Path] = []
    try:
        artifacts = run(config, corpus_path, embeddings_path, divergences_path, "select")
        assert artifacts.manifest is not None
        written.append(manifest_path)
        write_manifest(artifacts.manifest, manifest_path)
        report = build_report(artifacts)
        written.append(report_path)
        report_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return manifest_path, report_path
