"""Synthetic data generators and desk-scale verification oracles.

The oracle path deliberately re-implements scoring, allocation, and the
greedy walk in plain Python against the selection rules alone; it shares
only the manifest serialization contract with the engine. Generators are
pure functions of their seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import degradation, selector
from .corpus import (
    MANIFEST_SCHEMA,
    DivergenceRecord,
    EmbeddingSet,
    InstructionSample,
)

_STOPWORD_TEXTS = (
    "it was the of and to",
    "about the and of in",
    "is was to for it the",
    "on with as by the and",
)

ORACLE_MAX_N = 30


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int = 0
    k_true: int = 3
    points_per_cluster: int = 50
    dim_e: int = 8
    center_spread: float = 10.0
    intra_spread: float = 1.0
    targets: tuple[float, ...] | None = None
    vocab_size: int = 32

    def resolved_targets(self) -> tuple[float, ...]:
        if self.targets is not None:
            if len(self.targets) != self.k_true:
                raise ValueError("targets length must equal k_true")
            for t in self.targets:
                if not 0.0 <= t <= 1.0:
                    raise ValueError(f"target mean divergence {t!r} outside [0, 1]")
            return self.targets
        if self.k_true == 1:
            return (0.5,)
        return tuple(float(v) for v in np.linspace(0.7, 0.1, self.k_true))

    def validate(self) -> None:
        if self.k_true < 1:
            raise ValueError("k_true must be >= 1")
        if self.points_per_cluster < 1:
            raise ValueError("points_per_cluster must be >= 1")
        if self.center_spread <= 0 or self.intra_spread <= 0:
            raise ValueError("spreads must be positive")
        if self.vocab_size < 4 or self.vocab_size % 2:
            raise ValueError("vocab_size must be an even integer >= 4")
        self.resolved_targets()


def _rng(spec_seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((spec_seed & 0x7FFFFFFF, stream)))


def _sample_id(i: int) -> str:
    return f"s{i:05d}"


def gen_corpus(spec: SyntheticSpec) -> list[InstructionSample]:
    """Concept-free samples (stopword-only text) with varied token counts."""
    spec.validate()
    rng = _rng(spec.seed, 1)
    n = spec.k_true * spec.points_per_cluster
    samples: list[InstructionSample] = []
    for i in range(n):
        x_tokens = int(rng.integers(3, 16))
        y_tokens = int(rng.integers(3, 16))
        samples.append(
            InstructionSample(
                id=_sample_id(i),
                instruction=_STOPWORD_TEXTS[i % len(_STOPWORD_TEXTS)],
                output=_STOPWORD_TEXTS[(i + 1) % len(_STOPWORD_TEXTS)],
                x_tokens=x_tokens,
                y_tokens=y_tokens,
            )
        )
    return samples


def gen_blobs(spec: SyntheticSpec) -> tuple[EmbeddingSet, np.ndarray]:
    """Isotropic Gaussian blobs; returns embeddings plus true labels."""
    spec.validate()
    rng = _rng(spec.seed, 2)
    centers = rng.normal(0.0, spec.center_spread, size=(spec.k_true, spec.dim_e))
    rows: list[np.ndarray] = []
    labels: list[int] = []
    for k in range(spec.k_true):
        block = rng.normal(0.0, spec.intra_spread, size=(spec.points_per_cluster, spec.dim_e))
        rows.append(centers[k] + block)
        labels.extend([k] * spec.points_per_cluster)
    vectors = np.vstack(rows)
    ids = tuple(_sample_id(i) for i in range(vectors.shape[0]))
    return EmbeddingSet(ids=ids, vectors=vectors), np.array(labels, dtype=np.int64)


def _jsd_matrix(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    m = 0.5 * (p + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(p > 0.0, p * np.log2(np.where(p > 0.0, p / m, 1.0)), 0.0)
        right = np.where(q > 0.0, q * np.log2(np.where(q > 0.0, q / m, 1.0)), 0.0)
    return np.clip(0.5 * (left.sum(axis=1) + right.sum(axis=1)), 0.0, 1.0)


def _solve_mix(p: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-row mixing weight alpha with JSD(p, (1-a) p + a shifted) = target.

    p rows have support on the low half of the vocabulary; the shifted copy
    occupies the high half, so alpha sweeps JSD continuously from 0 to 1.
    Exact endpoints are pinned so targets 0 and 1 reproduce the identical
    and disjoint-support cases bit for bit.
    """
    shifted = np.roll(p, p.shape[1] // 2, axis=1)
    lo = np.zeros(p.shape[0])
    hi = np.ones(p.shape[0])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        q = (1.0 - mid)[:, None] * p + mid[:, None] * shifted
        val = _jsd_matrix(p, q)
        above = val >= targets
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return np.where(targets <= 0.0, 0.0, np.where(targets >= 1.0, 1.0, hi))


def gen_divergences(
    spec: SyntheticSpec,
    corpus: Sequence[InstructionSample],
    labels: np.ndarray,
) -> tuple[list[DivergenceRecord], list[DivergenceRecord]]:
    """Distribution pairs whose per-token JSD hits each cluster's target.

    Returns (form_a_records, form_b_records) over the same underlying pairs.
    """
    spec.validate()
    if len(corpus) != len(labels):
        raise ValueError("corpus and labels must align")
    rng = _rng(spec.seed, 3)
    targets = spec.resolved_targets()
    vocab = spec.vocab_size
    half = vocab // 2
    token_counts = [s.y_tokens for s in corpus]
    total_tokens = sum(token_counts)
    p = np.zeros((total_tokens, vocab))
    p[:, :half] = rng.uniform(0.1, 1.0, size=(total_tokens, half))
    p[:, :half] /= p[:, :half].sum(axis=1, keepdims=True)
    token_targets = np.repeat(
        np.array([targets[labels[i]] for i in range(len(corpus))]), token_counts
    )
    alpha = _solve_mix(p, token_targets)
    shifted = np.roll(p, half, axis=1)
    q = (1.0 - alpha)[:, None] * p + alpha[:, None] * shifted
    per_token = _jsd_matrix(p, q)
    form_a: list[DivergenceRecord] = []
    form_b: list[DivergenceRecord] = []
    start = 0
    for i, sample in enumerate(corpus):
        stop = start + token_counts[i]
        form_a.append(
            DivergenceRecord(
                id=sample.id,
                x_tokens=sample.x_tokens,
                y_tokens=sample.y_tokens,
                p_rows=p[start:stop].copy(),
                q_rows=q[start:stop].copy(),
            )
        )
        form_b.append(
            DivergenceRecord(
                id=sample.id,
                x_tokens=sample.x_tokens,
                y_tokens=sample.y_tokens,
                per_token_jsd=tuple(float(v) for v in per_token[start:stop]),
            )
        )
        start = stop
    return form_a, form_b


def write_interchange(
    spec: SyntheticSpec, out_dir: str | Path, form: str = "a"
) -> dict[str, Path]:
    """Write corpus/embeddings/divergences JSONL files plus a truth sidecar."""
    if form not in ("a", "b"):
        raise ValueError("form must be 'a' or 'b'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = gen_corpus(spec)
    embeddings, labels = gen_blobs(spec)
    form_a, form_b = gen_divergences(spec, corpus, labels)
    paths = {
        "corpus": out / "corpus.jsonl",
        "embeddings": out / "embeddings.jsonl",
        "divergences": out / "divergences.jsonl",
        "labels": out / "labels.json",
    }
    with paths["corpus"].open("w", encoding="utf-8") as fh:
        for s in corpus:
            fh.write(json.dumps({
                "id": s.id, "instruction": s.instruction, "output": s.output,
                "x_tokens": s.x_tokens, "y_tokens": s.y_tokens,
            }) + "\n")
    with paths["embeddings"].open("w", encoding="utf-8") as fh:
        for i, s in enumerate(corpus):
            fh.write(json.dumps({
                "id": s.id, "vector": [float(v) for v in embeddings.vectors[i]],
            }) + "\n")
    with paths["divergences"].open("w", encoding="utf-8") as fh:
        if form == "a":
            for rec in form_a:
                pairs = [
                    [[float(v) for v in rec.p_rows[t]], [float(v) for v in rec.q_rows[t]]]
                    for t in range(rec.y_tokens)
                ]
                fh.write(json.dumps({
                    "id": rec.id, "x_tokens": rec.x_tokens, "y_tokens": rec.y_tokens,
                    "token_pairs": pairs,
                }) + "\n")
        else:
            for rec in form_b:
                fh.write(json.dumps({
                    "id": rec.id, "x_tokens": rec.x_tokens, "y_tokens": rec.y_tokens,
                    "per_token_jsd": list(rec.per_token_jsd),
                }) + "\n")
    paths["labels"].write_text(
        json.dumps({_sample_id(i): int(labels[i]) for i in range(len(labels))}, indent=2)
        + "\n",
        encoding="utf-8",
    )
    return paths


def adjusted_rand_index(labels_a: Sequence[int], labels_b: Sequence[int]) -> float:
    """Adjusted Rand index between two labelings, computed from scratch."""
    if len(labels_a) != len(labels_b):
        raise ValueError("labelings must have equal length")
    n = len(labels_a)
    if n == 0:
        raise ValueError("labelings must be nonempty")
    table: dict[tuple[int, int], int] = {}
    rows: dict[int, int] = {}
    cols: dict[int, int] = {}
    for a, b in zip(labels_a, labels_b):
        table[(a, b)] = table.get((a, b), 0) + 1
        rows[a] = rows.get(a, 0) + 1
        cols[b] = cols.get(b, 0) + 1

    def comb2(x: int) -> int:
        return x * (x - 1) // 2

    sum_cells = sum(comb2(v) for v in table.values())
    sum_rows = sum(comb2(v) for v in rows.values())
    sum_cols = sum(comb2(v) for v in cols.values())
    total = comb2(n)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return (sum_cells - expected) / (max_index - expected)


@dataclass(frozen=True)
class OracleSample:
    id: str
    x_tokens: int
    y_tokens: int
    mean_jsd: float
    concepts: tuple[str, ...]


@dataclass(frozen=True)
class OracleInstance:
    samples: tuple[OracleSample, ...]
    clusters: tuple[tuple[int, ...], ...]
    budget: int
    cost_budget: float
    theta: float
    seed: int
    config_fingerprint: str


_PHRASE_POOL = (
    "neural network",
    "neural networks",
    "quantum computing",
    "quantum computer",
    "deep learning",
    "graph theory",
    "matrix factorization",
    "data augmentation",
    "transfer learning",
    "speech recognition",
    "image segmentation",
    "code generation",
)


def gen_oracle_instance(seed: int) -> OracleInstance:
    """Small random selection instance exercising every rejection path."""
    rng = _rng(seed, 4)
    n = int(rng.integers(5, ORACLE_MAX_N + 1))
    k = int(rng.integers(1, min(4, n) + 1))
    perm = list(rng.permutation(n))
    bounds = sorted(rng.choice(np.arange(1, n), size=k - 1, replace=False)) if k > 1 else []
    clusters: list[tuple[int, ...]] = []
    prev = 0
    for b in list(bounds) + [n]:
        clusters.append(tuple(sorted(perm[prev:int(b)])))
        prev = int(b)
    concept_free = bool(rng.random() < 0.3)
    samples: list[OracleSample] = []
    for i in range(n):
        if concept_free:
            concepts: tuple[str, ...] = ()
        else:
            count = int(rng.integers(0, 4))
            picks = rng.choice(len(_PHRASE_POOL), size=count, replace=False)
            concepts = tuple(_PHRASE_POOL[j] for j in picks)
        samples.append(
            OracleSample(
                id=_sample_id(i),
                x_tokens=int(rng.integers(1, 12)),
                y_tokens=int(rng.integers(1, 12)),
                mean_jsd=float(rng.uniform(0.0, 1.0)),
                concepts=concepts,
            )
        )
    budget = int(rng.integers(1, n))
    if rng.random() < 0.5:
        cost_budget = math.inf
    else:
        total_cost = sum((s.x_tokens + s.y_tokens) ** 2 for s in samples)
        cost_budget = float(rng.uniform(0.05, 0.7)) * total_cost
    return OracleInstance(
        samples=tuple(samples),
        clusters=tuple(clusters),
        budget=budget,
        cost_budget=cost_budget,
        theta=0.75,
        seed=seed,
        config_fingerprint=f"{seed & 0xFFFFFFFF:08x}fuzz",
    )


def _oracle_trigrams(phrase: str) -> list[str]:
    if len(phrase) < 3:
        return [phrase]
    return [phrase[i:i + 3] for i in range(len(phrase) - 2)]


def _oracle_similarity(a: str, b: str) -> float:
    ga = _oracle_trigrams(a)
    gb = _oracle_trigrams(b)
    remaining = list(gb)
    inter = 0
    for g in ga:
        if g in remaining:
            remaining.remove(g)
            inter += 1
    union = len(ga) + len(gb) - inter
    return inter / union


def oracle_select(instance: OracleInstance) -> dict[str, Any]:
    """Plain replay of scoring, allocation, and the greedy walk."""
    n = len(instance.samples)
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle instances are limited to N <= {ORACLE_MAX_N}")
    samples = instance.samples
    costs = [(s.x_tokens + s.y_tokens) * (s.x_tokens + s.y_tokens) for s in samples]
    ies = [s.mean_jsd / math.log(costs[i]) for i, s in enumerate(samples)]
    cds: list[float] = []
    for members in instance.clusters:
        acc = 0.0
        for i in members:
            acc += samples[i].mean_jsd
        cds.append(acc / len(members))
    sizes = [len(members) for members in instance.clusters]

    total = 0.0
    for v in cds:
        total += v
    if total == 0.0:
        weights = [float(s) for s in sizes]
        total = float(sum(sizes))
    else:
        weights = cds
    fractions = [instance.budget * weights[k] / total for k in range(len(weights))]
    quotas = [min(math.floor(fractions[k]), sizes[k]) for k in range(len(weights))]
    leftover = instance.budget - sum(quotas)
    while leftover > 0:
        candidates = [k for k in range(len(quotas)) if quotas[k] < sizes[k]]
        if not candidates:
            break
        best = candidates[0]
        for k in candidates[1:]:
            if fractions[k] - quotas[k] > fractions[best] - quotas[best]:
                best = k
        quotas[best] += 1
        leftover -= 1

    order = sorted(range(len(cds)), key=lambda k: (-cds[k], k))
    vertices: set[str] = set()
    edges: set[tuple[str, str]] = set()
    selected: list[str] = []
    records: list[dict[str, Any]] = []
    realized = [0 for _ in instance.clusters]
    cumulative = 0.0
    for k in order:
        members = sorted(instance.clusters[k], key=lambda i: (-ies[i], i))
        for i in members:
            rec: dict[str, Any] = {
                "id": samples[i].id,
                "cluster": k,
                "ies": ies[i],
                "decision": "rejected",
                "reason": None,
            }
            if realized[k] >= quotas[k]:
                rec["reason"] = "cluster_budget"
                records.append(rec)
                continue
            canonical: list[str] = []
            for phrase in samples[i].concepts:
                norm = " ".join(phrase.lower().split())
                best_v = None
                best_sim = -1.0
                for v in sorted(vertices):
                    sim = _oracle_similarity(norm, v)
                    if sim >= instance.theta and sim > best_sim:
                        best_v = v
                        best_sim = sim
                label = best_v if best_v is not None else norm
                if label not in canonical:
                    canonical.append(label)
            known = sorted(c for c in canonical if c in vertices)
            consistent = True
            for a_idx in range(len(known)):
                for b_idx in range(a_idx + 1, len(known)):
                    pair = (known[a_idx], known[b_idx])
                    if pair not in edges:
                        consistent = False
                        break
                if not consistent:
                    break
            if not consistent:
                rec["reason"] = "inconsistent"
                records.append(rec)
                continue
            if cumulative + costs[i] > instance.cost_budget:
                rec["reason"] = "cost_budget"
                records.append(rec)
                continue
            for c in canonical:
                vertices.add(c)
            for a_idx in range(len(canonical)):
                for b_idx in range(a_idx + 1, len(canonical)):
                    a, b = canonical[a_idx], canonical[b_idx]
                    if a != b:
                        edges.add((a, b) if a < b else (b, a))
            cumulative = cumulative + costs[i]
            realized[k] += 1
            selected.append(samples[i].id)
            rec["decision"] = "selected"
            records.append(rec)

    return {
        "schema": MANIFEST_SCHEMA,
        "seed": instance.seed,
        "config_fingerprint": instance.config_fingerprint,
        "budget": instance.budget,
        "cost_budget": None if math.isinf(instance.cost_budget) else instance.cost_budget,
        "n_clusters": len(instance.clusters),
        "allocations": [
            {
                "cluster": k,
                "size": sizes[k],
                "cds": cds[k],
                "quota": quotas[k],
                "realized": realized[k],
            }
            for k in range(len(instance.clusters))
        ],
        "selected": selected,
        "cumulative_cost": cumulative,
        "records": records,
    }


def engine_select_instance(instance: OracleInstance) -> dict[str, Any]:
    """Run the production modules on an oracle instance, mirroring its wiring."""
    corpus = [
        InstructionSample(
            id=s.id, instruction="", output="",
            x_tokens=s.x_tokens, y_tokens=s.y_tokens,
        )
        for s in instance.samples
    ]
    divergences = [
        degradation.SampleDivergence(id=s.id, per_token_jsd=(s.mean_jsd,), mean_jsd=s.mean_jsd)
        for s in instance.samples
    ]
    clusters = [list(members) for members in instance.clusters]
    cds_list = degradation.cluster_cds(clusters, divergences)
    cds_values = [c.cds for c in cds_list]
    sizes = [len(m) for m in clusters]
    scores = [degradation.ies(divergences[i], corpus[i]) for i in range(len(corpus))]
    allocation = selector.allocate_budget(cds_values, sizes, instance.budget)
    result = selector.greedy_select(
        clusters=clusters,
        ids=[s.id for s in corpus],
        cds_values=cds_values,
        allocation=allocation,
        ies_values=[sc.ies for sc in scores],
        costs=[sc.cost for sc in scores],
        concept_sets=[list(s.concepts) for s in instance.samples],
        cost_budget=instance.cost_budget,
        theta=instance.theta,
    )
    return selector.build_manifest(
        result=result,
        allocation=allocation,
        cds_values=cds_values,
        sizes=sizes,
        seed=instance.seed,
        config_fingerprint=instance.config_fingerprint,
        cost_budget=instance.cost_budget,
    )
