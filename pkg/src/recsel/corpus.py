"""Interchange data model: corpus, embeddings, divergence logs, manifests.

All files are line-delimited JSON records except the selection manifest,
which is a single JSON document with a fixed key order so that identical
selections serialize to identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, InputError

DEFAULT_T_GRID_POINTS = 25
DEFAULT_T_GRID_LOW = 2.0**-6
DEFAULT_T_GRID_HIGH = 2.0**6

REJECTION_REASONS = ("inconsistent", "cost_budget", "cluster_budget")

_MANIFEST_KEYS = (
    "schema",
    "seed",
    "config_fingerprint",
    "budget",
    "cost_budget",
    "n_clusters",
    "allocations",
    "selected",
    "cumulative_cost",
    "records",
)
_ALLOCATION_KEYS = ("cluster", "size", "cds", "quota", "realized")
_RECORD_KEYS = ("id", "cluster", "ies", "decision", "reason")

MANIFEST_SCHEMA = "selection-manifest/1"


@dataclass(frozen=True)
class InstructionSample:
    id: str
    instruction: str
    output: str
    x_tokens: int
    y_tokens: int


@dataclass(frozen=True)
class EmbeddingSet:
    ids: tuple[str, ...]
    vectors: np.ndarray  # (N, dim_e) float64, corpus order

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class DivergenceRecord:
    """Either per-token JSD values (form b) or raw distribution pairs (form a)."""

    id: str
    x_tokens: int
    y_tokens: int
    per_token_jsd: tuple[float, ...] | None = None
    p_rows: np.ndarray | None = None  # (y_tokens, vocab)
    q_rows: np.ndarray | None = None


def default_t_grid() -> tuple[float, ...]:
    lo = math.log2(DEFAULT_T_GRID_LOW)
    hi = math.log2(DEFAULT_T_GRID_HIGH)
    step = (hi - lo) / (DEFAULT_T_GRID_POINTS - 1)
    return tuple(2.0 ** (lo + i * step) for i in range(DEFAULT_T_GRID_POINTS))


@dataclass
class PipelineConfig:
    tau: float = 1.0
    d: int = 16
    t_grid: tuple[float, ...] = field(default_factory=default_t_grid)
    k_min: int = 2
    k_max: int = 20
    epsilon_K: float = 0.05
    budget: int | None = None
    budget_ratio: float | None = None
    cost_budget: float = math.inf
    theta: float = 0.75
    max_concepts: int = 10
    min_phrase_words: int = 2
    max_phrase_words: int = 4
    seed: int = 0

    def validate(self) -> None:
        if not (isinstance(self.tau, (int, float)) and self.tau > 0):
            raise ConfigError("tau must be positive")
        if not (isinstance(self.d, int) and self.d >= 1):
            raise ConfigError("d must be an integer >= 1")
        grid = tuple(float(t) for t in self.t_grid)
        if not grid:
            raise ConfigError("t_grid must be nonempty")
        if any(not math.isfinite(t) or t <= 0 for t in grid):
            raise ConfigError("t_grid values must be finite and positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("t_grid must be strictly ascending")
        if not (isinstance(self.k_min, int) and isinstance(self.k_max, int)):
            raise ConfigError("k_min and k_max must be integers")
        if not (1 <= self.k_min <= self.k_max):
            raise ConfigError("need 1 <= k_min <= k_max")
        if not (0 < self.epsilon_K < 1):
            raise ConfigError("epsilon_K must be in (0, 1)")
        if (self.budget is None) == (self.budget_ratio is None):
            raise ConfigError("exactly one of budget / budget_ratio must be set")
        if self.budget is not None and not (isinstance(self.budget, int) and self.budget >= 1):
            raise ConfigError("budget must be an integer >= 1")
        if self.budget_ratio is not None and not (0 < self.budget_ratio < 1):
            raise ConfigError("budget_ratio must be in (0, 1)")
        if not (self.cost_budget > 0):
            raise ConfigError("cost_budget must be positive (inf allowed)")
        if not (0 < self.theta <= 1):
            raise ConfigError("theta must be in (0, 1]")
        if not (isinstance(self.max_concepts, int) and self.max_concepts >= 1):
            raise ConfigError("max_concepts must be an integer >= 1")
        ok_words = (
            isinstance(self.min_phrase_words, int)
            and isinstance(self.max_phrase_words, int)
            and 1 <= self.min_phrase_words <= self.max_phrase_words
        )
        if not ok_words:
            raise ConfigError("need 1 <= min_phrase_words <= max_phrase_words")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")

    def resolve_budget(self, n_samples: int) -> int:
        if self.budget is not None:
            budget = self.budget
        else:
            budget = math.floor(self.budget_ratio * n_samples)
        if budget < 1:
            raise ConfigError("resolved budget is < 1")
        if budget >= n_samples:
            raise ConfigError(
                f"budget {budget} must be smaller than the corpus size {n_samples}"
            )
        return budget

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "tau": float(self.tau),
            "d": self.d,
            "t_grid": [float(t) for t in self.t_grid],
            "k_min": self.k_min,
            "k_max": self.k_max,
            "epsilon_K": float(self.epsilon_K),
            "cost_budget": None if math.isinf(self.cost_budget) else float(self.cost_budget),
            "theta": float(self.theta),
            "max_concepts": self.max_concepts,
            "min_phrase_words": self.min_phrase_words,
            "max_phrase_words": self.max_phrase_words,
            "seed": self.seed,
        }
        if self.budget is not None:
            doc["budget"] = self.budget
        else:
            doc["budget_ratio"] = float(self.budget_ratio)
        return doc

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def config_from_dict(doc: dict[str, Any]) -> PipelineConfig:
    known = {
        "tau", "d", "t_grid", "k_min", "k_max", "epsilon_K", "budget",
        "budget_ratio", "cost_budget", "theta", "max_concepts",
        "min_phrase_words", "max_phrase_words", "seed",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict[str, Any] = dict(doc)
    if "t_grid" in kwargs:
        kwargs["t_grid"] = tuple(float(t) for t in kwargs["t_grid"])
    if kwargs.get("cost_budget") is None and "cost_budget" in kwargs:
        kwargs["cost_budget"] = math.inf
    cfg = PipelineConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a single JSON object")
    try:
        return config_from_dict(doc)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def _iter_json_lines(path: str | Path) -> list[tuple[int, dict[str, Any]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise InputError(f"{path}:{lineno}: record must be a JSON object")
        records.append((lineno, obj))
    return records


def _require_int(obj: dict[str, Any], key: str, where: str) -> int:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{where}: field '{key}' must be an integer")
    return value


def _require_str(obj: dict[str, Any], key: str, where: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise InputError(f"{where}: field '{key}' must be a string")
    return value


def load_corpus(path: str | Path) -> list[InstructionSample]:
    rows = _iter_json_lines(path)
    if not rows:
        raise InputError(f"{path}: corpus file is empty")
    samples: list[InstructionSample] = []
    seen: set[str] = set()
    for lineno, obj in rows:
        where = f"{path}:{lineno}"
        for key in ("id", "instruction", "output", "x_tokens", "y_tokens"):
            if key not in obj:
                raise InputError(f"{where}: missing field '{key}'")
        sid = _require_str(obj, "id", where)
        if not sid:
            raise InputError(f"{where}: id must be nonempty")
        if sid in seen:
            raise InputError(f"{where}: duplicate id '{sid}'")
        seen.add(sid)
        x_tokens = _require_int(obj, "x_tokens", where)
        y_tokens = _require_int(obj, "y_tokens", where)
        if x_tokens < 0:
            raise InputError(f"{where}: x_tokens must be >= 0")
        if y_tokens < 1:
            raise InputError(f"{where}: y_tokens must be >= 1")
        if x_tokens + y_tokens < 2:
            raise InputError(f"{where}: x_tokens + y_tokens must be >= 2")
        samples.append(
            InstructionSample(
                id=sid,
                instruction=_require_str(obj, "instruction", where),
                output=_require_str(obj, "output", where),
                x_tokens=x_tokens,
                y_tokens=y_tokens,
            )
        )
    return samples


def load_embeddings(path: str | Path, corpus: list[InstructionSample]) -> EmbeddingSet:
    rows = _iter_json_lines(path)
    by_id: dict[str, list[float]] = {}
    for lineno, obj in rows:
        where = f"{path}:{lineno}"
        sid = _require_str(obj, "id", where)
        if sid in by_id:
            raise InputError(f"{where}: duplicate embedding for id '{sid}'")
        vector = obj.get("vector")
        if not isinstance(vector, list) or not vector:
            raise InputError(f"{where}: field 'vector' must be a nonempty list")
        try:
            vec = [float(v) for v in vector]
        except (TypeError, ValueError) as exc:
            raise InputError(f"{where}: vector has a non-numeric component") from exc
        if any(not math.isfinite(v) for v in vec):
            raise InputError(f"{where}: vector has a non-finite component")
        by_id[sid] = vec
    corpus_ids = [s.id for s in corpus]
    missing = [sid for sid in corpus_ids if sid not in by_id]
    if missing:
        raise InputError(f"{path}: missing embeddings for ids {missing[:5]}")
    extra = sorted(set(by_id) - set(corpus_ids))
    if extra:
        raise InputError(f"{path}: embeddings for unknown ids {extra[:5]}")
    dims = {len(v) for v in by_id.values()}
    if len(dims) != 1:
        raise InputError(f"{path}: inconsistent embedding dimensions {sorted(dims)}")
    matrix = np.array([by_id[sid] for sid in corpus_ids], dtype=np.float64)
    return EmbeddingSet(ids=tuple(corpus_ids), vectors=matrix)


def _parse_form_a(pairs: Any, y_tokens: int, where: str) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(pairs, list) or len(pairs) != y_tokens:
        raise InputError(f"{where}: token_pairs length must equal y_tokens")
    p_rows: list[list[float]] = []
    q_rows: list[list[float]] = []
    vocab: int | None = None
    for m, pair in enumerate(pairs):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise InputError(f"{where}: token_pairs[{m}] must be a [P, Q] pair")
        row_pair = []
        for vec in pair:
            if not isinstance(vec, list) or not vec:
                raise InputError(f"{where}: token_pairs[{m}] vectors must be nonempty lists")
            try:
                values = [float(v) for v in vec]
            except (TypeError, ValueError) as exc:
                raise InputError(f"{where}: non-numeric probability") from exc
            if any(not math.isfinite(v) or v < 0 for v in values):
                raise InputError(f"{where}: probabilities must be finite and >= 0")
            total = math.fsum(values)
            if abs(total - 1.0) > 1e-6:
                raise InputError(
                    f"{where}: token_pairs[{m}] vector sums to {total!r}, not 1 within 1e-6"
                )
            row_pair.append([v / total for v in values])
        if len(row_pair[0]) != len(row_pair[1]):
            raise InputError(f"{where}: token_pairs[{m}] vectors differ in length")
        if vocab is None:
            vocab = len(row_pair[0])
        elif len(row_pair[0]) != vocab:
            raise InputError(f"{where}: token support size varies across tokens")
        p_rows.append(row_pair[0])
        q_rows.append(row_pair[1])
    return np.array(p_rows, dtype=np.float64), np.array(q_rows, dtype=np.float64)


def load_divergence_log(
    path: str | Path, corpus: list[InstructionSample]
) -> list[DivergenceRecord]:
    rows = _iter_json_lines(path)
    by_id: dict[str, DivergenceRecord] = {}
    samples = {s.id: s for s in corpus}
    for lineno, obj in rows:
        where = f"{path}:{lineno}"
        sid = _require_str(obj, "id", where)
        if sid in by_id:
            raise InputError(f"{where}: duplicate divergence record for id '{sid}'")
        if sid not in samples:
            raise InputError(f"{where}: divergence record for unknown id '{sid}'")
        sample = samples[sid]
        x_tokens = _require_int(obj, "x_tokens", where)
        y_tokens = _require_int(obj, "y_tokens", where)
        if (x_tokens, y_tokens) != (sample.x_tokens, sample.y_tokens):
            raise InputError(
                f"{where}: token counts ({x_tokens}, {y_tokens}) disagree with the "
                f"corpus ({sample.x_tokens}, {sample.y_tokens})"
            )
        has_jsd = "per_token_jsd" in obj
        has_pairs = "token_pairs" in obj
        if has_jsd == has_pairs:
            raise InputError(
                f"{where}: record needs exactly one of per_token_jsd / token_pairs"
            )
        if has_jsd:
            values = obj["per_token_jsd"]
            if not isinstance(values, list) or len(values) != y_tokens:
                raise InputError(f"{where}: per_token_jsd length must equal y_tokens")
            try:
                jsd_values = [float(v) for v in values]
            except (TypeError, ValueError) as exc:
                raise InputError(f"{where}: non-numeric per_token_jsd value") from exc
            bad = [v for v in jsd_values if not (0.0 <= v <= 1.0)]
            if bad:
                raise InputError(f"{where}: per_token_jsd value {bad[0]!r} outside [0, 1]")
            record = DivergenceRecord(
                id=sid, x_tokens=x_tokens, y_tokens=y_tokens,
                per_token_jsd=tuple(jsd_values),
            )
        else:
            p_rows, q_rows = _parse_form_a(obj["token_pairs"], y_tokens, where)
            record = DivergenceRecord(
                id=sid, x_tokens=x_tokens, y_tokens=y_tokens,
                p_rows=p_rows, q_rows=q_rows,
            )
        by_id[sid] = record
    missing = [sid for sid in samples if sid not in by_id]
    if missing:
        raise InputError(f"{path}: missing divergence records for ids {missing[:5]}")
    return [by_id[s.id] for s in corpus]


def _check_manifest(manifest: dict[str, Any]) -> None:
    for key in _MANIFEST_KEYS:
        if key == "schema":
            continue
        if key not in manifest:
            raise InputError(f"manifest is missing field '{key}'")
    for alloc in manifest["allocations"]:
        for key in _ALLOCATION_KEYS:
            if key not in alloc:
                raise InputError(f"manifest allocation entry missing '{key}'")
    for rec in manifest["records"]:
        for key in _RECORD_KEYS:
            if key not in rec:
                raise InputError(f"manifest record entry missing '{key}'")
        if rec["reason"] is not None and rec["reason"] not in REJECTION_REASONS:
            raise InputError(f"manifest record has unknown reason {rec['reason']!r}")


def manifest_bytes(manifest: dict[str, Any]) -> bytes:
    """Canonical serialization: fixed key order, repr-style numbers."""
    _check_manifest(manifest)
    doc = {
        "schema": MANIFEST_SCHEMA,
        "seed": manifest["seed"],
        "config_fingerprint": manifest["config_fingerprint"],
        "budget": manifest["budget"],
        "cost_budget": manifest["cost_budget"],
        "n_clusters": manifest["n_clusters"],
        "allocations": [
            {key: alloc[key] for key in _ALLOCATION_KEYS}
            for alloc in manifest["allocations"]
        ],
        "selected": list(manifest["selected"]),
        "cumulative_cost": manifest["cumulative_cost"],
        "records": [
            {key: rec[key] for key in _RECORD_KEYS} for rec in manifest["records"]
        ],
    }
    text = json.dumps(doc, ensure_ascii=True, allow_nan=False, indent=2)
    return (text + "\n").encode("utf-8")


def write_manifest(manifest: dict[str, Any], path: str | Path) -> None:
    data = manifest_bytes(manifest)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise InputError(f"cannot write manifest to {path}: {exc}") from exc


def read_manifest(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid manifest JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: manifest must be a JSON object")
    _check_manifest(doc)
    return doc
