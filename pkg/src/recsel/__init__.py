"""Recovery-data selection for instruction-tuning corpora.

Clusters samples in a diffusion-manifold semantic space, scores per-cluster
capability degradation from token-level divergences, allocates a selection
budget proportionally, and greedily picks high-efficiency samples gated by
a concept consistency graph.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .corpus import (
    DivergenceRecord,
    EmbeddingSet,
    InstructionSample,
    PipelineConfig,
    load_config,
    load_corpus,
    load_divergence_log,
    load_embeddings,
    read_manifest,
    write_manifest,
)
from .errors import ConfigError, InputError, NumericalError, RecselError
from .pipeline import PipelineArtifacts, build_report, run, run_pipeline

__all__ = [
    "ConfigError",
    "DivergenceRecord",
    "EmbeddingSet",
    "InputError",
    "InstructionSample",
    "NumericalError",
    "PipelineArtifacts",
    "PipelineConfig",
    "RecselError",
    "build_report",
    "load_config",
    "load_corpus",
    "load_divergence_log",
    "load_embeddings",
    "read_manifest",
    "run",
    "run_pipeline",
    "write_manifest",
    "__version__",
]
