"""Command-line entry points: run, cluster, score, select, inspect."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from . import pipeline
from .corpus import PipelineConfig, config_from_dict
from .errors import ConfigError, InputError, NumericalError

_FLAG_KEYS = (
    "tau",
    "d",
    "k_min",
    "k_max",
    "epsilon_K",
    "budget",
    "budget_ratio",
    "cost_budget",
    "theta",
    "max_concepts",
    "min_phrase_words",
    "max_phrase_words",
    "seed",
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--tau", type=float, default=None, help="softmax temperature")
    parser.add_argument("--d", type=int, default=None, help="manifold dimension")
    parser.add_argument(
        "--t-grid", type=str, default=None, dest="t_grid",
        help="comma-separated diffusion times",
    )
    parser.add_argument("--k-min", type=int, default=None, dest="k_min")
    parser.add_argument("--k-max", type=int, default=None, dest="k_max")
    parser.add_argument("--epsilon-k", type=float, default=None, dest="epsilon_K")
    parser.add_argument("--budget", type=int, default=None, help="selection budget (count)")
    parser.add_argument(
        "--budget-ratio", type=float, default=None, dest="budget_ratio",
        help="selection budget as a fraction of N",
    )
    parser.add_argument(
        "--cost-budget", type=float, default=None, dest="cost_budget",
        help="cumulative cost ceiling (omit for unlimited)",
    )
    parser.add_argument("--theta", type=float, default=None, help="concept match threshold")
    parser.add_argument("--max-concepts", type=int, default=None, dest="max_concepts")
    parser.add_argument("--min-phrase-words", type=int, default=None, dest="min_phrase_words")
    parser.add_argument("--max-phrase-words", type=int, default=None, dest="max_phrase_words")
    parser.add_argument("--seed", type=int, default=None)


def _build_config(args: argparse.Namespace, budget_optional: bool) -> PipelineConfig:
    doc: dict[str, Any] = {}
    if args.config is not None:
        try:
            raw = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        try:
            parsed = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
        if not isinstance(parsed, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
        doc.update(parsed)
    # A budget flag replaces whichever budget form the file used.
    if getattr(args, "budget", None) is not None:
        doc.pop("budget_ratio", None)
    if getattr(args, "budget_ratio", None) is not None:
        doc.pop("budget", None)
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    if args.t_grid is not None:
        try:
            doc["t_grid"] = [float(part) for part in args.t_grid.split(",") if part.strip()]
        except ValueError as exc:
            raise ConfigError(f"invalid --t-grid value: {args.t_grid!r}") from exc
    if budget_optional and "budget" not in doc and "budget_ratio" not in doc:
        doc["budget_ratio"] = 0.2
    return config_from_dict(doc)


def _write_outputs(out_dir: Path, files: dict[str, Any]) -> list[Path]:
    """Write JSON artifacts; on any failure remove everything written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name, doc in files.items():
            path = out_dir / name
            written.append(path)
            if name.endswith(".jsonl"):
                with path.open("w", encoding="utf-8") as fh:
                    for row in doc:
                        fh.write(json.dumps(row) + "\n")
            else:
                path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args, budget_optional=False)
    manifest_path, report_path = pipeline.run_pipeline(
        config, args.corpus, args.embeddings, args.divergences, args.out_dir
    )
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    print(f"selected {len(manifest['selected'])} of budget {manifest['budget']}")
    print(f"manifest: {manifest_path}")
    print(f"report: {report_path}")
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    config = _build_config(args, budget_optional=True)
    artifacts = pipeline.run(config, args.corpus, args.embeddings, None, through="cluster")
    corpus_ids = _corpus_ids(args.corpus)
    coords = artifacts.coords.coords
    rows = [
        {"id": corpus_ids[i], "vector": [float(v) for v in coords[i]]}
        for i in range(coords.shape[0])
    ]
    labels_doc = {
        "t_opt": artifacts.t_opt,
        "n_clusters": artifacts.clustering.n_clusters,
        "labels": {
            corpus_ids[i]: int(artifacts.clustering.labels[i])
            for i in range(len(corpus_ids))
        },
    }
    _write_outputs(Path(args.out_dir), {"coords.jsonl": rows, "labels.json": labels_doc})
    print(f"clusters: {artifacts.clustering.n_clusters} (t_opt={artifacts.t_opt:g})")
    print(f"artifacts written to {args.out_dir}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    config = _build_config(args, budget_optional=True)
    artifacts = pipeline.run(
        config, args.corpus, args.embeddings, args.divergences, through="score"
    )
    corpus_ids = _corpus_ids(args.corpus)
    doc = {
        "clusters": [
            {"cluster": c.cluster, "size": c.members, "cds": c.cds} for c in artifacts.cds
        ],
        "samples": [
            {
                "id": sc.id,
                "cluster": int(artifacts.clustering.labels[i]),
                "mean_jsd": sc.mean_jsd,
                "cost": sc.cost,
                "ies": sc.ies,
            }
            for i, sc in enumerate(artifacts.scores)
        ],
    }
    _write_outputs(Path(args.out_dir), {"cds.json": doc})
    for entry in doc["clusters"]:
        print(f"cluster {entry['cluster']}: size={entry['size']} cds={entry['cds']:.6f}")
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    config = _build_config(args, budget_optional=False)
    artifacts = pipeline.run(
        config, args.corpus, args.embeddings, args.divergences, through="select"
    )
    assert artifacts.manifest is not None
    from .corpus import manifest_bytes

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    try:
        path.write_bytes(manifest_bytes(artifacts.manifest))
    except BaseException:
        path.unlink(missing_ok=True)
        raise
    print(f"selected {len(artifacts.manifest['selected'])} of budget {artifacts.manifest['budget']}")
    print(f"manifest: {path}")
    return 0


def _corpus_ids(path: str | Path) -> list[str]:
    from .corpus import load_corpus

    return [s.id for s in load_corpus(path)]


def _cmd_inspect(args: argparse.Namespace) -> int:
    try:
        text = Path(args.artifact).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read artifact {args.artifact}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.artifact}: not a JSON artifact: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{args.artifact}: expected a JSON object")
    if "records" in doc and "selected" in doc:
        _inspect_manifest(doc)
    elif "cluster_search" in doc:
        _inspect_report(doc)
    elif "labels" in doc:
        _inspect_labels(doc)
    elif "clusters" in doc and "samples" in doc:
        _inspect_scores(doc)
    else:
        raise InputError(f"{args.artifact}: unrecognized artifact layout")
    return 0


def _inspect_manifest(doc: dict[str, Any]) -> None:
    print(f"schema: {doc.get('schema')}")
    print(f"seed: {doc.get('seed')}  fingerprint: {doc.get('config_fingerprint')}")
    print(f"budget: {doc['budget']}  selected: {len(doc['selected'])}")
    print(f"cumulative cost: {doc['cumulative_cost']}")
    reasons: dict[str, int] = {}
    for rec in doc["records"]:
        if rec["decision"] == "rejected":
            reasons[rec["reason"]] = reasons.get(rec["reason"], 0) + 1
    print("rejections:")
    for reason in ("inconsistent", "cost_budget", "cluster_budget"):
        print(f"  {reason}: {reasons.get(reason, 0)}")
    print("allocations:")
    for alloc in doc["allocations"]:
        print(
            f"  cluster {alloc['cluster']}: size={alloc['size']} cds={alloc['cds']:.6f} "
            f"quota={alloc['quota']} realized={alloc['realized']}"
        )


def _inspect_report(doc: dict[str, Any]) -> None:
    search = doc["cluster_search"]
    print(f"n_samples: {doc.get('n_samples')}")
    print(f"chosen K: {search.get('chosen_k')}  clusters: {search.get('n_clusters')}")
    print(f"error curve: {search.get('error_curve')}")
    if "selection" in doc:
        sel = doc["selection"]
        print(f"selected: {sel['selected']} of budget {sel['budget']}")
    if "timings" in doc:
        for stage, seconds in doc["timings"].items():
            print(f"  {stage}: {seconds:.3f}s")


def _inspect_labels(doc: dict[str, Any]) -> None:
    counts: dict[int, int] = {}
    for label in doc["labels"].values():
        counts[int(label)] = counts.get(int(label), 0) + 1
    print(f"n_clusters: {doc.get('n_clusters')}  t_opt: {doc.get('t_opt')}")
    for label in sorted(counts):
        print(f"  cluster {label}: {counts[label]} samples")


def _inspect_scores(doc: dict[str, Any]) -> None:
    for entry in doc["clusters"]:
        print(f"cluster {entry['cluster']}: size={entry['size']} cds={entry['cds']:.6f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recsel",
        description="Recovery-data selection over instruction-tuning corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="full pipeline: manifest + report")
    score_p = sub.add_parser("score", help="cluster + degradation scores")
    cluster_p = sub.add_parser("cluster", help="manifold embedding + cluster labels")
    select_p = sub.add_parser("select", help="full pipeline, manifest only")
    for p in (run_p, cluster_p, score_p, select_p):
        p.add_argument("--corpus", required=True, type=Path)
        p.add_argument("--embeddings", required=True, type=Path)
        if p is not cluster_p:
            p.add_argument("--divergences", required=True, type=Path)
        p.add_argument("--out-dir", required=True, type=Path, dest="out_dir")
        _add_config_flags(p)
    run_p.set_defaults(handler=_cmd_run)
    cluster_p.set_defaults(handler=_cmd_cluster)
    score_p.set_defaults(handler=_cmd_score)
    select_p.set_defaults(handler=_cmd_select)

    inspect_p = sub.add_parser("inspect", help="summarize any pipeline artifact")
    inspect_p.add_argument("artifact", type=Path)
    inspect_p.set_defaults(handler=_cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.handler(args))
    except InputError as exc:
        print(f"recsel: input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"recsel: numerical error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"recsel: config error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
