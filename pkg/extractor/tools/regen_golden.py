"""Regenerate tests/fixtures/golden-divergence.json.

The golden file pins the per-token JSD values the downstream selection
engine computes when it loads the toy fixture's distribution export, so the
extractor's scalar export can be checked against an independent consumer.

Run from the extractor directory (needs the recsel package installed):

    node dist/cli.js --dataset tests/fixtures/toy-dataset.jsonl \
        --embedding-model hash:8 \
        --original-model file:tests/fixtures/toy-original.json \
        --pruned-model file:tests/fixtures/toy-pruned.json \
        --out /tmp/toy-dist --distributions
    python3 tools/regen_golden.py /tmp/toy-dist
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from recsel import corpus, degradation


def main() -> int:
    if len(sys.argv) != 2:
        print("usage: regen_golden.py <dir with corpus.jsonl + distribution divergences.jsonl>")
        return 1
    out_dir = Path(sys.argv[1])
    samples = corpus.load_corpus(out_dir / "corpus.jsonl")
    records = corpus.load_divergence_log(out_dir / "divergences.jsonl", samples)
    golden = {
        rec.id: list(degradation.sample_divergence(rec).per_token_jsd)
        for rec in records
    }
    target = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "golden-divergence.json"
    target.write_text(json.dumps(golden, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {target} ({sum(len(v) for v in golden.values())} token values)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
