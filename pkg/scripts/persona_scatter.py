#!/usr/bin/env python3
"""Reproduce the per-sentence cross-entropy / log-loss scatter comparison
across the three mock personas and print per-run statistics.

    python3 scripts/persona_scatter.py --metric asls --out scatter.csv --svg
"""

import argparse
import statistics
import sys
from pathlib import Path

from fist import monitor
from fist.cli import build_dataset
from fist.dataprep import StyleAttrs
from fist.gateway import GatewayClient, GenerationRequest
from fist.sampledata import build_battery, build_sample_report

MODELS = ("mock:untrained", "mock:stage1", "mock:stage2")


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--metric", choices=("ce", "asls"), default="ce")
    ap.add_argument("--out", default="scatter.csv")
    ap.add_argument("--svg", action="store_true")
    ap.add_argument("--prompts", type=int, default=50)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    report = build_sample_report(seed=args.seed, report_number=1)
    pairs, _ = build_dataset(report, "scatter-fixture", augment=2, seed=args.seed,
                             jitter=0.05, style=StyleAttrs(), config_dir=None)
    battery = build_battery(pairs, n=args.prompts, seed=args.seed)

    client = GatewayClient()
    records, labels = [], []
    for model in MODELS:
        for entry in battery:
            resp = client.complete(
                GenerationRequest(prompt=entry.query, model_id=model, max_tokens=256)
            )
            records.append(monitor.evaluate_response(entry.query, entry.context, resp))
            labels.append(model)

    svg = str(Path(args.out).with_suffix(".svg")) if args.svg else None
    rows = monitor.export_scatter(records, args.metric, args.out,
                                  run_labels=labels, svg_path=svg)
    print(f"wrote {rows} rows to {args.out}" + (f" and {svg}" if svg else ""))

    sentences = [s for r in records for s in r.sentences]
    floor, ceiling = monitor.adaptive_thresholds(sentences)
    print(f"adaptive thresholds: asls_floor={floor:.3f} ce/token ceiling={ceiling:.3f}\n")
    print(f"{'run':<16} {'sentences':>9} {'mean ce':>9} {'mean asls':>10} {'flags':>6}")
    for model in MODELS:
        model_records = [r for lab, r in zip(labels, records) if lab == model]
        spans = [s for r in model_records for s in r.sentences]
        flagged = sum(
            1
            for r in model_records
            for s in monitor.flag_low_certainty(list(r.sentences), floor, ceiling)
            if s.flag == "low_certainty"
        )
        print(
            f"{model:<16} {len(spans):>9} "
            f"{statistics.mean(s.cross_entropy for s in spans):>9.3f} "
            f"{statistics.mean(s.asls for s in spans):>10.3f} {flagged:>6}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
