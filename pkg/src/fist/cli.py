"""Command-line entry points.

Each subcommand is a thin adapter over a library operation; --json on any
subcommand switches stdout to a single machine-readable object. Exit
codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import monitor as monitor_mod
from .dataprep import (
    Provenance,
    StyleAttrs,
    augment_table,
    export_jsonl,
    make_prompt_completion,
    parse_report,
)
from .errors import FistError
from .gateway import GatewayClient, GatewayConfig, GenerationRequest
from .pipeline import Pipeline, PipelineConfig
from .sampledata import build_battery, build_sample_report

DEFAULT_PORT = 8642
DEFAULT_MODELS = "mock:untrained,mock:stage1,mock:stage2"


def build_dataset(
    report_text: str,
    report_id: str,
    augment: int,
    seed: int,
    jitter: float,
    style: StyleAttrs,
    config_dir: str | None,
):
    """Parse one report and emit augment variants of every section pair."""
    parsed = parse_report(report_text, report_id)
    pairs = []
    tables = parsed.tables
    for s_idx, (name, body) in enumerate(parsed.sections):
        if not body.strip():
            continue
        base_table = tables[s_idx % len(tables)] if tables else None
        for variant in range(max(1, augment)):
            variant_seed = seed + variant
            if base_table is None:
                from .dataprep import TabularData

                table = TabularData(schema=("item", "value"), rows=())
            else:
                table = augment_table(base_table, seed=variant_seed, jitter_pct=jitter)
            pairs.append(
                make_prompt_completion(
                    (name, body),
                    table,
                    style=style,
                    provenance=Provenance(
                        source_report_id=report_id, augmentation_seed=variant_seed
                    ),
                    config_dir=config_dir,
                )
            )
    return pairs, parsed


# ---------------------------------------------------------------------------
# Subcommand handlers: each returns a result dict for --json
# ---------------------------------------------------------------------------

def _cmd_prep(args: argparse.Namespace) -> dict:
    text = Path(args.infile).read_text(encoding="utf-8")
    style = StyleAttrs(tone=args.tone, assertiveness=args.assertiveness, persona=args.persona)
    pairs, parsed = build_dataset(
        text,
        args.report_id or Path(args.infile).stem,
        args.augment,
        args.seed,
        args.jitter,
        style,
        args.config_dir,
    )
    count = export_jsonl(pairs, args.out)
    return {
        "out": str(args.out),
        "pairs": count,
        "sections": len(parsed.sections),
        "tables": len(parsed.tables),
        "warnings": parsed.warnings,
    }


def _cmd_augment(args: argparse.Namespace) -> dict:
    text = Path(args.infile).read_text(encoding="utf-8")
    parsed = parse_report(text, Path(args.infile).stem)
    if not parsed.tables:
        raise FistError(f"no table found in {args.infile}")
    table = augment_table(
        parsed.tables[0],
        seed=args.seed,
        jitter_pct=args.jitter,
        rename_columns=args.rename_columns,
    )
    rendered = table.render()
    if args.out:
        Path(args.out).write_text(rendered + "\n", encoding="utf-8")
    else:
        print(rendered)
    return {"out": args.out, "rows": len(table.rows), "schema": list(table.schema)}


def _pipeline(args: argparse.Namespace) -> Pipeline:
    config = GatewayConfig(mock_seed=args.mock_seed) if hasattr(args, "mock_seed") else GatewayConfig()
    return Pipeline(root=args.run_dir, client=GatewayClient(config))


def _cmd_finetune(args: argparse.Namespace) -> dict:
    pipe = _pipeline(args)
    if args.stage == 1:
        if not args.dataset:
            raise FistError("--dataset is required for stage 1")
        run = pipe.start_run(
            args.dataset,
            PipelineConfig(base_model=args.base_model, n_eval_queries=args.eval_queries),
        )
        while run.state in ("prepared", "stage1_submitted"):
            run = pipe.advance(run.run_id)
    else:
        if not args.run:
            raise FistError("--run is required for stage 2")
        run = pipe.load_run(args.run)
        while run.state in ("curated", "stage2_submitted"):
            run = pipe.advance(run.run_id)
    return {"run_id": run.run_id, "state": run.state,
            "stage1_model": run.stage1_model, "stage2_model": run.stage2_model}


def _cmd_eval(args: argparse.Namespace) -> dict:
    pipe = _pipeline(args)
    run = pipe.load_run(args.run)
    while run.state in ("stage1_ready", "evaluated"):
        run = pipe.advance(run.run_id)
    return {
        "run_id": run.run_id,
        "state": run.state,
        "eval_summary": dict(run.eval_summary),
        "review_items": len(run.review_items),
    }


def _cmd_monitor(args: argparse.Namespace) -> dict:
    client = GatewayClient(GatewayConfig(mock_seed=args.mock_seed))
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    report = build_sample_report(seed=args.seed, report_number=1)
    pairs, _ = build_dataset(
        report, "monitor-fixture", augment=2, seed=args.seed, jitter=0.05,
        style=StyleAttrs(), config_dir=None,
    )
    battery = build_battery(pairs, n=args.prompts, seed=args.seed)
    records, labels = [], []
    for model in models:
        for entry in battery:
            response = client.complete(
                GenerationRequest(prompt=entry.query, model_id=model, max_tokens=256)
            )
            records.append(
                monitor_mod.evaluate_response(entry.query, entry.context, response)
            )
            labels.append(model)
    svg_path = str(Path(args.out).with_suffix(".svg")) if args.svg else None
    rows = monitor_mod.export_scatter(records, args.metric, args.out,
                                      run_labels=labels, svg_path=svg_path)
    means = {}
    for model in models:
        values = [
            s.cross_entropy if args.metric == "ce" else s.asls
            for lab, rec in zip(labels, records)
            if lab == model
            for s in rec.sentences
        ]
        means[model] = sum(values) / len(values)
    return {"out": str(args.out), "svg": svg_path, "rows": rows, "per_run_mean": means}


def _cmd_validate(args: argparse.Namespace) -> dict:
    pipe = _pipeline(args)
    run = pipe.load_run(args.run)
    if args.reports:
        reports = [Path(p).read_text(encoding="utf-8") for p in args.reports]
        table = pipe.validate_reports(args.run, reports)
    else:
        if run.state == "stage2_ready":
            run = pipe.advance(run.run_id)
        table = run.validation_table
    if args.out:
        lines = ['report,Section,Untrained P,"Two-step FT, P"']
        for row in table:
            lines.append(
                f"{row['report']},{row['section']},{row['untrained_p']:.4f},{row['stage2_p']:.4f}"
            )
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {"run_id": args.run, "rows": len(table), "table": table, "out": args.out}


def _cmd_review_export(args: argparse.Namespace) -> dict:
    pipe = _pipeline(args)
    run = pipe.load_run(args.run)
    items = [i.to_dict() for i in run.review_items]
    payload = {"run_id": run.run_id, "state": run.state, "items": items}
    if args.out:
        Path(args.out).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                                  encoding="utf-8")
    return {"run_id": run.run_id, "items": len(items), "out": args.out}


def _cmd_serve(args: argparse.Namespace) -> dict:
    import uvicorn

    from .service import create_app

    app = create_app(run_root=args.run_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return {}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_run_dir(p: argparse.ArgumentParser) -> None:
    p.add_argument("--run-dir", default="runs", help="pipeline run store directory")
    p.add_argument("--mock-seed", type=int, default=0, help="seed for the mock provider")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fist",
        description="financial-report style-transfer fine-tuning toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="parse a report and emit a prompt-completion dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report-id", default=None)
    p.add_argument("--augment", type=int, default=1, help="table variants per section")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jitter", type=float, default=0.05)
    p.add_argument("--tone", default="measured")
    p.add_argument("--assertiveness", default="confident")
    p.add_argument("--persona", default="a senior financial analyst")
    p.add_argument("--config-dir", default=os.environ.get("FIST_CONFIG_DIR"))
    p.set_defaults(func=_cmd_prep)

    p = sub.add_parser("augment", help="jitter the numeric cells of a table")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--jitter", type=float, default=0.05)
    p.add_argument("--rename-columns", action="store_true")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("finetune", help="submit a fine-tune stage and wait for the model")
    p.add_argument("--stage", type=int, choices=(1, 2), required=True)
    p.add_argument("--dataset", default=None)
    p.add_argument("--run", default=None)
    p.add_argument("--base-model", default="mock:untrained")
    p.add_argument("--eval-queries", type=int, default=40)
    _add_run_dir(p)
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("eval", help="run the evaluation battery and open curation")
    p.add_argument("--run", required=True)
    _add_run_dir(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("monitor", help="per-sentence scatter across mock personas")
    p.add_argument("--metric", choices=("ce", "asls"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--models", default=DEFAULT_MODELS)
    p.add_argument("--prompts", type=int, default=20)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--mock-seed", type=int, default=0)
    p.set_defaults(func=_cmd_monitor)

    p = sub.add_parser("validate", help="sectional perplexity comparison table")
    p.add_argument("--run", required=True)
    p.add_argument("--reports", nargs="*", default=None)
    p.add_argument("--out", default=None)
    _add_run_dir(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("review-export", help="dump review items as JSON")
    p.add_argument("--run", required=True)
    p.add_argument("--out", default=None)
    _add_run_dir(p)
    p.set_defaults(func=_cmd_review_export)

    p = sub.add_parser("serve", help="start the review HTTP service")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", default="frontend/dist")
    _add_run_dir(p)
    p.set_defaults(func=_cmd_serve)

    for sp in sub.choices.values():
        sp.add_argument("--json", action="store_true", help="machine-readable output")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except FistError as exc:
        if getattr(args, "json", False):
            print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "json", False):
        print(json.dumps(result, ensure_ascii=False))
    else:
        for key, value in result.items():
            if key not in ("table",):
                print(f"{key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
