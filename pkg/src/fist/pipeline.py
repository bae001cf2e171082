"""Two-stage fine-tuning workflow as a persisted state machine.

Each run lives in ``runs/<run_id>/`` as an append-only event log plus a
snapshot cache:

    runs/<run_id>/
        events.jsonl     # source of truth; replay reconstructs the run
        snapshot.json    # convenience cache, rebuilt from events on load
        datasets/        # stage1.jsonl (copied in), stage2.jsonl (built)
        exports/         # eval_records.jsonl, scatter CSVs, validation table

States move strictly along:

    prepared -> stage1_submitted -> stage1_ready -> evaluated
      -> curation_open -> curated -> stage2_submitted -> stage2_ready
      -> validated

``advance`` performs exactly one transition. Every artifact is written
before its event is appended, and artifact writes are idempotent (an
existing file with the same content hash is reused), so a crash at any
boundary recovers on the next ``advance`` without duplicate side effects.
The curation_open -> curated edge normally fires inside
``curation_apply`` once no unreviewed items remain.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import shutil
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from . import monitor
from .dataprep import (
    PromptCompletion,
    import_jsonl,
    make_prompt_completion,
    parse_report,
    TabularData,
)
from .errors import (
    CurationIncomplete,
    IllegalState,
    IllegalTransition,
    ModelMissing,
    StaleRevision,
    UnknownItem,
    ValidationFailure,
)
from .gateway import GatewayClient, GenerationRequest, validate_jsonl_dataset
from .monitor import EvalRecord
from .sampledata import BatteryEntry, build_battery, build_sample_report, load_battery

__all__ = [
    "PipelineConfig",
    "ReviewItem",
    "PipelineRun",
    "Pipeline",
    "RUN_STATES",
    "HUMAN_LABELS",
]

RUN_STATES = (
    "prepared",
    "stage1_submitted",
    "stage1_ready",
    "evaluated",
    "curation_open",
    "curated",
    "stage2_submitted",
    "stage2_ready",
    "validated",
    "failed",
)

HUMAN_LABELS = ("unreviewed", "hallucination", "creative", "correct")

_NEXT_STATE = {
    "prepared": "stage1_submitted",
    "stage1_submitted": "stage1_ready",
    "stage1_ready": "evaluated",
    "evaluated": "curation_open",
    "curation_open": "curated",
    "curated": "stage2_submitted",
    "stage2_submitted": "stage2_ready",
    "stage2_ready": "validated",
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# Configuration and run state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    base_model: str = "mock:untrained"
    n_eval_queries: int = 40
    eval_seed: int = 13
    battery_path: str | None = None
    validation_reports: tuple[str, ...] = ()
    stage2_from_base: bool = False
    max_tokens: int = 256
    min_coverage: float = 0.25
    asls_floor: float | None = None  # absolute overrides for flagging
    ce_per_token_ceiling: float | None = None

    def to_dict(self) -> dict:
        return {
            "base_model": self.base_model,
            "n_eval_queries": self.n_eval_queries,
            "eval_seed": self.eval_seed,
            "battery_path": self.battery_path,
            "validation_reports": list(self.validation_reports),
            "stage2_from_base": self.stage2_from_base,
            "max_tokens": self.max_tokens,
            "min_coverage": self.min_coverage,
            "asls_floor": self.asls_floor,
            "ce_per_token_ceiling": self.ce_per_token_ceiling,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PipelineConfig":
        payload = dict(payload)
        payload["validation_reports"] = tuple(payload.get("validation_reports", ()))
        return cls(**payload)


@dataclass
class ReviewItem:
    item_id: str
    run_id: str
    record_index: int
    sentence_index: int
    sentence_text: str
    completion_context: str
    asls: float
    cross_entropy: float
    entity_count: int
    relation_count: int
    machine_flag: str
    pair_index: int | None
    human_label: str = "unreviewed"
    edited_completion: str | None = None
    revision: int = 0

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "run_id": self.run_id,
            "record_index": self.record_index,
            "sentence_index": self.sentence_index,
            "sentence_text": self.sentence_text,
            "completion_context": self.completion_context,
            "asls": self.asls,
            "cross_entropy": self.cross_entropy,
            "entity_count": self.entity_count,
            "relation_count": self.relation_count,
            "machine_flag": self.machine_flag,
            "pair_index": self.pair_index,
            "human_label": self.human_label,
            "edited_completion": self.edited_completion,
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ReviewItem":
        return cls(**payload)


@dataclass
class PipelineRun:
    run_id: str
    state: str
    config: PipelineConfig
    dataset_paths: dict[str, str] = field(default_factory=dict)
    dataset_hash: str = ""
    stage1_job: str | None = None
    stage2_job: str | None = None
    stage1_model: str | None = None
    stage2_model: str | None = None
    eval_summary: dict[str, int] = field(default_factory=dict)
    review_items: list[ReviewItem] = field(default_factory=list)
    validation_table: list[dict] = field(default_factory=list)
    created_at: str = ""
    updated_at: str = ""

    @property
    def remaining_unreviewed(self) -> int:
        return sum(1 for item in self.review_items if item.human_label == "unreviewed")

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "state": self.state,
            "config": self.config.to_dict(),
            "dataset_paths": dict(self.dataset_paths),
            "dataset_hash": self.dataset_hash,
            "stage1_job": self.stage1_job,
            "stage2_job": self.stage2_job,
            "stage1_model": self.stage1_model,
            "stage2_model": self.stage2_model,
            "eval_summary": dict(self.eval_summary),
            "review_items": [item.to_dict() for item in self.review_items],
            "validation_table": list(self.validation_table),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }


# ---------------------------------------------------------------------------
# Event-sourced persistence
# ---------------------------------------------------------------------------

class _RunLock:
    """Advisory single-writer lock: flock plus an in-process mutex."""

    _process_locks: dict[str, threading.Lock] = {}
    _registry_lock = threading.Lock()

    def __init__(self, run_dir: Path):
        self.lock_path = run_dir / ".lock"
        with self._registry_lock:
            self._mutex = self._process_locks.setdefault(str(self.lock_path), threading.Lock())
        self._fh = None

    def __enter__(self) -> "_RunLock":
        self._mutex.acquire()
        self._fh = self.lock_path.open("w")
        fcntl.flock(self._fh, fcntl.LOCK_EX)
        return self

    def __exit__(self, *exc) -> None:
        if self._fh is not None:
            fcntl.flock(self._fh, fcntl.LOCK_UN)
            self._fh.close()
        self._mutex.release()


class Pipeline:
    """Run store plus the transition engine.

    ``crash_hook`` is a test seam: when set, it is invoked with a named
    checkpoint (``pre_effect:<state>``, ``post_effect:<state>``,
    ``post_event:<state>``) at each transition boundary and may raise to
    simulate a crash at exactly that point.
    """

    def __init__(
        self,
        root: str | Path = "runs",
        client: GatewayClient | None = None,
        crash_hook: Callable[[str], None] | None = None,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.client = client or GatewayClient()
        self.crash_hook = crash_hook

    # -- paths ----------------------------------------------------------------

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def _events_path(self, run_id: str) -> Path:
        return self.run_dir(run_id) / "events.jsonl"

    def _snapshot_path(self, run_id: str) -> Path:
        return self.run_dir(run_id) / "snapshot.json"

    def _eval_records_path(self, run_id: str) -> Path:
        return self.run_dir(run_id) / "exports" / "eval_records.jsonl"

    # -- event plumbing ---------------------------------------------------------

    def _checkpoint(self, name: str) -> None:
        if self.crash_hook is not None:
            self.crash_hook(name)

    def _append_event(self, run_id: str, event: dict) -> None:
        event = {"ts": _now(), **event}
        path = self._events_path(run_id)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _write_snapshot(self, run: PipelineRun) -> None:
        path = self._snapshot_path(run.run_id)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(run.to_dict(), ensure_ascii=False, indent=2) + "\n",
                       encoding="utf-8")
        os.replace(tmp, path)

    def _events(self, run_id: str) -> list[dict]:
        path = self._events_path(run_id)
        if not path.exists():
            raise UnknownItem(f"no run {run_id!r} under {self.root}")
        events = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                events.append(json.loads(line))
        return events

    def load_run(self, run_id: str) -> PipelineRun:
        """Rebuild run state by replaying the event log."""
        events = self._events(run_id)
        run: PipelineRun | None = None
        for event in events:
            kind = event["type"]
            if kind == "run_started":
                run = PipelineRun(
                    run_id=run_id,
                    state="prepared",
                    config=PipelineConfig.from_dict(event["config"]),
                    dataset_paths={"stage1": event["dataset_path"]},
                    dataset_hash=event["dataset_hash"],
                    created_at=event["ts"],
                    updated_at=event["ts"],
                )
            elif kind == "transition":
                assert run is not None
                run.state = event["to"]
                run.updated_at = event["ts"]
                data = event.get("data", {})
                if "stage1_job" in data:
                    run.stage1_job = data["stage1_job"]
                if "stage2_job" in data:
                    run.stage2_job = data["stage2_job"]
                if "stage1_model" in data:
                    run.stage1_model = data["stage1_model"]
                if "stage2_model" in data:
                    run.stage2_model = data["stage2_model"]
                if "eval_summary" in data:
                    run.eval_summary = dict(data["eval_summary"])
                if "review_items" in data:
                    run.review_items = [ReviewItem.from_dict(d) for d in data["review_items"]]
                if "stage2_dataset" in data:
                    run.dataset_paths["stage2"] = data["stage2_dataset"]
                if "validation_table" in data:
                    run.validation_table = list(data["validation_table"])
            elif kind == "labels_applied":
                assert run is not None
                run.updated_at = event["ts"]
                by_id = {item.item_id: item for item in run.review_items}
                for lab in event["labels"]:
                    item = by_id.get(lab["item_id"])
                    if item is None:
                        continue
                    item.human_label = lab["human_label"]
                    item.edited_completion = lab.get("edited_completion")
                    item.revision = lab["revision"]
        if run is None:
            raise UnknownItem(f"run {run_id!r} has an empty event log")
        return run

    def list_runs(self) -> list[PipelineRun]:
        runs = []
        for child in sorted(self.root.iterdir()) if self.root.exists() else []:
            if child.is_dir() and (child / "events.jsonl").exists():
                runs.append(self.load_run(child.name))
        return runs

    # -- run creation -----------------------------------------------------------

    def start_run(self, dataset_path: str | Path, config: PipelineConfig | None = None) -> PipelineRun:
        """Register a stage-1 dataset; idempotent on (dataset hash, config)."""
        config = config or PipelineConfig()
        dataset_path = Path(dataset_path)
        validate_jsonl_dataset(dataset_path)
        dataset_hash = _sha256_file(dataset_path)
        config_hash = hashlib.sha256(
            json.dumps(config.to_dict(), sort_keys=True).encode()
        ).hexdigest()
        run_id = hashlib.sha256(f"{dataset_hash}:{config_hash}".encode()).hexdigest()[:12]

        run_dir = self.run_dir(run_id)
        if self._events_path(run_id).exists():
            return self.load_run(run_id)

        (run_dir / "datasets").mkdir(parents=True, exist_ok=True)
        (run_dir / "exports").mkdir(parents=True, exist_ok=True)
        stored = run_dir / "datasets" / "stage1.jsonl"
        shutil.copyfile(dataset_path, stored)
        self._append_event(
            run_id,
            {
                "type": "run_started",
                "run_id": run_id,
                "dataset_path": str(stored),
                "dataset_hash": dataset_hash,
                "config": config.to_dict(),
            },
        )
        run = self.load_run(run_id)
        self._write_snapshot(run)
        return run

    # -- transitions --------------------------------------------------------------

    def advance(self, run_id: str) -> PipelineRun:
        """Execute exactly one enabled transition for the run."""
        with _RunLock(self.run_dir(run_id)):
            run = self.load_run(run_id)
            target = _NEXT_STATE.get(run.state)
            if target is None:
                raise IllegalTransition(f"run {run_id} is terminal in state {run.state!r}")
            handler = getattr(self, f"_advance_to_{target}")
            data = handler(run)
            self._checkpoint(f"post_effect:{target}")
            self._append_event(
                run_id,
                {"type": "transition", "from": run.state, "to": target, "data": data},
            )
            self._checkpoint(f"post_event:{target}")
            run = self.load_run(run_id)
            self._write_snapshot(run)
            return run

    def _advance_to_stage1_submitted(self, run: PipelineRun) -> dict:
        self._checkpoint("pre_effect:stage1_submitted")
        job = self.client.submit_finetune(
            run.dataset_paths["stage1"], run.config.base_model, "stage1"
        )
        return {"stage1_job": job}

    def _advance_to_stage1_ready(self, run: PipelineRun) -> dict:
        self._checkpoint("pre_effect:stage1_ready")
        job = self.client.poll_finetune(run.stage1_job, run.config.base_model)
        if job.status != "succeeded" or not job.model_id:
            raise IllegalState(f"fine-tune job {run.stage1_job} not ready: {job.status}")
        return {"stage1_model": job.model_id}

    def _battery(self, run: PipelineRun) -> list[BatteryEntry]:
        if run.config.battery_path:
            return load_battery(run.config.battery_path)
        pairs = import_jsonl(run.dataset_paths["stage1"])
        return build_battery(pairs, n=run.config.n_eval_queries, seed=run.config.eval_seed)

    def _advance_to_evaluated(self, run: PipelineRun) -> dict:
        self._checkpoint("pre_effect:evaluated")
        if not run.stage1_model:
            raise ModelMissing("stage-1 model not recorded")
        battery = self._battery(run)
        if not battery:
            raise ValidationFailure("evaluation battery is empty")
        records: list[EvalRecord] = []
        summary = {"correct": 0, "hallucination": 0, "incomplete": 0}
        for entry in battery:
            response = self.client.complete(
                GenerationRequest(
                    prompt=entry.query,
                    model_id=run.stage1_model,
                    max_tokens=run.config.max_tokens,
                )
            )
            record = monitor.evaluate_response(entry.query, entry.context, response)
            category = monitor.categorize(
                record, entry.reference_facts, min_coverage=run.config.min_coverage
            )
            record = replace(record, category=category, label_source="rule")
            summary[category] += 1
            records.append(record)
        path = self._eval_records_path(run.run_id)
        payload = "".join(
            json.dumps(monitor.record_to_dict(r), ensure_ascii=False) + "\n" for r in records
        ).encode("utf-8")
        self._write_idempotent(path, payload)
        return {"eval_summary": summary, "n_records": len(records)}

    def _advance_to_curation_open(self, run: PipelineRun) -> dict:
        self._checkpoint("pre_effect:curation_open")
        records = self.load_eval_records(run.run_id)
        battery = self._battery(run)
        all_sentences = [s for r in records for s in r.sentences]
        floor, ceiling = monitor.adaptive_thresholds(all_sentences)
        if run.config.asls_floor is not None:
            floor = run.config.asls_floor
        if run.config.ce_per_token_ceiling is not None:
            ceiling = run.config.ce_per_token_ceiling
        items: list[ReviewItem] = []
        for rec_idx, record in enumerate(records):
            flagged = monitor.flag_low_certainty(list(record.sentences), floor, ceiling)
            pair_index = battery[rec_idx].pair_index if rec_idx < len(battery) else None
            for sent in flagged:
                if sent.flag != "low_certainty":
                    continue
                items.append(
                    ReviewItem(
                        item_id=f"{rec_idx:04d}-{sent.span.sentence_index:03d}",
                        run_id=run.run_id,
                        record_index=rec_idx,
                        sentence_index=sent.span.sentence_index,
                        sentence_text=sent.span.text.strip(),
                        completion_context=record.response,
                        asls=sent.asls,
                        cross_entropy=sent.cross_entropy,
                        entity_count=sent.entity_count,
                        relation_count=sent.relation_count,
                        machine_flag=sent.flag,
                        pair_index=pair_index,
                    )
                )
        return {
            "review_items": [i.to_dict() for i in items],
            "thresholds": {"asls_floor": floor, "ce_per_token_ceiling": ceiling},
        }

    def _advance_to_curated(self, run: PipelineRun) -> dict:
        self._checkpoint("pre_effect:curated")
        if run.remaining_unreviewed:
            raise CurationIncomplete(
                f"{run.remaining_unreviewed} review items are still unreviewed"
            )
        return {}

    def _advance_to_stage2_submitted(self, run: PipelineRun) -> dict:
        self._checkpoint("pre_effect:stage2_submitted")
        pairs = import_jsonl(run.dataset_paths["stage1"])
        dataset = self.build_stage2_dataset(pairs, run.review_items)
        path = self.run_dir(run.run_id) / "datasets" / "stage2.jsonl"
        payload = "".join(
            json.dumps(_pair_dict(p), ensure_ascii=False) + "\n" for p in dataset
        ).encode("utf-8")
        self._write_idempotent(path, payload)
        base = run.config.base_model if run.config.stage2_from_base else run.stage1_model
        job = self.client.submit_finetune(path, base, "stage2")
        return {"stage2_job": job, "stage2_dataset": str(path), "stage2_size": len(dataset)}

    def _advance_to_stage2_ready(self, run: PipelineRun) -> dict:
        self._checkpoint("pre_effect:stage2_ready")
        job = self.client.poll_finetune(run.stage2_job, run.config.base_model)
        if job.status != "succeeded" or not job.model_id:
            raise IllegalState(f"fine-tune job {run.stage2_job} not ready: {job.status}")
        return {"stage2_model": job.model_id}

    def _advance_to_validated(self, run: PipelineRun) -> dict:
        self._checkpoint("pre_effect:validated")
        reports = [Path(p).read_text(encoding="utf-8") for p in run.config.validation_reports]
        if not reports:
            reports = [build_sample_report(seed=7, report_number=1),
                       build_sample_report(seed=7, report_number=2)]
        table = self.validate_reports_for(run, reports)
        csv_path = self.run_dir(run.run_id) / "exports" / "validation_table.csv"
        lines = ["report,Section,Untrained P,\"Two-step FT, P\""]
        for row in table:
            lines.append(
                f"{row['report']},{row['section']},{row['untrained_p']:.4f},{row['stage2_p']:.4f}"
            )
        self._write_idempotent(csv_path, ("\n".join(lines) + "\n").encode("utf-8"))
        return {"validation_table": table}

    # -- helpers ------------------------------------------------------------------

    @staticmethod
    def _write_idempotent(path: Path, payload: bytes) -> bool:
        """Write payload atomically unless an identical file already exists.

        Returns True when a write happened (False means the artifact from a
        previous attempt was reused).
        """
        if path.exists() and hashlib.sha256(path.read_bytes()).hexdigest() == hashlib.sha256(payload).hexdigest():
            return False
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, path)
        return True

    def load_eval_records(self, run_id: str) -> list[EvalRecord]:
        path = self._eval_records_path(run_id)
        if not path.exists():
            return []
        return [
            monitor.record_from_dict(json.loads(line))
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    @staticmethod
    def build_stage2_dataset(
        pairs: Sequence[PromptCompletion],
        items: Sequence[ReviewItem],
    ) -> list[PromptCompletion]:
        """Stage-1 pairs minus hallucination-affected completions.

        A pair is dropped when any of its review items is labeled
        hallucination without an edited completion; an edited completion
        replaces the original instead. Every surviving pair is re-tagged
        stage2_curated.
        """
        dropped: set[int] = set()
        edits: dict[int, str] = {}
        for item in items:
            if item.pair_index is None:
                continue
            if item.human_label == "hallucination":
                if item.edited_completion:
                    edits[item.pair_index] = item.edited_completion
                else:
                    dropped.add(item.pair_index)
            elif item.edited_completion:
                edits[item.pair_index] = item.edited_completion
        out = []
        for idx, pair in enumerate(pairs):
            if idx in dropped:
                continue
            completion = edits.get(idx, pair.completion)
            out.append(
                replace(
                    pair,
                    completion=completion,
                    provenance=replace(pair.provenance, stage="stage2_curated"),
                )
            )
        return out

    # -- curation -------------------------------------------------------------------

    def curation_apply(
        self,
        run_id: str,
        labels: Sequence[tuple],
        check_revisions: bool = False,
    ) -> int:
        """Persist human labels; returns the remaining unreviewed count.

        ``labels`` entries are (item_id, human_label, edited_completion?) or
        (item_id, human_label, edited_completion, revision). With
        ``check_revisions`` a stale revision rejects the whole batch;
        otherwise last write wins. When nothing remains unreviewed the run
        moves to curated.
        """
        with _RunLock(self.run_dir(run_id)):
            run = self.load_run(run_id)
            if run.state not in ("curation_open", "curated"):
                raise IllegalState(f"cannot label items while run is {run.state!r}")
            by_id = {item.item_id: item for item in run.review_items}

            normalized: list[tuple[str, str, str | None, int | None]] = []
            for entry in labels:
                item_id, human_label = entry[0], entry[1]
                edited = entry[2] if len(entry) > 2 else None
                revision = entry[3] if len(entry) > 3 else None
                if item_id not in by_id:
                    raise UnknownItem(f"no review item {item_id!r} in run {run_id}")
                if human_label not in HUMAN_LABELS:
                    raise IllegalState(f"unknown label {human_label!r}")
                normalized.append((item_id, human_label, edited, revision))

            if check_revisions:
                stale = [
                    item_id
                    for item_id, _, _, rev in normalized
                    if rev is not None and rev != by_id[item_id].revision
                ]
                if stale:
                    raise StaleRevision(
                        f"stale revisions for {len(stale)} item(s)", stale_items=stale
                    )

            applied = []
            for item_id, human_label, edited, _ in normalized:
                item = by_id[item_id]
                applied.append(
                    {
                        "item_id": item_id,
                        "human_label": human_label,
                        "edited_completion": edited,
                        "revision": item.revision + 1,
                    }
                )
                item.revision += 1  # track within-batch rewrites
            self._append_event(run_id, {"type": "labels_applied", "labels": applied})

            run = self.load_run(run_id)
            remaining = run.remaining_unreviewed
            if remaining == 0 and run.state == "curation_open":
                self._append_event(
                    run_id,
                    {"type": "transition", "from": "curation_open", "to": "curated", "data": {}},
                )
                run = self.load_run(run_id)
            self._write_snapshot(run)
            return remaining

    # -- validation ------------------------------------------------------------------

    def validate_reports_for(self, run: PipelineRun, reports: Sequence[str]) -> list[dict]:
        """Sectional perplexity comparison: untrained base vs stage-2 model."""
        if not run.stage2_model:
            raise ModelMissing(f"run {run.run_id} has no stage-2 model yet")
        from . import metrics as m

        rows: list[dict] = []
        for rep_idx, text in enumerate(reports, start=1):
            parsed = parse_report(text, report_id=f"validation-{rep_idx}")
            default_table = parsed.tables[0] if parsed.tables else TabularData(
                schema=("metric", "value"), rows=((("n/a"), ("n/a")),)
            )
            for name, body in parsed.sections:
                if not body.strip():
                    continue
                pair = make_prompt_completion((name, body), default_table)
                row = {"report": f"Report {rep_idx}", "section": name}
                for column, model in (
                    ("untrained_p", run.config.base_model),
                    ("stage2_p", run.stage2_model),
                ):
                    response = self.client.complete(
                        GenerationRequest(
                            prompt=pair.prompt,
                            model_id=model,
                            max_tokens=run.config.max_tokens,
                        )
                    )
                    row[column] = m.perplexity(response.tokens)
                rows.append(row)
        return rows

    def validate_reports(self, run_id: str, reports: Sequence[str]) -> list[dict]:
        return self.validate_reports_for(self.load_run(run_id), reports)


def _pair_dict(pair: PromptCompletion) -> dict:
    from .dataprep import pair_to_dict

    return pair_to_dict(pair)
