"""Deterministic synthetic fixtures: sectioned sample reports and
evaluation batteries.

Real report corpora and the original evaluation questions are private;
these generators produce structurally equivalent stand-ins so the whole
pipeline can run offline. Everything is seeded and reproducible.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataprep import PromptCompletion
from .monitor import ReferenceFact

__all__ = [
    "BatteryEntry",
    "build_sample_report",
    "build_battery",
    "save_battery",
    "load_battery",
    "REPORT_SECTION_SETS",
]

REPORT_SECTION_SETS = (
    (
        "Introduction",
        "Growth Outlook",
        "Service Group Performance",
        "Industry Performance",
        "Performance Highlights",
    ),
    (
        "Introduction",
        "Financial Review",
        "New Bookings",
        "Revenues by Geographic Market",
        "Revenues by Industry Group",
        "Returning Cash to Shareholders",
        "Business Outlook",
    ),
)

_ORGS = ("Meridian Analytics", "Northgate Systems", "Halden Partners", "Corvus Digital")
_METRICS = ("revenues", "profits", "margins", "bookings", "earnings", "dividends")
_REGIONS = ("North America", "Europe", "Asia Pacific")


def _prose(org: str, metric: str, value: str, region: str) -> str:
    return (
        f"{org} delivered {metric} of {value} this period. "
        f"Performance in {region} remained steady, and management expects "
        f"the trend to continue. The team reported broad progress across segments."
    )


def build_sample_report(seed: int = 0, report_number: int = 1) -> str:
    """Render one markdown sample report with sections and pipe tables."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, report_number)))
    sections = REPORT_SECTION_SETS[(report_number - 1) % len(REPORT_SECTION_SETS)]
    org = _ORGS[int(rng.integers(len(_ORGS)))]
    lines = [f"# Financial Report {report_number}", ""]
    for name in sections:
        metric = _METRICS[int(rng.integers(len(_METRICS)))]
        metric2 = _METRICS[int(rng.integers(len(_METRICS)))]
        value = f"{rng.uniform(2, 38):.1f}%"
        value2 = f"{rng.uniform(2, 38):.1f}%"
        region = _REGIONS[int(rng.integers(len(_REGIONS)))]
        lines += [
            f"## {name}",
            "",
            _prose(org, metric, value, region),
            "",
            "Key figures:",
            "| metric | value |",
            "| --- | --- |",
            f"| {metric} | {value} |",
            f"| {metric2} | {value2} |",
            "",
        ]
    return "\n".join(lines)


@dataclass(frozen=True)
class BatteryEntry:
    """One evaluation question with its ground-truth facts."""

    query: str
    context: str
    reference_facts: tuple[ReferenceFact, ...]
    pair_index: int | None = None

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "context": self.context,
            "reference_facts": [
                {"subject": f.subject, "predicate": f.predicate, "value": f.value, "unit": f.unit}
                for f in self.reference_facts
            ],
            "pair_index": self.pair_index,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "BatteryEntry":
        return cls(
            query=payload["query"],
            context=payload["context"],
            reference_facts=tuple(
                ReferenceFact(f["subject"], f["predicate"], float(f["value"]), f.get("unit", ""))
                for f in payload["reference_facts"]
            ),
            pair_index=payload.get("pair_index"),
        )


_TABLE_ROW_RE = re.compile(r"^\|\s*([^|]+?)\s*\|\s*([^|]+?)\s*\|\s*$")
_VALUE_RE = re.compile(r"^(?P<cur>[$€£])?(?P<num>\d+(?:\.\d+)?)(?P<pct>%)?$")


def _facts_from_prompt(prompt: str, org: str) -> list[ReferenceFact]:
    facts = []
    for line in prompt.splitlines():
        m = _TABLE_ROW_RE.match(line.strip())
        if not m:
            continue
        metric, value = m.group(1).strip(), m.group(2).strip()
        vm = _VALUE_RE.match(value)
        if not vm or set(metric) <= {"-", " "}:
            continue
        unit = vm.group("cur") or ("%" if vm.group("pct") else "")
        facts.append(ReferenceFact(org, metric.lower(), float(vm.group("num")), unit))
    return facts


def build_battery(
    pairs: Sequence[PromptCompletion],
    n: int = 40,
    seed: int = 13,
) -> list[BatteryEntry]:
    """Synthesize n evaluation questions from a training dataset's tables.

    Each entry points back at its source pair (``pair_index``) so curation
    outcomes can be mapped onto the stage-2 dataset.
    """
    if not pairs:
        return []
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    entries: list[BatteryEntry] = []
    attempts = 0
    while len(entries) < n and attempts < n * 10:
        attempts += 1
        idx = int(rng.integers(len(pairs)))
        org = _ORGS[int(rng.integers(len(_ORGS)))]
        facts = _facts_from_prompt(pairs[idx].prompt, org)
        if not facts:
            continue
        table_lines = [
            ln for ln in pairs[idx].prompt.splitlines() if ln.strip().startswith("|")
        ]
        context = f"{org} results:\n" + "\n".join(table_lines)
        metric_list = ", ".join(f.predicate for f in facts)
        query = (
            f"{context}\n"
            f"Question: what did {org} report for {metric_list} this period?"
        )
        entries.append(
            BatteryEntry(
                query=query,
                context=context,
                reference_facts=tuple(facts),
                pair_index=idx,
            )
        )
    return entries


def save_battery(entries: Sequence[BatteryEntry], path: str | Path) -> None:
    payload = [e.to_dict() for e in entries]
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                          encoding="utf-8")


def load_battery(path: str | Path) -> list[BatteryEntry]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [BatteryEntry.from_dict(e) for e in payload]
