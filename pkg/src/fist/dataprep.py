"""Report parsing, table augmentation, and prompt-completion assembly.

Input reports are plain text or markdown: headings become section
boundaries, pipe/tab-delimited blocks become tables. Nothing except
delimiters is dropped; all cell text survives inside ``TabularData`` so
the original (minus pipes and separator rows) can be reconstructed from
the parse.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .configload import SECTIONS, load_column_synonyms, load_section_template
from .errors import (
    EmptyDataset,
    EmptySection,
    InvalidJitter,
    IoFailure,
    SerializationFailure,
)

__all__ = [
    "NumericCell",
    "TabularData",
    "StyleAttrs",
    "Provenance",
    "PromptCompletion",
    "ParseResult",
    "parse_report",
    "augment_table",
    "make_prompt_completion",
    "infer_section",
    "export_jsonl",
    "import_jsonl",
]


# ---------------------------------------------------------------------------
# Cells and tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NumericCell:
    """A numeric table cell with an optional unit tag ('%' or a currency)."""

    value: float
    unit: str = ""

    def render(self) -> str:
        text = f"{self.value:g}"
        if self.unit == "%":
            return f"{text}%"
        if self.unit:
            return f"{self.unit}{text}"
        return text


Cell = "str | NumericCell"

_NUMERIC_CELL_RE = re.compile(
    r"^(?P<cur>[$€£])?\s*(?P<num>-?\d{1,3}(?:,\d{3})*(?:\.\d+)?|-?\d+(?:\.\d+)?)\s*(?P<pct>%)?$"
)


def parse_cell(text: str) -> "str | NumericCell":
    raw = text.strip()
    m = _NUMERIC_CELL_RE.match(raw)
    if not m or (m.group("cur") and m.group("pct")):
        return raw
    value = float(m.group("num").replace(",", ""))
    unit = m.group("cur") or ("%" if m.group("pct") else "")
    return NumericCell(value, unit)


def render_cell(cell: "str | NumericCell") -> str:
    return cell.render() if isinstance(cell, NumericCell) else cell


@dataclass(frozen=True)
class TabularData:
    """One table: ordered column schema plus rows of text/numeric cells."""

    schema: tuple[str, ...]
    rows: tuple[tuple[object, ...], ...]
    caption: str = ""
    source_report_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        for row in self.rows:
            if len(row) != len(self.schema):
                raise ValueError(
                    f"row length {len(row)} != schema length {len(self.schema)}"
                )
            for cell in row:
                if isinstance(cell, NumericCell) and not np.isfinite(cell.value):
                    raise ValueError(f"non-finite numeric cell {cell.value}")

    def render(self) -> str:
        """Serialize as an aligned markdown pipe table."""
        header = [list(self.schema)] + [[render_cell(c) for c in row] for row in self.rows]
        widths = [max(len(r[i]) for r in header) for i in range(len(self.schema))]
        lines = []
        for ri, cells in enumerate(header):
            lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |")
            if ri == 0:
                lines.append("| " + " | ".join("-" * w for w in widths) + " |")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        def enc(cell: object) -> object:
            if isinstance(cell, NumericCell):
                return {"value": cell.value, "unit": cell.unit}
            return cell

        return {
            "schema": list(self.schema),
            "rows": [[enc(c) for c in row] for row in self.rows],
            "caption": self.caption,
            "source_report_id": self.source_report_id,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TabularData":
        def dec(cell: object) -> object:
            if isinstance(cell, dict):
                return NumericCell(cell["value"], cell["unit"])
            return cell

        return cls(
            schema=tuple(payload["schema"]),
            rows=tuple(tuple(dec(c) for c in row) for row in payload["rows"]),
            caption=payload.get("caption", ""),
            source_report_id=payload.get("source_report_id", ""),
        )


# ---------------------------------------------------------------------------
# Prompt-completion pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StyleAttrs:
    tone: str = "measured"
    assertiveness: str = "confident"
    persona: str = "a senior financial analyst"


@dataclass(frozen=True)
class Provenance:
    source_report_id: str = ""
    augmentation_seed: int = 0
    stage: str = "stage1"  # stage1 | stage2_curated


@dataclass(frozen=True)
class PromptCompletion:
    """One supervised pair: instruction+table prompt, section prose completion."""

    prompt: str
    completion: str
    section: str
    style_attrs: StyleAttrs = field(default_factory=StyleAttrs)
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self) -> None:
        if not self.prompt or not self.completion:
            raise ValueError("prompt and completion must be non-empty")
        if self.section not in SECTIONS:
            raise ValueError(f"unknown section {self.section!r}")


# ---------------------------------------------------------------------------
# Report parsing
# ---------------------------------------------------------------------------

_MD_HEADING_RE = re.compile(r"^#{1,6}\s+(.*\S)\s*$")
_CAPS_HEADING_RE = re.compile(r"^[A-Z][A-Z0-9 &/,'-]{2,}$")
_TABLE_SEP_RE = re.compile(r"^\s*\|?[\s:|-]+\|?\s*$")


@dataclass
class ParseResult:
    sections: list[tuple[str, str]]
    tables: list[TabularData]
    warnings: list[str] = field(default_factory=list)


def _heading_of(line: str) -> str | None:
    m = _MD_HEADING_RE.match(line.strip())
    if m:
        return m.group(1)
    stripped = line.strip()
    if _CAPS_HEADING_RE.match(stripped) and len(stripped.split()) <= 8:
        return stripped.title()
    return None


def _is_table_line(line: str) -> bool:
    s = line.strip()
    return (s.startswith("|") and s.endswith("|") and s.count("|") >= 2) or "\t" in s


def _split_table_line(line: str) -> list[str]:
    s = line.strip()
    if s.startswith("|"):
        return [c.strip() for c in s.strip("|").split("|")]
    return [c.strip() for c in s.split("\t")]


def _parse_table_block(lines: list[str], caption: str, report_id: str) -> TabularData | None:
    rows_raw = [
        _split_table_line(ln) for ln in lines if not _TABLE_SEP_RE.match(ln.strip())
    ]
    if len(rows_raw) < 2:
        return None
    width = len(rows_raw[0])
    schema = tuple(rows_raw[0])
    rows = []
    for raw in rows_raw[1:]:
        cells = raw[:width] + [""] * (width - len(raw))
        rows.append(tuple(parse_cell(c) for c in cells))
    return TabularData(schema=schema, rows=tuple(rows), caption=caption,
                       source_report_id=report_id)


def parse_report(report: str, report_id: str = "") -> ParseResult:
    """Split a report into (name, body) sections and extracted tables.

    Headings are markdown ``#`` lines or short ALL-CAPS lines. Consecutive
    pipe- or tab-delimited lines form a table; a trailing "...:"-style line
    immediately above a table becomes its caption (the line also stays in
    the body). When no heading exists at all the whole document lands in a
    single "other" section and a ``no_sections`` warning is recorded.
    """
    lines = report.splitlines()
    sections: list[tuple[str, list[str]]] = []
    tables: list[TabularData] = []
    warnings: list[str] = []
    current_name: str | None = None
    current_body: list[str] = []

    def flush() -> None:
        nonlocal current_body
        if current_name is not None or current_body:
            sections.append((current_name or "other", current_body))
        current_body = []

    i = 0
    while i < len(lines):
        line = lines[i]
        heading = _heading_of(line)
        if heading is not None:
            flush()
            current_name = heading
            i += 1
            continue
        if _is_table_line(line):
            block = []
            while i < len(lines) and _is_table_line(lines[i]):
                block.append(lines[i])
                i += 1
            caption = ""
            for prev in reversed(current_body):
                if prev.strip():
                    if prev.strip().endswith(":") or prev.strip().lower().startswith("table"):
                        caption = prev.strip().rstrip(":")
                    break
            table = _parse_table_block(block, caption, report_id)
            if table is not None:
                tables.append(table)
            else:
                current_body.extend(block)
            continue
        current_body.append(line)
        i += 1
    flush()

    named = [(name, "\n".join(body).strip()) for name, body in sections]
    if not any(name != "other" for name, _ in named):
        warnings.append("no_sections")
        whole = "\n".join(lines).strip()
        named = [("other", whole)]
    return ParseResult(sections=named, tables=tables, warnings=warnings)


# ---------------------------------------------------------------------------
# Table augmentation
# ---------------------------------------------------------------------------

def augment_table(
    table: TabularData,
    seed: int,
    jitter_pct: float = 0.05,
    rename_columns: bool = False,
    synonym_map: dict[str, tuple[str, ...]] | None = None,
) -> TabularData:
    """Jitter every numeric cell by an independent factor in [1-j, 1+j].

    Draws come from a generator seeded with ``seed`` alone, so the same
    (table, seed) pair reproduces bit-identical output. Text cells, row
    count, and schema length never change; column names change only when
    ``rename_columns`` is set and the synonym map knows the column.
    """
    if not (0 < jitter_pct <= 0.5):
        raise InvalidJitter(f"jitter_pct must lie in (0, 0.5], got {jitter_pct}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    schema = list(table.schema)
    if rename_columns:
        synonyms = synonym_map if synonym_map is not None else load_column_synonyms()
        for idx, name in enumerate(schema):
            options = synonyms.get(name.strip().lower())
            if options:
                schema[idx] = options[int(rng.integers(len(options)))]

    rows = []
    for row in table.rows:
        cells = []
        for cell in row:
            if isinstance(cell, NumericCell):
                factor = float(rng.uniform(1.0 - jitter_pct, 1.0 + jitter_pct))
                cells.append(NumericCell(cell.value * factor, cell.unit))
            else:
                cells.append(cell)
        rows.append(tuple(cells))
    return TabularData(
        schema=tuple(schema),
        rows=tuple(rows),
        caption=table.caption,
        source_report_id=table.source_report_id,
    )


# ---------------------------------------------------------------------------
# Section inference and prompt assembly
# ---------------------------------------------------------------------------

_SECTION_RULES: tuple[tuple[str, tuple[tuple[str, ...], ...]], ...] = (
    ("revenues_by_geography", (("revenue", "geograph"), ("revenue", "geography"))),
    ("revenues_by_industry", (("revenue", "industry"),)),
    ("cash_to_shareholders", (("cash", "shareholder"),)),
    ("new_bookings", (("booking",),)),
    ("financial_review", (("financial", "review"),)),
    ("service_group_performance", (("service", "group"), ("service", "performance"))),
    ("industry_performance", (("industry", "performance"), ("industry", "group"))),
    ("performance_highlights", (("performance", "highlight"), ("highlight",))),
    ("growth_outlook", (("growth", "outlook"),)),
    ("business_outlook", (("business", "outlook"), ("outlook",))),
    ("introduction", (("introduction",), ("overview",))),
)


def infer_section(name: str) -> str:
    """Fuzzy-match a heading onto the closed section enum, else 'other'."""
    normalized = re.sub(r"[^a-z ]", " ", name.lower())
    if normalized.replace(" ", "_").strip("_") in SECTIONS:
        return normalized.replace(" ", "_").strip("_")
    for section, keyword_sets in _SECTION_RULES:
        for keywords in keyword_sets:
            if all(k in normalized for k in keywords):
                return section
    return "other"


def make_prompt_completion(
    section: tuple[str, str],
    table: TabularData,
    style: StyleAttrs | None = None,
    provenance: Provenance | None = None,
    config_dir: str | Path | None = None,
) -> PromptCompletion:
    """Build one training pair from a (name, body) section and its table."""
    name, body = section
    if not body.strip():
        raise EmptySection(f"section {name!r} has an empty body")
    style = style or StyleAttrs()
    section_enum = infer_section(name)
    template = load_section_template(section_enum, config_dir)
    prompt = template.format(
        table=table.render(),
        tone=style.tone,
        assertiveness=style.assertiveness,
        persona=style.persona,
    )
    return PromptCompletion(
        prompt=prompt,
        completion=body,
        section=section_enum,
        style_attrs=style,
        provenance=provenance or Provenance(source_report_id=table.source_report_id),
    )


# ---------------------------------------------------------------------------
# JSONL export / import
# ---------------------------------------------------------------------------

def pair_to_dict(pair: PromptCompletion) -> dict:
    return {
        "prompt": pair.prompt,
        "completion": pair.completion,
        "meta": {
            "section": pair.section,
            "style": {
                "tone": pair.style_attrs.tone,
                "assertiveness": pair.style_attrs.assertiveness,
                "persona": pair.style_attrs.persona,
            },
            "provenance": {
                "source_report_id": pair.provenance.source_report_id,
                "augmentation_seed": pair.provenance.augmentation_seed,
                "stage": pair.provenance.stage,
            },
        },
    }


def pair_from_dict(payload: dict) -> PromptCompletion:
    meta = payload.get("meta", {})
    style = meta.get("style", {})
    prov = meta.get("provenance", {})
    return PromptCompletion(
        prompt=payload["prompt"],
        completion=payload["completion"],
        section=meta.get("section", "other"),
        style_attrs=StyleAttrs(
            tone=style.get("tone", "measured"),
            assertiveness=style.get("assertiveness", "confident"),
            persona=style.get("persona", "a senior financial analyst"),
        ),
        provenance=Provenance(
            source_report_id=prov.get("source_report_id", ""),
            augmentation_seed=prov.get("augmentation_seed", 0),
            stage=prov.get("stage", "stage1"),
        ),
    )


def export_jsonl(dataset: Sequence[PromptCompletion], path: str | Path) -> int:
    """Write one JSON object per pair; returns the line count.

    The file appears atomically (temp file + rename) and only for non-empty
    datasets.
    """
    if not dataset:
        raise EmptyDataset("refusing to export an empty dataset")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with tmp.open("w", encoding="utf-8", newline="\n") as fh:
            for pair in dataset:
                try:
                    fh.write(json.dumps(pair_to_dict(pair), ensure_ascii=False) + "\n")
                except (TypeError, ValueError, UnicodeEncodeError) as exc:
                    raise SerializationFailure(str(exc)) from exc
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return len(dataset)


def import_jsonl(path: str | Path) -> list[PromptCompletion]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            pairs.append(pair_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise SerializationFailure(f"line {lineno}: {exc}") from exc
    return pairs
