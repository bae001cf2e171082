"""Loading of lexicons, templates, and synonym maps.

Defaults ship as package data under ``fist/config``; every loader accepts
a ``config_dir`` override (the CLI's --config-dir) whose files, when
present, replace the packaged defaults file-by-file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

SECTIONS = (
    "introduction",
    "growth_outlook",
    "service_group_performance",
    "industry_performance",
    "performance_highlights",
    "financial_review",
    "new_bookings",
    "revenues_by_geography",
    "revenues_by_industry",
    "cash_to_shareholders",
    "business_outlook",
    "other",
)


def _read_config_text(name: str, config_dir: str | Path | None) -> str:
    if config_dir is not None:
        override = Path(config_dir) / name
        if override.exists():
            return override.read_text(encoding="utf-8")
    parts = name.split("/")
    res = resources.files("fist").joinpath("config")
    for p in parts:
        res = res.joinpath(p)
    return res.read_text(encoding="utf-8")


def load_lexicon(name: str, config_dir: str | Path | None = None) -> tuple[str, ...]:
    """Plain-text lexicon: one entry per line, '#' starts a comment."""
    entries = []
    for line in _read_config_text(name, config_dir).splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            entries.append(line.lower())
    return tuple(entries)


@dataclass(frozen=True)
class Lexicons:
    """Read-only bundle of every extraction lexicon, loaded once and shared."""

    relation_cues: tuple[str, ...]
    metric_terms: tuple[str, ...]
    locations: tuple[str, ...]


@lru_cache(maxsize=8)
def load_lexicons(config_dir: str | Path | None = None) -> Lexicons:
    return Lexicons(
        relation_cues=load_lexicon("relation_cues.txt", config_dir),
        metric_terms=load_lexicon("metric_terms.txt", config_dir),
        locations=load_lexicon("locations.txt", config_dir),
    )


@lru_cache(maxsize=8)
def load_predicate_groups(config_dir: str | Path | None = None) -> dict[str, tuple[str, ...]]:
    raw = json.loads(_read_config_text("predicate_groups.json", config_dir))
    return {k: tuple(v) for k, v in raw.items()}


@lru_cache(maxsize=8)
def load_column_synonyms(config_dir: str | Path | None = None) -> dict[str, tuple[str, ...]]:
    """Column-name synonym map: 'original = syn1, syn2' per line."""
    out: dict[str, tuple[str, ...]] = {}
    for line in _read_config_text("column_synonyms.txt", config_dir).splitlines():
        line = line.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, rhs = line.split("=", 1)
        syns = tuple(s.strip() for s in rhs.split(",") if s.strip())
        if syns:
            out[key.strip().lower()] = syns
    return out


def load_section_template(section: str, config_dir: str | Path | None = None) -> str:
    if section not in SECTIONS:
        section = "other"
    return _read_config_text(f"templates/{section}.txt", config_dir)
