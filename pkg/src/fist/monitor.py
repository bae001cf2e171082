"""Sentence-level scoring of generated responses and quality categorization.

A response is segmented into sentence spans over its token sequence; each
span is scored (ASLS, cross-entropy, perplexity, entity/relation counts)
and low-certainty spans get flagged as hallucination-or-creativity
candidates. The artifact never tries to tell hallucination and creativity
apart automatically: flagged sentences carry the evidence and a human
makes the call during curation. Rule-based categorization against
reference facts is available as an advisory label that a human label
always overrides.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kg, metrics
from .configload import Lexicons, load_lexicons, load_predicate_groups
from .errors import (
    EmptyResponse,
    InvalidThreshold,
    IoFailure,
    NoReferenceFacts,
)
from .gateway import GenerationResponse
from .metrics import MetricBundle, TokenLogProb

__all__ = [
    "SentenceSpan",
    "ScoredSentence",
    "EvalRecord",
    "ReferenceFact",
    "segment_sentences",
    "score_sentences",
    "flag_low_certainty",
    "adaptive_thresholds",
    "categorize",
    "evaluate_response",
    "export_scatter",
    "load_reference_facts",
]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SentenceSpan:
    """Half-open token range [start_token, end_token) covering one sentence."""

    start_token: int
    end_token: int
    text: str
    sentence_index: int

    def __post_init__(self) -> None:
        if not (0 <= self.start_token < self.end_token):
            raise ValueError(f"invalid span [{self.start_token}, {self.end_token})")


@dataclass(frozen=True)
class ScoredSentence:
    span: SentenceSpan
    asls: float
    cross_entropy: float
    perplexity: float
    entity_count: int
    relation_count: int
    flag: str = "none"  # none | low_certainty

    @property
    def token_count(self) -> int:
        return self.span.end_token - self.span.start_token

    @property
    def ce_per_token(self) -> float:
        return self.cross_entropy / self.token_count


CATEGORIES = ("correct", "hallucination", "incomplete", "unlabeled")
LABEL_SOURCES = ("human", "rule", "none")


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated (query, context, response) triple with its scores."""

    query: str
    context: str
    response: str
    tokens: tuple[TokenLogProb, ...]
    metrics: MetricBundle
    sentences: tuple[ScoredSentence, ...]
    category: str = "unlabeled"
    label_source: str = "none"

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if self.label_source not in LABEL_SOURCES:
            raise ValueError(f"unknown label source {self.label_source!r}")
        if self.category != "unlabeled" and self.label_source == "none":
            raise ValueError("a labeled record must carry a label source")


@dataclass(frozen=True)
class ReferenceFact:
    subject: str
    predicate: str
    value: float
    unit: str = ""


def load_reference_facts(path: str | Path) -> list[ReferenceFact]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        ReferenceFact(f["subject"], f["predicate"], float(f["value"]), f.get("unit", ""))
        for f in payload
    ]


# ---------------------------------------------------------------------------
# Sentence segmentation
# ---------------------------------------------------------------------------

_ABBREVIATIONS = frozenset(
    "mr mrs ms dr prof inc ltd corp co no vs etc e.g i.e fig st approx "
    "q1 q2 q3 q4 jan feb mar apr jun jul aug sep sept oct nov dec u.s".split()
)

_TERMINALS = ".!?"


def _last_word(text: str) -> str:
    words = text.rstrip().split()
    return words[-1] if words else ""


def _is_boundary(text_so_far: str, next_fragment: str | None) -> bool:
    stripped = text_so_far.rstrip()
    if not stripped or stripped[-1] not in _TERMINALS:
        return False
    word = _last_word(stripped).strip('"”)’')
    if word[:-1].lower().rstrip(".") in _ABBREVIATIONS:
        return False
    if next_fragment is None:
        return True
    upcoming = next_fragment.lstrip()
    return bool(upcoming) and upcoming[0].isupper()


def segment_token_spans(tokens: Sequence[TokenLogProb]) -> list[SentenceSpan]:
    """Partition a token sequence into sentence spans.

    A sentence ends after a token whose text closes with terminal
    punctuation, provided the trailing word is not a guarded abbreviation
    and the next fragment opens with whitespace plus a capital (or the text
    ends). With no terminal at all the whole sequence is one span.
    """
    if not tokens:
        raise EmptyResponse("cannot segment an empty token sequence")
    spans: list[SentenceSpan] = []
    start = 0
    acc = ""
    for i, tok in enumerate(tokens):
        acc += tok.token
        nxt = tokens[i + 1].token if i + 1 < len(tokens) else None
        if _is_boundary(acc, nxt) or nxt is None:
            spans.append(
                SentenceSpan(
                    start_token=start,
                    end_token=i + 1,
                    text=acc,
                    sentence_index=len(spans),
                )
            )
            start = i + 1
            acc = ""
    return spans


def segment_sentences(response: GenerationResponse) -> list[SentenceSpan]:
    if response.finish_reason == "error":
        raise EmptyResponse("cannot segment an error response")
    return segment_token_spans(response.tokens)


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def _score_span(
    tokens: Sequence[TokenLogProb],
    span: SentenceSpan,
    lexicons: Lexicons | None,
) -> ScoredSentence:
    chunk = tokens[span.start_token : span.end_token]
    sentence_text = span.text.strip()
    entities = kg.extract_entities(sentence_text, span.sentence_index, lexicons)
    relations = kg.extract_relations(sentence_text, entities, lexicons)
    return ScoredSentence(
        span=span,
        asls=metrics.asls(chunk),
        cross_entropy=metrics.cross_entropy(chunk),
        perplexity=metrics.perplexity(chunk),
        entity_count=len(entities),
        relation_count=len(relations),
    )


def score_sentences(
    record: EvalRecord,
    lexicons: Lexicons | None = None,
) -> list[ScoredSentence]:
    """Score each sentence span of a record from its token slice."""
    if not record.tokens:
        raise EmptyResponse("record has no tokens to score")
    spans = (
        [s.span for s in record.sentences]
        if record.sentences
        else segment_token_spans(record.tokens)
    )
    return [_score_span(record.tokens, span, lexicons) for span in spans]


def adaptive_thresholds(sentences: Sequence[ScoredSentence]) -> tuple[float, float]:
    """Run-relative defaults: 25th pct sentence ASLS, 75th pct per-token CE."""
    if not sentences:
        raise EmptyResponse("no sentences to derive thresholds from")
    asls_floor = float(np.percentile([s.asls for s in sentences], 25))
    token_ce: list[float] = []
    for s in sentences:
        token_ce.extend([s.ce_per_token] * s.token_count)
    ceiling = float(np.percentile(token_ce, 75))
    return asls_floor, max(ceiling, 1e-12)


def flag_low_certainty(
    sentences: Sequence[ScoredSentence],
    asls_floor: float,
    ce_per_token_ceiling: float,
) -> list[ScoredSentence]:
    """Mark sentences whose ASLS falls below the floor or per-token CE
    exceeds the ceiling.

    Flagged sentences are hallucination-or-creativity candidates only;
    telling the two apart is a human decision made at curation time.
    """
    if not (asls_floor >= 0) or math.isnan(ce_per_token_ceiling) or ce_per_token_ceiling <= 0:
        raise InvalidThreshold(
            f"asls_floor must be >= 0 and ceiling > 0, got {asls_floor}, {ce_per_token_ceiling}"
        )
    out = []
    for s in sentences:
        flagged = s.asls < asls_floor or s.ce_per_token > ce_per_token_ceiling
        out.append(replace(s, flag="low_certainty" if flagged else "none"))
    return out


# ---------------------------------------------------------------------------
# Claim extraction and categorization
# ---------------------------------------------------------------------------

_SCALES = {"million": 1e6, "billion": 1e9, "trillion": 1e12, "mn": 1e6, "bn": 1e9}


def _numeric_of(entity: kg.Entity) -> tuple[float, str] | None:
    """Parse (value, unit) from a percent or money entity surface."""
    surface = entity.surface
    if entity.kind == "percent":
        return float(re.sub(r"[%,\s]", "", surface)), "%"
    if entity.kind == "money":
        unit = surface[0] if surface[0] in "$€£" else surface[:3]
        body = surface.lstrip("$€£").lstrip("USDEURGBP").strip()
        scale = 1.0
        for word, mult in _SCALES.items():
            if body.lower().endswith(word):
                body = body[: -len(word)].strip()
                scale = mult
                break
        return float(body.replace(",", "")) * scale, unit
    return None


@dataclass(frozen=True)
class _Claim:
    subject: str
    cue: str
    value: float
    unit: str
    metric: str | None
    kind: str  # primary | delta
    sentence_index: int


_DELTA_RE = re.compile(r"\bby\s+(\d+(?:\.\d+)?)\s?%")


def _extract_claims(
    sentence: str,
    sentence_index: int,
    lexicons: Lexicons | None,
) -> list[_Claim]:
    lex = lexicons or load_lexicons()
    entities = kg.extract_entities(sentence, sentence_index, lex)
    orgs = [e for e in entities if e.kind == "organization"]
    if not orgs:
        return []
    relations = kg.extract_relations(sentence, entities, lex)
    claims: list[_Claim] = []
    for rel in relations:
        cue_base = rel.label.split()[0]
        subject = rel.subject if rel.subject.kind == "organization" else None
        if subject is None:
            left_orgs = [o for o in orgs if o.char_span[1] <= rel.subject.char_span[1]]
            subject = left_orgs[-1] if left_orgs else orgs[0]
        # the claimed value: the relation object when numeric, else the
        # nearest numeric entity after the cue
        numeric = _numeric_of(rel.object)
        obj = rel.object
        if numeric is None:
            after = [
                e for e in entities
                if e.char_span[0] >= rel.object.char_span[0] and _numeric_of(e)
            ]
            if not after:
                continue
            obj = after[0]
            numeric = _numeric_of(obj)
        value, unit = numeric
        metric = None
        candidates = [
            e for e in entities
            if e.kind == "metric-term"
            and rel.subject.char_span[0] <= e.char_span[0] <= obj.char_span[1] + 24
        ]
        if candidates:
            metric = candidates[0].surface.lower()
        claims.append(
            _Claim(
                subject=subject.surface,
                cue=cue_base,
                value=value,
                unit=unit,
                metric=metric,
                kind="primary",
                sentence_index=sentence_index,
            )
        )
        if cue_base in ("missed", "exceeded"):
            m = _DELTA_RE.search(sentence, obj.char_span[1])
            if m:
                claims.append(
                    _Claim(
                        subject=subject.surface,
                        cue=cue_base,
                        value=float(m.group(1)),
                        unit="%",
                        metric=metric,
                        kind="delta",
                        sentence_index=sentence_index,
                    )
                )
    return claims


def _values_match(claim_value: float, fact_value: float, rel_tol: float) -> bool:
    if fact_value == 0:
        return abs(claim_value) <= 1e-9
    return abs(claim_value - fact_value) <= rel_tol * abs(fact_value)


def _normalize_term(term: str) -> str:
    return term.lower().rstrip("s")


def categorize(
    record: EvalRecord,
    reference_facts: Sequence[ReferenceFact],
    rel_tol: float = 0.005,
    min_coverage: float = 0.25,
    lexicons: Lexicons | None = None,
) -> str:
    """Advisory quality category for a response given reference facts.

    Numeric claims are extracted per sentence and checked against the
    facts at 0.5% relative tolerance: any contradiction makes the response
    a hallucination; no claims (or too little fact coverage) makes it
    incomplete; otherwise, with every verifiable claim in agreement, it is
    correct. A human label recorded on the record always wins.
    """
    if not reference_facts:
        raise NoReferenceFacts("categorize requires at least one reference fact")
    if record.label_source == "human" and record.category != "unlabeled":
        return record.category

    groups = load_predicate_groups()
    target_cues = set(groups["target_cues"])
    achieved_cues = set(groups["achieved_cues"])
    missed_cues = set(groups["missed_cues"])
    target_preds = {_normalize_term(p) for p in groups["target_fact_predicates"]}

    def fact_is_target(f: ReferenceFact) -> bool:
        return _normalize_term(f.predicate) in target_preds

    def subject_facts(subject: str, want_target: bool) -> list[ReferenceFact]:
        return [
            f
            for f in reference_facts
            if f.subject.casefold() == subject.casefold()
            and fact_is_target(f) == want_target
        ]

    claims: list[_Claim] = []
    for sent in record.sentences or score_sentences(record, lexicons):
        claims.extend(
            _extract_claims(sent.span.text.strip(), sent.span.sentence_index, lexicons)
        )

    if not claims:
        return "incomplete"

    contradiction = False
    any_match = False
    all_verifiable_match = True
    covered: set[int] = set()

    def check(claim: _Claim, facts: list[ReferenceFact]) -> None:
        nonlocal contradiction, any_match, all_verifiable_match
        if claim.metric:
            narrowed = [
                f for f in facts
                if _normalize_term(f.predicate) == _normalize_term(claim.metric)
            ]
            facts = narrowed or ([] if len(facts) > 1 else facts)
        facts = [f for f in facts if not f.unit or not claim.unit or f.unit == claim.unit]
        if not facts:
            all_verifiable_match = False  # unverifiable claim
            return
        if any(_values_match(claim.value, f.value, rel_tol) for f in facts):
            any_match = True
            for f in facts:
                if _values_match(claim.value, f.value, rel_tol):
                    covered.add(reference_facts.index(f))
        else:
            contradiction = True

    for claim in claims:
        if claim.kind == "delta":
            subj_target = subject_facts(claim.subject, True)
            subj_achieved = subject_facts(claim.subject, False)
            if subj_target and subj_achieved:
                expected = abs(subj_target[0].value - subj_achieved[0].value)
                if _values_match(claim.value, expected, rel_tol):
                    any_match = True
                    covered.add(reference_facts.index(subj_target[0]))
                    covered.add(reference_facts.index(subj_achieved[0]))
                else:
                    contradiction = True
            continue
        if claim.cue in missed_cues:
            check(claim, subject_facts(claim.subject, True))
            # claiming a miss while the achieved value equals the stated
            # figure contradicts the facts
            for f in subject_facts(claim.subject, False):
                if _values_match(claim.value, f.value, rel_tol):
                    contradiction = True
        elif claim.cue in target_cues:
            check(claim, subject_facts(claim.subject, True))
        elif claim.cue in achieved_cues:
            check(claim, subject_facts(claim.subject, False))
        else:
            all_verifiable_match = False

    if contradiction:
        return "hallucination"
    coverage = len(covered) / len(reference_facts)
    if not any_match or coverage < min_coverage:
        return "incomplete"
    return "correct" if all_verifiable_match else "incomplete"


# ---------------------------------------------------------------------------
# Record assembly
# ---------------------------------------------------------------------------

def evaluate_response(
    query: str,
    context: str,
    response: GenerationResponse,
    lexicons: Lexicons | None = None,
) -> EvalRecord:
    """Assemble a fully scored EvalRecord from a generation response."""
    if response.finish_reason == "error" or not response.tokens:
        raise EmptyResponse("cannot evaluate an error response")
    record = EvalRecord(
        query=query,
        context=context,
        response=response.text,
        tokens=response.tokens,
        metrics=metrics.bundle(response.tokens, response.text, context),
        sentences=(),
    )
    return replace(record, sentences=tuple(score_sentences(record, lexicons)))


# ---------------------------------------------------------------------------
# Serialization (persisted with pipeline runs)
# ---------------------------------------------------------------------------

def record_to_dict(record: EvalRecord) -> dict:
    return {
        "query": record.query,
        "context": record.context,
        "response": record.response,
        "tokens": [
            {
                "token": t.token,
                "logprob": t.chosen_logprob,
                "alternatives": [[a, lp] for a, lp in t.alternatives],
            }
            for t in record.tokens
        ],
        "metrics": record.metrics.as_dict(),
        "sentences": [
            {
                "start_token": s.span.start_token,
                "end_token": s.span.end_token,
                "text": s.span.text,
                "sentence_index": s.span.sentence_index,
                "asls": s.asls,
                "cross_entropy": s.cross_entropy,
                "perplexity": s.perplexity,
                "entity_count": s.entity_count,
                "relation_count": s.relation_count,
                "flag": s.flag,
            }
            for s in record.sentences
        ],
        "category": record.category,
        "label_source": record.label_source,
    }


def record_from_dict(payload: dict) -> EvalRecord:
    tokens = tuple(
        TokenLogProb(
            token=t["token"],
            chosen_logprob=t["logprob"],
            alternatives=tuple((a, lp) for a, lp in t["alternatives"]),
        )
        for t in payload["tokens"]
    )
    sentences = tuple(
        ScoredSentence(
            span=SentenceSpan(
                start_token=s["start_token"],
                end_token=s["end_token"],
                text=s["text"],
                sentence_index=s["sentence_index"],
            ),
            asls=s["asls"],
            cross_entropy=s["cross_entropy"],
            perplexity=s["perplexity"],
            entity_count=s["entity_count"],
            relation_count=s["relation_count"],
            flag=s["flag"],
        )
        for s in payload["sentences"]
    )
    return EvalRecord(
        query=payload["query"],
        context=payload["context"],
        response=payload["response"],
        tokens=tokens,
        metrics=MetricBundle(**payload["metrics"]),
        sentences=sentences,
        category=payload["category"],
        label_source=payload["label_source"],
    )


# ---------------------------------------------------------------------------
# Scatter export
# ---------------------------------------------------------------------------

def export_scatter(
    records: Sequence[EvalRecord],
    metric: str,
    path: str | Path,
    run_labels: Sequence[str] | None = None,
    svg_path: str | Path | None = None,
) -> int:
    """Write per-sentence metric values as CSV; returns the row count.

    Columns: run_label, record_id, sentence_index, value, flag. Values are
    rounded to 4 decimals; rows follow record then sentence order. The
    optional SVG companion renders the same points grouped by run label.
    """
    if metric not in ("ce", "asls"):
        raise ValueError(f"metric must be 'ce' or 'asls', got {metric!r}")
    if not records:
        raise EmptyResponse("no records to export")
    labels = list(run_labels) if run_labels is not None else ["run"] * len(records)
    if len(labels) != len(records):
        raise ValueError("run_labels must align with records")

    rows: list[tuple[str, int, int, float, str]] = []
    for rec_id, (label, record) in enumerate(zip(labels, records)):
        for s in record.sentences:
            value = s.cross_entropy if metric == "ce" else s.asls
            rows.append((label, rec_id, s.span.sentence_index, round(value, 4), s.flag))

    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with tmp.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["run_label", "record_id", "sentence_index", "value", "flag"])
            for row in rows:
                writer.writerow([row[0], row[1], row[2], f"{row[3]:.4f}", row[4]])
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoFailure(f"cannot write {path}: {exc}") from exc

    if svg_path is not None:
        _write_scatter_svg(rows, metric, svg_path)
    return len(rows)


_SVG_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")


def _write_scatter_svg(
    rows: Sequence[tuple[str, int, int, float, str]],
    metric: str,
    path: str | Path,
) -> None:
    # hand-rolled SVG keeps the bytes deterministic
    width, height, pad = 720, 420, 48
    values = [r[3] for r in rows]
    vmax = max(values) or 1.0
    labels = list(dict.fromkeys(r[0] for r in rows))
    per_label_x: dict[str, int] = {}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{pad}" y="24" font-family="sans-serif" font-size="14">'
        f"per-sentence {metric} by run</text>",
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
        'stroke="#333"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="#333"/>',
    ]
    for li, label in enumerate(labels):
        color = _SVG_COLORS[li % len(_SVG_COLORS)]
        xs = [r for r in rows if r[0] == label]
        for pi, row in enumerate(xs):
            x = pad + (width - 2 * pad) * ((li + (pi + 1) / (len(xs) + 1)) / len(labels))
            y = height - pad - (height - 2 * pad) * (row[3] / vmax)
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2.5" fill="{color}"/>')
        lx = pad + (width - 2 * pad) * ((li + 0.5) / len(labels))
        parts.append(
            f'<text x="{lx:.1f}" y="{height - pad + 18}" font-family="sans-serif" '
            f'font-size="12" text-anchor="middle" fill="{color}">{label}</text>'
        )
        per_label_x[label] = int(lx)
    parts.append("</svg>")
    try:
        Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
