"""Rule-based extraction of financial entities and relations, plus
knowledge-density scoring and graph assembly.

The extractor is deliberately self-contained: regex patterns plus plain
lexicon files, so results are deterministic and reproducible with no model
dependency. Callers that already have richer annotations can hand their
own entity lists to ``extract_relations``.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .configload import Lexicons, load_lexicons
from .errors import AllZero, EmptyDocument

__all__ = [
    "Entity",
    "Relation",
    "KGNode",
    "KnowledgeGraph",
    "extract_entities",
    "extract_relations",
    "kdps",
    "scaled_kdps",
    "build_kg",
]

ENTITY_KINDS = (
    "organization",
    "money",
    "percent",
    "date",
    "quarter",
    "metric-term",
    "location",
    "other",
)


@dataclass(frozen=True)
class Entity:
    """One extracted entity occurrence within a sentence."""

    surface: str
    kind: str
    sentence_index: int
    char_span: tuple[int, int]

    def __post_init__(self) -> None:
        if not self.surface:
            raise ValueError("entity surface must be non-empty")
        if self.kind not in ENTITY_KINDS:
            raise ValueError(f"unknown entity kind {self.kind!r}")
        start, end = self.char_span
        if not (0 <= start < end):
            raise ValueError(f"invalid char span {self.char_span}")


@dataclass(frozen=True)
class Relation:
    """A cue-labeled edge between two entities of the same sentence."""

    subject: Entity
    object: Entity
    label: str
    sentence_index: int

    def __post_init__(self) -> None:
        if self.subject == self.object:
            raise ValueError("relation endpoints must differ")
        if self.subject.sentence_index != self.object.sentence_index:
            raise ValueError("cross-sentence relations are not supported")


# ---------------------------------------------------------------------------
# Entity extraction
# ---------------------------------------------------------------------------

_NUM = r"\d{1,3}(?:,\d{3})*(?:\.\d+)?|\d+(?:\.\d+)?"
_SCALE = r"(?:\s?(?:million|billion|trillion|mn|bn))?"

_MONEY_RE = re.compile(
    rf"(?:[$€£]\s?(?:{_NUM}){_SCALE})|(?:\b(?:USD|EUR|GBP)\s?(?:{_NUM}){_SCALE})"
)
_PERCENT_RE = re.compile(rf"(?:{_NUM})\s?%")
_QUARTER_RE = re.compile(r"\bQ[1-4]\b")
_MONTHS = (
    "January February March April May June July August "
    "September October November December".split()
)
_DATE_RE = re.compile(
    r"\b(?:" + "|".join(_MONTHS) + r")(?:\s+\d{1,2})?(?:,?\s+(?:19|20)\d{2})?\b"
    r"|\b(?:19|20)\d{2}\b"
)
_CAP_RUN_RE = re.compile(r"\b[A-Z][A-Za-z0-9&.'-]*(?:\s+[A-Z][A-Za-z0-9&.'-]*)*")

# Capitalized function words never start an organization name.
_ORG_STOPWORDS = frozenset(
    "the a an it its in on at of for but and or this that these those our we "
    "they he she as by with from to is was were here there".split()
)
_ORG_SUFFIXES = frozenset(
    "inc inc. corp corp. ltd ltd. llc plc co co. group holdings partners".split()
)


@lru_cache(maxsize=64)
def _term_regex(terms: tuple[str, ...]) -> re.Pattern:
    # longest-first alternation so multiword terms win over their words
    ordered = sorted(terms, key=len, reverse=True)
    return re.compile(
        r"\b(?:" + "|".join(re.escape(t) for t in ordered) + r")\b", re.IGNORECASE
    )


def _word_match_spans(text: str, terms: Sequence[str]) -> list[tuple[int, int, str]]:
    if not terms:
        return []
    return [
        (m.start(), m.end(), m.group(0))
        for m in _term_regex(tuple(terms)).finditer(text)
    ]


def _overlaps(span: tuple[int, int], claimed: list[tuple[int, int]]) -> bool:
    s, e = span
    return any(s < ce and cs < e for cs, ce in claimed)


def _is_allcaps(token: str) -> bool:
    letters = [c for c in token if c.isalpha()]
    return len(letters) >= 2 and all(c.isupper() for c in letters)


def extract_entities(
    sentence: str,
    sentence_index: int = 0,
    lexicons: Lexicons | None = None,
) -> list[Entity]:
    """Deterministic entity extraction over one segmented sentence.

    Pattern precedence: money, percent, quarter, date, location, metric
    term, then capitalized runs as organizations. Earlier patterns claim
    their character spans; later ones skip anything overlapping.
    """
    if not sentence.strip():
        return []
    lex = lexicons or load_lexicons()
    claimed: list[tuple[int, int]] = []
    found: list[Entity] = []

    def take(start: int, end: int, surface: str, kind: str) -> None:
        if _overlaps((start, end), claimed):
            return
        claimed.append((start, end))
        found.append(Entity(surface, kind, sentence_index, (start, end)))

    for regex, kind in ((_MONEY_RE, "money"), (_PERCENT_RE, "percent"),
                        (_QUARTER_RE, "quarter"), (_DATE_RE, "date")):
        for m in regex.finditer(sentence):
            take(m.start(), m.end(), m.group(0), kind)

    for start, end, surface in sorted(_word_match_spans(sentence, lex.locations),
                                      key=lambda t: (t[0], -(t[1]))):
        take(start, end, surface, "location")
    for start, end, surface in sorted(_word_match_spans(sentence, lex.metric_terms),
                                      key=lambda t: (t[0], -(t[1] - t[0]))):
        take(start, end, surface, "metric-term")

    for m in _CAP_RUN_RE.finditer(sentence):
        tokens = m.group(0).split()
        offset = m.start()
        # drop leading capitalized stopwords ("The company ...")
        while tokens and tokens[0].lower().strip(".,") in _ORG_STOPWORDS:
            offset += len(tokens[0]) + 1
            tokens = tokens[1:]
        while tokens and tokens[-1].lower().strip(".,") in _ORG_STOPWORDS:
            tokens = tokens[:-1]
        if not tokens:
            continue
        surface = " ".join(tokens).rstrip(".,;:")
        if not surface:
            continue
        start = offset
        end = offset + len(surface)
        if _overlaps((start, end), claimed):
            continue
        at_sentence_start = start == 0
        strong = (
            len(tokens) >= 2
            or any(_is_allcaps(t) for t in tokens)
            or tokens[-1].lower() in _ORG_SUFFIXES
        )
        if at_sentence_start and not strong:
            continue
        take(start, end, surface, "organization")

    found.sort(key=lambda e: e.char_span)
    return found


# ---------------------------------------------------------------------------
# Relation extraction
# ---------------------------------------------------------------------------

_PRONOUNS = frozenset("it they he she we its their".split())
_PREPOSITIONS = frozenset("at in to by of".split())
_WORD_RE = re.compile(r"\S+")


def _sentence_tokens(sentence: str) -> list[tuple[str, int, int]]:
    return [(m.group(0), m.start(), m.end()) for m in _WORD_RE.finditer(sentence)]


def _clean(token: str) -> str:
    return token.strip(".,;:!?\"'()").lower()


def extract_relations(
    sentence: str,
    entities: Sequence[Entity],
    lexicons: Lexicons | None = None,
) -> list[Relation]:
    """Emit one relation per cue occurrence sitting between two entities.

    Subject is the nearest entity left of the cue; when a pronoun directly
    precedes the cue the subject snaps to the nearest preceding organization
    instead (adjacency, not true coreference). Object is the nearest entity
    to the right. A preposition immediately after the cue joins the label.
    """
    if len(entities) < 2:
        return []
    lex = lexicons or load_lexicons()
    tokens = _sentence_tokens(sentence)
    cleaned = [_clean(t) for t, _, _ in tokens]
    cues = [tuple(c.split()) for c in lex.relation_cues]

    relations: list[Relation] = []
    i = 0
    while i < len(tokens):
        matched: tuple[str, int, int] | None = None  # (label, start_tok, end_tok)
        for cue in sorted(cues, key=len, reverse=True):
            if tuple(cleaned[i : i + len(cue)]) == cue:
                label = " ".join(cue)
                end = i + len(cue)
                if len(cue) == 1 and end < len(tokens) and cleaned[end] in _PREPOSITIONS:
                    label = f"{label} {cleaned[end]}"
                    end += 1
                matched = (label, i, end)
                break
        if matched is None:
            i += 1
            continue
        label, start_tok, end_tok = matched
        cue_start = tokens[start_tok][1]
        cue_end = tokens[end_tok - 1][2]

        left = [e for e in entities if e.char_span[1] <= cue_start]
        right = [e for e in entities if e.char_span[0] >= cue_end]
        if left and right:
            subject = left[-1]
            if start_tok > 0 and cleaned[start_tok - 1] in _PRONOUNS:
                orgs = [e for e in left if e.kind == "organization"]
                if orgs:
                    subject = orgs[-1]
            obj = right[0]
            if subject != obj:
                relations.append(Relation(subject, obj, label, subject.sentence_index))
        i = end_tok
    return relations


# ---------------------------------------------------------------------------
# Knowledge density
# ---------------------------------------------------------------------------

def _count(x: int | Sequence) -> int:
    return x if isinstance(x, int) else len(x)


def kdps(sentences: Sequence[tuple]) -> float:
    """Knowledge density per sentence: mean of entity + relation counts.

    Accepts (entities, relations) pairs where each element is either a
    sequence or a bare count.
    """
    if len(sentences) == 0:
        raise EmptyDocument("kdps requires at least one sentence")
    total = sum(_count(e) + _count(r) for e, r in sentences)
    return total / len(sentences)


def scaled_kdps(values: Sequence[float]) -> list[float]:
    """Scale a comparison set by its maximum, mapping onto (0, 1]."""
    if not values:
        raise EmptyDocument("no values to scale")
    peak = max(values)
    if peak <= 0:
        raise AllZero("cannot max-scale an all-zero comparison set")
    return [v / peak for v in values]


# ---------------------------------------------------------------------------
# Graph assembly and serialization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KGNode:
    """Deduplicated graph node: one per (case-folded surface, kind)."""

    id: str
    surface: str
    kind: str


@dataclass(frozen=True)
class KGEdge:
    src: str
    dst: str
    label: str
    sentence: int


def _node_id(surface: str, kind: str) -> str:
    return f"{kind}:{' '.join(surface.casefold().split())}"


@dataclass
class KnowledgeGraph:
    """Entities as deduplicated nodes, relations as a multiset of edges."""

    nodes: list[KGNode]
    edges: list[KGEdge]

    def to_json(self) -> str:
        payload = {
            "nodes": [{"id": n.id, "surface": n.surface, "kind": n.kind} for n in self.nodes],
            "edges": [
                {"src": e.src, "dst": e.dst, "label": e.label, "sentence": e.sentence}
                for e in self.edges
            ],
        }
        return json.dumps(payload, ensure_ascii=False, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "KnowledgeGraph":
        payload = json.loads(text)
        nodes = [KGNode(n["id"], n["surface"], n["kind"]) for n in payload["nodes"]]
        edges = [
            KGEdge(e["src"], e["dst"], e["label"], e["sentence"]) for e in payload["edges"]
        ]
        return cls(nodes=nodes, edges=edges)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeGraph":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_kg(
    document: Iterable[str],
    lexicons: Lexicons | None = None,
) -> KnowledgeGraph:
    """Extract per-sentence entities/relations and fold them into one graph."""
    lex = lexicons or load_lexicons()
    nodes: dict[str, KGNode] = {}
    edges: list[KGEdge] = []
    for idx, sentence in enumerate(document):
        entities = extract_entities(sentence, idx, lex)
        for ent in entities:
            nid = _node_id(ent.surface, ent.kind)
            if nid not in nodes:
                nodes[nid] = KGNode(nid, ent.surface, ent.kind)
        for rel in extract_relations(sentence, entities, lex):
            edges.append(
                KGEdge(
                    src=_node_id(rel.subject.surface, rel.subject.kind),
                    dst=_node_id(rel.object.surface, rel.object.kind),
                    label=rel.label,
                    sentence=idx,
                )
            )
    return KnowledgeGraph(nodes=list(nodes.values()), edges=edges)
