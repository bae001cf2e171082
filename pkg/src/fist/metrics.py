"""Text-quality metrics over token log-probabilities and text pairs.

Two metric families live here:

* Sequence-confidence metrics computed from per-token log-probabilities
  (natural log throughout): ``perplexity``, ``asls`` (averaged sequential
  log-loss), and ``cross_entropy``.
* Reference-based similarity metrics computed from text pairs: ``bleu``,
  ``rouge_l``, ``ter``, and ``chrf_pp``.

All functions are pure: identical inputs give bit-identical outputs, and
no function mutates its arguments, so everything here is safe to call
from concurrent workers.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    EmptyCandidate,
    EmptyReference,
    EmptyReferences,
    EmptySequence,
    InvalidLogprob,
)

__all__ = [
    "TokenLogProb",
    "MetricBundle",
    "perplexity",
    "asls",
    "cross_entropy",
    "bleu",
    "rouge_l",
    "ter",
    "chrf_pp",
    "tokenize",
    "validate_token",
    "chosen_only_view",
]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TokenLogProb:
    """One generated token with its log-probability and top-k alternatives.

    ``alternatives`` holds between 1 and 5 ``(token, logprob)`` pairs sorted
    by logprob, highest first. When the chosen token appears among the
    alternatives its ``chosen_logprob`` must equal the top alternative's
    logprob (the generator picked the argmax).
    """

    token: str
    chosen_logprob: float
    alternatives: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "alternatives", tuple((t, float(p)) for t, p in self.alternatives)
        )

    @property
    def max_alt_logprob(self) -> float:
        return self.alternatives[0][1]


def validate_token(tok: TokenLogProb) -> None:
    """Enforce the TokenLogProb invariants, raising InvalidLogprob on breach.

    Used as a firewall by anything that ingests provider output.
    """
    if not tok.alternatives or len(tok.alternatives) > 5:
        raise InvalidLogprob(
            f"token {tok.token!r} must carry 1-5 alternatives, got {len(tok.alternatives)}"
        )
    if tok.chosen_logprob > 0 or not math.isfinite(tok.chosen_logprob):
        raise InvalidLogprob(f"chosen logprob {tok.chosen_logprob} > 0 for {tok.token!r}")
    prev = None
    for alt_tok, lp in tok.alternatives:
        if lp > 0 or not math.isfinite(lp):
            raise InvalidLogprob(f"alternative logprob {lp} > 0 for {alt_tok!r}")
        if prev is not None and lp > prev:
            raise InvalidLogprob(f"alternatives not sorted descending at {alt_tok!r}")
        prev = lp
    for alt_tok, lp in tok.alternatives:
        if alt_tok == tok.token and tok.chosen_logprob != tok.max_alt_logprob:
            raise InvalidLogprob(
                f"chosen token {tok.token!r} appears among alternatives but "
                f"chosen_logprob {tok.chosen_logprob} != top alternative {tok.max_alt_logprob}"
            )


def chosen_only_view(tokens: Sequence[TokenLogProb]) -> list[TokenLogProb]:
    """Project each token down to a single alternative: the chosen one."""
    return [
        TokenLogProb(t.token, t.chosen_logprob, ((t.token, t.chosen_logprob),))
        for t in tokens
    ]


@dataclass(frozen=True)
class MetricBundle:
    """All metric values for one evaluated response.

    ``ter`` is a percentage and may exceed 100 when the candidate is much
    longer than the reference; every other field stays in its nominal range.
    """

    perplexity: float
    asls: float
    cross_entropy: float
    bleu: float
    rouge_l: float
    chrf_pp: float
    ter: float

    def __post_init__(self) -> None:
        for name in ("perplexity", "asls", "cross_entropy", "bleu", "rouge_l", "chrf_pp", "ter"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidLogprob(f"metric {name} is not finite: {v}")

    def as_dict(self) -> dict[str, float]:
        return {
            "perplexity": self.perplexity,
            "asls": self.asls,
            "cross_entropy": self.cross_entropy,
            "bleu": self.bleu,
            "rouge_l": self.rouge_l,
            "chrf_pp": self.chrf_pp,
            "ter": self.ter,
        }


# ---------------------------------------------------------------------------
# Log-probability metrics
# ---------------------------------------------------------------------------

def _check_sequence(tokens: Sequence[TokenLogProb]) -> None:
    if len(tokens) == 0:
        raise EmptySequence("metric requires at least one token")


def perplexity(tokens: Sequence[TokenLogProb]) -> float:
    """exp of the mean negative chosen-token log-probability.

    1.0 means every token was generated with certainty; higher values mean
    the generator was less confident about its own choices.
    """
    _check_sequence(tokens)
    for t in tokens:
        if t.chosen_logprob > 0:
            raise InvalidLogprob(f"chosen logprob {t.chosen_logprob} > 0")
    total = math.fsum(t.chosen_logprob for t in tokens)
    return math.exp(-total / len(tokens))


def asls(tokens: Sequence[TokenLogProb]) -> float:
    """Averaged sequential log-loss: negated mean of summed alternative logprobs.

    For each position the logprobs of all available top-k alternatives are
    summed; the negated mean over positions is returned. Peaked alternative
    distributions put most mass on one candidate, driving the remaining
    logprobs strongly negative, so high ASLS signals confident generation
    and low ASLS flat, uncertain distributions.
    """
    _check_sequence(tokens)
    per_token = []
    for t in tokens:
        if not t.alternatives:
            raise EmptySequence(f"token {t.token!r} has no alternatives")
        for _, lp in t.alternatives:
            if lp > 0:
                raise InvalidLogprob(f"alternative logprob {lp} > 0")
        per_token.append(math.fsum(lp for _, lp in t.alternatives))
    return -math.fsum(per_token) / len(tokens)


def cross_entropy(tokens: Sequence[TokenLogProb]) -> float:
    """Sum over tokens of the negated maximum alternative log-probability.

    Additive over any partition of the sequence; lower is more confident.
    """
    _check_sequence(tokens)
    return math.fsum(-t.max_alt_logprob for t in tokens)


# ---------------------------------------------------------------------------
# Tokenization shared by the reference-based metrics
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\d+(?:[.,]\d+)*|[a-z0-9_]+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Canonical tokenizer: lowercase, whitespace split, punctuation detached.

    Decimal and comma-grouped numbers stay single tokens ("28.8" is one
    token, its trailing "%" another).
    """
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------

def bleu(candidate: str, references: list[str], max_ngram: int = 4) -> float:
    """Sentence BLEU on a 0-100 scale.

    Clipped n-gram precision with brevity penalty; n-gram orders longer than
    the candidate are dropped (effective order), and orders >= 2 with a zero
    clipped count get add-one smoothing so short near-misses do not hard-zero
    the geometric mean. Zero unigram overlap still scores 0.
    """
    cand = tokenize(candidate)
    if not cand:
        raise EmptyCandidate("candidate has no tokens")
    refs = [r for r in (tokenize(ref) for ref in references) if r]
    if not refs:
        raise EmptyReferences("no non-empty references")

    precisions: list[float] = []
    for n in range(1, max_ngram + 1):
        cand_ngrams = _ngram_counts(cand, n)
        total = sum(cand_ngrams.values())
        if total == 0:
            continue
        max_ref: Counter = Counter()
        for r in refs:
            max_ref |= _ngram_counts(r, n)
        clipped = sum(min(c, max_ref[g]) for g, c in cand_ngrams.items())
        if n == 1 and clipped == 0:
            return 0.0
        if n >= 2 and clipped == 0:
            precisions.append((clipped + 1) / (total + 1))
        else:
            precisions.append(clipped / total)

    c = len(cand)
    r = min((len(ref) for ref in refs), key=lambda rl: (abs(rl - c), rl))
    bp = 1.0 if c > r else math.exp(1 - r / c)
    gm = math.exp(math.fsum(math.log(p) for p in precisions) / len(precisions))
    return 100.0 * bp * gm


# ---------------------------------------------------------------------------
# ROUGE-L
# ---------------------------------------------------------------------------

def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # rolling single-row DP
    if len(a) < len(b):
        a, b = b, a
    row = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        prev = 0
        for j in range(1, len(b) + 1):
            tmp = row[j]
            if a[i - 1] == b[j - 1]:
                row[j] = prev + 1
            else:
                row[j] = max(row[j], row[j - 1])
            prev = tmp
    return row[len(b)]


def rouge_l(candidate: str, reference: str, beta: float = 1.2) -> float:
    """LCS-based F-measure in [0, 1], recall-weighted with beta = 1.2."""
    cand = tokenize(candidate)
    if not cand:
        raise EmptyCandidate("candidate has no tokens")
    ref = tokenize(reference)
    if not ref:
        raise EmptyReference("reference has no tokens")
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    b2 = beta * beta
    return (1 + b2) * p * r / (r + b2 * p)


# ---------------------------------------------------------------------------
# TER
# ---------------------------------------------------------------------------

def _edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    # Levenshtein with unit costs, single-row DP.
    if len(a) < len(b):
        a, b = b, a
    row = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        prev = row[0]
        row[0] = i
        for j in range(1, len(b) + 1):
            tmp = row[j]
            if a[i - 1] == b[j - 1]:
                row[j] = prev
            else:
                row[j] = 1 + min(prev, row[j], row[j - 1])
            prev = tmp
    return row[len(b)]


@dataclass(frozen=True)
class TerDetails:
    """Breakdown of a TER computation (exposed for oracle tests)."""

    edits: int
    shifts: int
    ref_length: int
    capped: bool = False

    @property
    def score(self) -> float:
        return 100.0 * (self.edits + self.shifts) / self.ref_length


def ter_details(
    candidate: str,
    reference: str,
    max_shifts: int = 50,
    max_span: int = 10,
    max_search_len: int = 30,
) -> TerDetails:
    """Greedy-shift TER decomposition.

    Repeatedly applies the block shift that most reduces the remaining edit
    distance (each shift costs one edit); a shifted span must occur verbatim
    in the reference. The search is quadratic, so pairs longer than
    ``max_search_len`` tokens on either side skip it, and hitting the shift
    cap also falls back: both cases score by plain edit distance.
    """
    ref = tokenize(reference)
    if not ref:
        raise EmptyReference("reference has no tokens")
    hyp = tokenize(candidate)

    plain = _edit_distance(hyp, ref)
    if len(hyp) > max_search_len or len(ref) > max_search_len:
        return TerDetails(edits=plain, shifts=0, ref_length=len(ref), capped=True)
    ref_spans = set()
    for i in range(len(ref)):
        for j in range(i + 1, min(i + max_span, len(ref)) + 1):
            ref_spans.add(tuple(ref[i:j]))

    dist = plain
    shifts = 0
    while shifts < max_shifts and dist > 0:
        best_dist = dist
        best_hyp: list[str] | None = None
        for i in range(len(hyp)):
            for j in range(i + 1, min(i + max_span, len(hyp)) + 1):
                span = tuple(hyp[i:j])
                if span not in ref_spans:
                    continue
                rest = hyp[:i] + hyp[j:]
                for k in range(len(rest) + 1):
                    if k == i:
                        continue
                    moved = rest[:k] + list(span) + rest[k:]
                    d = _edit_distance(moved, ref)
                    if d < best_dist:
                        best_dist = d
                        best_hyp = moved
        if best_hyp is None:
            break
        hyp = best_hyp
        dist = best_dist
        shifts += 1

    if shifts >= max_shifts:
        return TerDetails(edits=plain, shifts=0, ref_length=len(ref), capped=True)
    return TerDetails(edits=dist, shifts=shifts, ref_length=len(ref))


def ter(candidate: str, reference: str) -> float:
    """Translation edit rate as a percentage of the reference length.

    Counts insertions, deletions, substitutions and greedy block shifts; a
    candidate much longer than its reference can exceed 100.
    """
    return ter_details(candidate, reference).score


# ---------------------------------------------------------------------------
# chrF++
# ---------------------------------------------------------------------------

_WS_RE = re.compile(r"\s+")


def _collapse_ws(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def _f_stats(hyp_grams: Counter, ref_grams: Counter) -> tuple[int, int, int]:
    overlap = hyp_grams & ref_grams
    return sum(hyp_grams.values()), sum(ref_grams.values()), sum(overlap.values())


def chrf_pp(
    candidate: str,
    reference: str,
    char_order: int = 6,
    word_order: int = 2,
    beta: float = 2.0,
) -> float:
    """Character n-gram F-score (n <= 6) plus word 1/2-gram F, beta = 2.

    Character n-grams are taken over the raw text with whitespace runs
    collapsed to single spaces; word n-grams use the shared tokenizer.
    Precision/recall are averaged over every order where both sides have
    n-grams, then combined into a recall-weighted F-score on 0-100.
    """
    if not candidate.strip():
        raise EmptyCandidate("candidate is empty")
    if not reference.strip():
        raise EmptyReference("reference is empty")

    hyp_chars = _collapse_ws(candidate)
    ref_chars = _collapse_ws(reference)
    hyp_words = tokenize(candidate)
    ref_words = tokenize(reference)

    stats: list[tuple[int, int, int]] = []
    for n in range(1, char_order + 1):
        stats.append(
            _f_stats(
                Counter(hyp_chars[i : i + n] for i in range(len(hyp_chars) - n + 1)),
                Counter(ref_chars[i : i + n] for i in range(len(ref_chars) - n + 1)),
            )
        )
    for n in range(1, word_order + 1):
        stats.append(_f_stats(_ngram_counts(hyp_words, n), _ngram_counts(ref_words, n)))

    prec_sum = 0.0
    rec_sum = 0.0
    effective = 0
    for hyp_total, ref_total, common in stats:
        if hyp_total > 0 and ref_total > 0:
            prec_sum += common / hyp_total
            rec_sum += common / ref_total
            effective += 1
    if effective == 0:
        return 0.0
    avg_p = prec_sum / effective
    avg_r = rec_sum / effective
    if avg_p + avg_r == 0:
        return 0.0
    b2 = beta * beta
    return 100.0 * (1 + b2) * avg_p * avg_r / (b2 * avg_p + avg_r)


# ---------------------------------------------------------------------------
# Bundle assembly
# ---------------------------------------------------------------------------

def bundle(
    tokens: Sequence[TokenLogProb],
    candidate: str,
    reference: str,
) -> MetricBundle:
    """Compute every metric for one (response tokens, response text, context) triple."""
    return MetricBundle(
        perplexity=perplexity(tokens),
        asls=asls(tokens),
        cross_entropy=cross_entropy(tokens),
        bleu=bleu(candidate, [reference]),
        rouge_l=rouge_l(candidate, reference),
        chrf_pp=chrf_pp(candidate, reference),
        ter=ter(candidate, reference),
    )
