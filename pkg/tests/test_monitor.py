"""Segmentation, per-sentence scoring, flagging, categorization, and
scatter export."""

import csv
import math

import numpy as np
import pytest

from fist.errors import (
    EmptyResponse,
    InvalidThreshold,
    NoReferenceFacts,
)
from fist.gateway import GatewayClient, GenerationRequest, GenerationResponse

from fist.monitor import (
    ReferenceFact,
    adaptive_thresholds,
    categorize,
    evaluate_response,
    export_scatter,
    flag_low_certainty,
    segment_sentences,
    segment_token_spans,
)

from .conftest import make_token, random_probs

WORKED_CONTEXT = (
    "The company ACL had targeted 30% profits but it finished Q2 at 28.8% profits."
)
WORKED_FACTS = [
    ReferenceFact("ACL", "target", 30.0, "%"),
    ReferenceFact("ACL", "achieved", 28.8, "%"),
]


def tokens_for(text, peak=40.0, rng=None, uniform=False):
    rng = rng or np.random.default_rng(0)
    toks = []
    pos = 0
    import re

    for m in re.finditer(r"\S+", text):
        frag = text[pos : m.end()]
        pos = m.end()
        probs = [0.2] * 5 if uniform else random_probs(rng, peak=peak)
        toks.append(make_token(frag, probs, vocab_offset=len(toks)))
    return toks


def response_for(text, **kw):
    return GenerationResponse(
        text=text, tokens=tuple(tokens_for(text, **kw)), model_id="mock:stage1",
        finish_reason="stop",
    )


def record_for(text, context=WORKED_CONTEXT, query="How did ACL do?", **kw):
    return evaluate_response(query, context, response_for(text, **kw))


class TestSegmentation:
    def test_two_plain_sentences(self):
        spans = segment_sentences(response_for("A rose. B fell."))
        assert len(spans) == 2
        assert spans[0].text == "A rose."
        assert spans[1].text == " B fell."

    def test_abbreviation_guard(self):
        spans = segment_sentences(response_for("Totals at Acme Inc. Rose further."))
        assert len(spans) == 1

    def test_quarter_abbreviation_guarded(self):
        spans = segment_sentences(response_for("It closed Q2. Analysts approved."))
        assert len(spans) == 1

    def test_no_terminal_single_span(self):
        spans = segment_sentences(response_for("no terminal punctuation here"))
        assert len(spans) == 1

    def test_lowercase_continuation_not_split(self):
        spans = segment_sentences(response_for("He said approx. nothing more."))
        assert len(spans) == 1

    def test_spans_partition_tokens(self):
        resp = response_for("One two. Three four! Five six?")
        spans = segment_sentences(resp)
        assert spans[0].start_token == 0
        assert spans[-1].end_token == len(resp.tokens)
        for prev, cur in zip(spans, spans[1:]):
            assert prev.end_token == cur.start_token
        assert sum(s.end_token - s.start_token for s in spans) == len(resp.tokens)

    def test_generator_oracle_30_documents(self, rng):
        starters = ("Alpha", "Bravo", "Delta", "Echo")
        enders = ("rose.", "fell.", "held!", "moved?")
        for _ in range(30):
            n = int(rng.integers(1, 7))
            sentences = []
            for _ in range(n):
                words = [starters[int(rng.integers(4))]]
                words += ["mid"] * int(rng.integers(0, 4))
                words.append(enders[int(rng.integers(4))])
                sentences.append(" ".join(words))
            text = " ".join(sentences)
            spans = segment_token_spans(tokens_for(text, rng=rng))
            assert len(spans) == n
            assert [s.text.strip() for s in spans] == sentences

    def test_error_response_rejected(self):
        resp = GenerationResponse(text="", tokens=(), model_id="m", finish_reason="error")
        with pytest.raises(EmptyResponse):
            segment_sentences(resp)


class TestScoreSentences:
    def test_single_sentence_equals_whole(self):
        record = record_for("ACL posted profits of 10.5% in Q3.")
        assert len(record.sentences) == 1
        s = record.sentences[0]
        assert s.asls == pytest.approx(record.metrics.asls, abs=1e-12)
        assert s.cross_entropy == pytest.approx(record.metrics.cross_entropy, abs=1e-12)
        assert s.perplexity == pytest.approx(record.metrics.perplexity, abs=1e-12)

    def test_uniform_sentence_has_lower_asls(self, rng):
        peaked = tokens_for("Strong results landed.", peak=60.0, rng=rng)
        uniform = tokens_for(" Weak results landed.", uniform=True)
        resp = GenerationResponse(
            text="Strong results landed. Weak results landed.",
            tokens=tuple(peaked + uniform),
            model_id="m",
            finish_reason="stop",
        )
        record = evaluate_response("q", "ctx", resp)
        assert len(record.sentences) == 2
        assert record.sentences[1].asls < record.sentences[0].asls

    def test_per_span_matches_independent_recomputation(self, rng):
        record = record_for(
            "Alpha rose to 10%. Bravo fell to 9%. Delta held steady overall.",
            peak=float(rng.uniform(5, 50)),
            rng=rng,
        )
        from .oracles import asls_oracle, cross_entropy_oracle

        for sent in record.sentences:
            chunk = record.tokens[sent.span.start_token : sent.span.end_token]
            alts = [[lp for _, lp in t.alternatives] for t in chunk]
            assert sent.asls == pytest.approx(asls_oracle(alts), abs=1e-12)
            assert sent.cross_entropy == pytest.approx(
                cross_entropy_oracle(alts), abs=1e-12
            )

    def test_whole_ce_is_sum_of_sentence_ce(self):
        record = record_for("One two three. Four five. Six seven eight nine.")
        total = sum(s.cross_entropy for s in record.sentences)
        assert record.metrics.cross_entropy == pytest.approx(total, abs=1e-9)

    def test_entity_and_relation_counts(self):
        record = record_for("ACL posted profits of 10.5% in Q3.")
        assert record.sentences[0].entity_count >= 3
        assert record.sentences[0].relation_count >= 1


class TestFlagging:
    def make_scored(self, asls_values, ce_per_token=0.05, tokens_per_sentence=4):
        text_parts = [f"Sentence {i} ends." for i in range(len(asls_values))]
        sentences = []
        for i, value in enumerate(asls_values):
            span_tokens = tokens_for(" ".join(text_parts[i].split()))
            record = record_for(text_parts[i])
            s = record.sentences[0]
            from dataclasses import replace

            sentences.append(
                replace(
                    s,
                    asls=value,
                    cross_entropy=ce_per_token * s.token_count,
                )
            )
        return sentences

    def test_generous_thresholds_no_flags(self):
        scored = self.make_scored([18.0, 19.0, 17.5])
        out = flag_low_certainty(scored, asls_floor=1.0, ce_per_token_ceiling=100.0)
        assert all(s.flag == "none" for s in out)

    def test_vacuous_thresholds_zero_flags(self):
        scored = self.make_scored([0.5, 8.0, 18.0])
        out = flag_low_certainty(scored, asls_floor=0.0, ce_per_token_ceiling=math.inf)
        assert all(s.flag == "none" for s in out)

    def test_single_uniform_sentence_flagged(self):
        scored = self.make_scored([18.2, 18.4, 5 * math.log(5), 18.3, 18.5])
        floor, ceiling = adaptive_thresholds(scored)
        out = flag_low_certainty(scored, floor, ceiling)
        flags = [s.flag for s in out]
        assert flags.count("low_certainty") == 1
        assert flags[2] == "low_certainty"

    def test_monotone_in_floor(self, rng):
        scored = self.make_scored(list(rng.uniform(5, 20, size=12)))
        flags_at = []
        for floor in (2.0, 8.0, 14.0, 25.0):
            out = flag_low_certainty(scored, floor, math.inf)
            flags_at.append({s.span.text for s in out if s.flag == "low_certainty"})
        for smaller, larger in zip(flags_at, flags_at[1:]):
            assert smaller <= larger

    @pytest.mark.parametrize("floor,ceiling", [(-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
    def test_invalid_thresholds(self, floor, ceiling):
        with pytest.raises(InvalidThreshold):
            flag_low_certainty(self.make_scored([10.0]), floor, ceiling)


class TestCategorize:
    def test_worked_hallucination(self):
        record = record_for("ACL met its target of 30% profit in the Q2 quarter.")
        assert categorize(record, WORKED_FACTS) == "hallucination"

    def test_worked_creative_is_correct(self):
        record = record_for(
            "ACL missed the planned target of 30% by 1.2% by the close of Q2."
        )
        assert categorize(record, WORKED_FACTS) == "correct"

    def test_claimless_response_incomplete(self):
        record = record_for("Markets were quiet and nothing notable happened today.")
        assert categorize(record, WORKED_FACTS) == "incomplete"

    def test_tolerance_accepts_rounding(self):
        record = record_for("ACL finished at 28.9% profits in Q2.")
        # 28.9 vs 28.8 is 0.35% relative: inside the 0.5% band
        assert categorize(record, WORKED_FACTS) == "correct"

    def test_no_reference_facts(self):
        record = record_for("ACL met its target.")
        with pytest.raises(NoReferenceFacts):
            categorize(record, [])

    def test_human_label_wins(self):
        from dataclasses import replace

        record = replace(
            record_for("ACL met its target of 30% profit in the Q2 quarter."),
            category="correct",
            label_source="human",
        )
        assert categorize(record, WORKED_FACTS) == "correct"

    def test_fact_order_invariant(self):
        record = record_for("ACL reported profits of 28.8% in Q2.")
        assert categorize(record, WORKED_FACTS) == categorize(record, WORKED_FACTS[::-1])

    def test_reference_facts_file(self, tmp_path):
        import json

        from fist.monitor import load_reference_facts

        path = tmp_path / "facts.json"
        path.write_text(
            json.dumps(
                [
                    {"subject": "ACL", "predicate": "target", "value": 30.0, "unit": "%"},
                    {"subject": "ACL", "predicate": "achieved", "value": 28.8, "unit": "%"},
                ]
            ),
            encoding="utf-8",
        )
        facts = load_reference_facts(path)
        assert facts == WORKED_FACTS
        record = record_for("ACL met its target of 30% profit in the Q2 quarter.")
        assert categorize(record, facts) == "hallucination"


class TestExportScatter:
    def test_row_per_sentence(self, tmp_path):
        record = record_for("One two. Three four. Five six.")
        path = tmp_path / "scatter.csv"
        assert export_scatter([record], "ce", path) == 3

    def test_csv_round_trip_to_4_decimals(self, tmp_path):
        record = record_for("Alpha one. Bravo two.")
        path = tmp_path / "scatter.csv"
        export_scatter([record], "asls", path)
        with path.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        for row, sent in zip(rows, record.sentences):
            assert float(row["value"]) == pytest.approx(sent.asls, abs=5e-5)
            assert row["flag"] == sent.flag
            assert row["run_label"] == "run"

    def test_three_mock_runs_mean_ce_strictly_decreases(self, tmp_path):
        client = GatewayClient()
        records, labels = [], []
        for model in ("mock:untrained", "mock:stage1", "mock:stage2"):
            for i in range(8):
                resp = client.complete(
                    GenerationRequest(
                        prompt=f"ACL reported profits of 28.8% in case {i}.",
                        model_id=model,
                    )
                )
                records.append(evaluate_response("q", "ACL ctx", resp))
                labels.append(model)
        path = tmp_path / "scatter.csv"
        export_scatter(records, "ce", path, run_labels=labels)
        with path.open() as fh:
            rows = list(csv.DictReader(fh))
        means = []
        for model in ("mock:untrained", "mock:stage1", "mock:stage2"):
            vals = [float(r["value"]) for r in rows if r["run_label"] == model]
            means.append(sum(vals) / len(vals))
        assert means[0] > means[1] > means[2]

    def test_svg_written_and_deterministic(self, tmp_path):
        record = record_for("Alpha one. Bravo two.")
        svg_a = tmp_path / "a.svg"
        svg_b = tmp_path / "b.svg"
        export_scatter([record], "ce", tmp_path / "a.csv", svg_path=svg_a)
        export_scatter([record], "ce", tmp_path / "b.csv", svg_path=svg_b)
        assert svg_a.read_bytes() == svg_b.read_bytes()
        assert svg_a.read_text().startswith("<svg")

    def test_empty_records_rejected(self, tmp_path):
        with pytest.raises(EmptyResponse):
            export_scatter([], "ce", tmp_path / "x.csv")
