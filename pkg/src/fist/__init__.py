"""Financial-report style-transfer fine-tuning toolkit.

Subpackages cover metric computation, rule-based knowledge-graph
extraction, dataset preparation, a provider gateway with a deterministic
mock, sentence-level hallucination monitoring, and the two-stage
fine-tuning pipeline with its human curation gate.
"""

__version__ = "0.1.0"
