"""Exception types shared across the toolkit.

Every domain error derives from FistError so callers (CLI, HTTP service)
can map the whole family to exit code 1 / structured API errors without
enumerating each subclass.
"""

from __future__ import annotations


class FistError(Exception):
    """Base class for all domain errors raised by this package."""


# --- metrics ---------------------------------------------------------------

class EmptySequence(FistError):
    """A token sequence was empty where at least one token is required."""


class InvalidLogprob(FistError):
    """A log-probability was positive (probabilities cannot exceed 1)."""


class EmptyCandidate(FistError):
    """Candidate text produced no tokens."""


class EmptyReference(FistError):
    """Reference text produced no tokens."""


class EmptyReferences(FistError):
    """No usable reference text was supplied."""


# --- knowledge graph -------------------------------------------------------

class EmptyDocument(FistError):
    """A document-level operation received zero sentences."""


class AllZero(FistError):
    """Max-scaling is undefined when every value is zero."""


# --- data preparation ------------------------------------------------------

class InvalidJitter(FistError):
    """Jitter fraction outside the permitted (0, 0.5] range."""


class EmptySection(FistError):
    """Section body was empty."""


class EmptyDataset(FistError):
    """Refusing to export an empty dataset."""


class IoFailure(FistError):
    """Filesystem read or write failed."""


class SerializationFailure(FistError):
    """Data could not be serialized to the target format."""


# --- model gateway ---------------------------------------------------------

class ProviderUnavailable(FistError):
    """The generation provider could not be reached."""


class AuthFailure(FistError):
    """The provider rejected our credentials."""


class MalformedProviderReply(FistError):
    """Provider reply is missing required fields (e.g. logprobs)."""


class BudgetExhausted(FistError):
    """Retry budget spent without a successful provider call."""


class ValidationFailure(FistError):
    """A dataset file failed validation.

    ``line`` carries the 1-based offending line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


# --- monitor ---------------------------------------------------------------

class EmptyResponse(FistError):
    """Response carries no tokens to score."""


class InvalidThreshold(FistError):
    """Flagging thresholds must be non-negative (floor) / positive (ceiling)."""


class NoReferenceFacts(FistError):
    """Categorization requires at least one reference fact."""


# --- pipeline --------------------------------------------------------------

class IllegalTransition(FistError):
    """No transition is enabled from the run's current state."""


class CurationIncomplete(FistError):
    """Unreviewed items remain; the curated transition is blocked."""


class UnknownItem(FistError):
    """Label applied to a review item that does not exist."""


class IllegalState(FistError):
    """Operation not permitted in the run's current state."""


class ModelMissing(FistError):
    """The run has not produced the model required for this operation."""


class StaleRevision(FistError):
    """Optimistic-concurrency check failed: item revision is stale.

    ``stale_items`` lists the offending item ids.
    """

    def __init__(self, message: str, stale_items: list[str] | None = None):
        super().__init__(message)
        self.stale_items = stale_items or []
