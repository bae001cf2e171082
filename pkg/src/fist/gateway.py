"""Uniform client for text-generation providers that return top-k logprobs.

Two providers ship here: an HTTP provider speaking a chat-completions
style JSON protocol, and a fully offline deterministic mock selected by
the ``mock:`` model-id prefix. The mock exposes three "personas"
(untrained, stage1, stage2) whose alternative-logprob distributions,
sentence structure, and number-echo fidelity differ, so downstream
monitoring trends can be exercised without a live vendor.

Every response passes a validation firewall before leaving this module:
token fragments must concatenate to the response text and every token
must satisfy the logprob invariants.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import httpx
import numpy as np

from .errors import (
    AuthFailure,
    BudgetExhausted,
    MalformedProviderReply,
    ProviderUnavailable,
    ValidationFailure,
)
from .metrics import TokenLogProb, validate_token

__all__ = [
    "GenerationRequest",
    "GenerationResponse",
    "FinetuneJob",
    "GatewayConfig",
    "GatewayClient",
    "MockProvider",
    "HttpProvider",
    "validate_jsonl_dataset",
]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    model_id: str
    max_tokens: int = 256
    temperature: float = 0.0
    top_p: float = 1.0
    logprob_alternatives: int = 5

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must lie in (0, 1]")
        if not (1 <= self.logprob_alternatives <= 5):
            raise ValueError("logprob_alternatives must lie in [1, 5]")
        if not self.model_id:
            raise ValueError("model_id must be non-empty")


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    tokens: tuple[TokenLogProb, ...]
    model_id: str
    finish_reason: str  # stop | length | error

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))


def _validate_response(resp: GenerationResponse) -> GenerationResponse:
    if resp.finish_reason == "error":
        if resp.tokens:
            raise MalformedProviderReply("error responses must carry no tokens")
        return resp
    if not resp.tokens:
        raise MalformedProviderReply("non-error response with no tokens")
    joined = "".join(t.token for t in resp.tokens)
    if joined != resp.text:
        raise MalformedProviderReply("token fragments do not concatenate to text")
    for tok in resp.tokens:
        validate_token(tok)
    return resp


@dataclass(frozen=True)
class FinetuneJob:
    job_id: str
    status: str  # queued | running | succeeded | failed
    model_id: str | None = None


# ---------------------------------------------------------------------------
# Dataset validation shared by providers
# ---------------------------------------------------------------------------

def validate_jsonl_dataset(path: str | Path) -> str:
    """Check a JSONL fine-tune file; returns the dataset's stage tag.

    Raises ValidationFailure naming the first bad line.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationFailure(f"dataset file {path} does not exist")
    stage = "stage1"
    count = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationFailure(f"line {lineno}: invalid JSON ({exc.msg})", line=lineno)
            if not isinstance(payload, dict) or not payload.get("prompt") or not payload.get("completion"):
                raise ValidationFailure(
                    f"line {lineno}: object must carry non-empty prompt and completion",
                    line=lineno,
                )
            if count == 0:
                stage = (
                    payload.get("meta", {}).get("provenance", {}).get("stage", "stage1")
                )
            count += 1
    if count == 0:
        raise ValidationFailure("dataset contains no records")
    return stage


# ---------------------------------------------------------------------------
# Deterministic mock provider
# ---------------------------------------------------------------------------

_PERSONAS = {
    # peak weight, sentence count, number-distortion rate, trailing flat sentences
    "untrained": {"peak": 1.0, "sentences": 6, "distort": 0.4, "trailing_flat": 2},
    "stage1": {"peak": 8.0, "sentences": 5, "distort": 0.2, "trailing_flat": 1},
    "stage2": {"peak": 100.0, "sentences": 4, "distort": 0.0, "trailing_flat": 0},
}

_FLAT_PEAK = 1.0

_VOCAB = (
    "the of and to in for with on at a momentum portfolio results guidance "
    "demand execution delivery mix pipeline outlook trajectory cadence basis "
    "breadth discipline conviction clients markets segments services quarter"
).split()

_FALLBACK_ORGS = ("Acme Corp", "Orion Group", "Vertex Holdings", "BlueRiver Inc")
_FALLBACK_METRICS = ("revenues", "profits", "margins", "bookings", "earnings")
_ADJECTIVES = ("steady", "strong", "robust", "soft", "resilient")
_PERIODS = (
    "the first quarter",
    "the second quarter",
    "the third quarter",
    "the fourth quarter",
    "the fiscal year",
)
_CLAIM_VERBS = ("reported", "posted", "delivered", "recorded")

_PROMPT_NUM_RE = re.compile(r"(?P<cur>[$€£])?(?P<num>\d+(?:\.\d+)?)\s?(?P<pct>%)?")
_PROMPT_ORG_RE = re.compile(r"\b(?:[A-Z]{2,}|[A-Z][a-z]+(?:\s+[A-Z][a-z]+)+)\b")
_PROMPT_METRIC_RE = re.compile(
    r"\b(revenues?|profits?|margins?|bookings|earnings|income|sales|growth|dividends?)\b",
    re.IGNORECASE,
)


def _fragmentize(text: str) -> list[str]:
    """Split text into token fragments whose concatenation is the text."""
    fragments = []
    pos = 0
    for m in re.finditer(r"\S+", text):
        fragments.append(text[pos : m.end()])
        pos = m.end()
    if pos < len(text):
        fragments[-1] += text[pos:]
    return fragments


class MockProvider:
    """Offline provider; identical (seed, prompt, params) give identical output.

    The persona is read from the model id: ``mock:untrained``,
    ``mock:stage1``, ``mock:stage2``, or any fine-tuned id they produce
    (``mock:stage2-ft-<hash>``).
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    # -- generation ---------------------------------------------------------

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        persona = self._persona_of(request.model_id)
        cfg = _PERSONAS[persona]
        rng = self._rng(request)

        orgs = _PROMPT_ORG_RE.findall(request.prompt) or list(_FALLBACK_ORGS)
        metrics = [m.lower() for m in _PROMPT_METRIC_RE.findall(request.prompt)]
        numbers = [
            (m.group("cur") or "", m.group("num"), m.group("pct") or "")
            for m in _PROMPT_NUM_RE.finditer(request.prompt)
            if m.group("pct") or m.group("cur")
        ]
        if not metrics:
            metrics = list(_FALLBACK_METRICS)
        if not numbers:
            numbers = [("", f"{rng.uniform(2, 40):.1f}", "%") for _ in range(4)]

        sentences: list[tuple[str, float]] = []  # (text, peak weight)
        n_sentences = int(cfg["sentences"])
        for s_idx in range(n_sentences):
            org = orgs[int(rng.integers(len(orgs)))]
            metric = metrics[s_idx % len(metrics)]
            cur, num, pct = numbers[s_idx % len(numbers)]
            distorted = bool(rng.random() < cfg["distort"])
            if distorted:
                num = f"{float(num) * float(rng.uniform(1.2, 1.45)):.1f}"
            value = f"{cur}{num}{pct}"
            peak = _FLAT_PEAK if distorted else float(cfg["peak"])
            if s_idx >= n_sentences - int(cfg["trailing_flat"]):
                peak = _FLAT_PEAK
            sentences.append((self._sentence(persona, rng, org, metric, value, metrics, numbers, s_idx), peak))

        text_parts: list[str] = []
        tokens: list[TokenLogProb] = []
        finish_reason = "stop"
        for s_i, (sentence, peak) in enumerate(sentences):
            body = sentence if s_i == 0 else " " + sentence
            fragments = _fragmentize(body)
            if len(tokens) + len(fragments) > request.max_tokens:
                finish_reason = "length"
                break
            text_parts.append(body)
            for frag in fragments:
                tokens.append(self._token(frag, peak, rng, request.logprob_alternatives))

        return _validate_response(
            GenerationResponse(
                text="".join(text_parts),
                tokens=tuple(tokens),
                model_id=request.model_id,
                finish_reason=finish_reason,
            )
        )

    # -- fine-tuning --------------------------------------------------------

    def submit_finetune(self, dataset_path: str | Path, base_model: str, stage: str) -> str:
        dataset_stage = validate_jsonl_dataset(dataset_path)
        persona = "stage2" if dataset_stage == "stage2_curated" or stage == "stage2" else "stage1"
        digest = hashlib.sha256(Path(dataset_path).read_bytes()).hexdigest()[:8]
        return f"ftjob-{persona}-{digest}-{uuid.uuid4().hex[:8]}"

    def poll_finetune(self, job_id: str) -> FinetuneJob:
        # job ids are self-describing so polling survives process restarts
        m = re.match(r"ftjob-(stage[12])-([0-9a-f]{8})-[0-9a-f]{8}$", job_id)
        if not m:
            raise ProviderUnavailable(f"unknown fine-tune job {job_id!r}")
        persona, digest = m.group(1), m.group(2)
        return FinetuneJob(job_id=job_id, status="succeeded",
                           model_id=f"mock:{persona}-ft-{digest}")

    # -- internals ----------------------------------------------------------

    @staticmethod
    def _persona_of(model_id: str) -> str:
        name = model_id.split(":", 1)[1] if ":" in model_id else model_id
        for persona in _PERSONAS:
            if name == persona or name.startswith(persona + "-"):
                return persona
        raise ProviderUnavailable(f"mock provider has no persona for {model_id!r}")

    def _rng(self, request: GenerationRequest) -> np.random.Generator:
        material = "|".join(
            [
                str(self.seed),
                request.model_id,
                request.prompt,
                str(request.max_tokens),
                f"{request.temperature:.6f}",
                f"{request.top_p:.6f}",
                str(request.logprob_alternatives),
            ]
        )
        digest = hashlib.sha256(material.encode("utf-8")).digest()
        return np.random.default_rng(np.random.SeedSequence(int.from_bytes(digest[:8], "big")))

    def _sentence(
        self,
        persona: str,
        rng: np.random.Generator,
        org: str,
        metric: str,
        value: str,
        metrics: Sequence[str],
        numbers: Sequence[tuple[str, str, str]],
        s_idx: int,
    ) -> str:
        adj = _ADJECTIVES[int(rng.integers(len(_ADJECTIVES)))]
        period = _PERIODS[int(rng.integers(len(_PERIODS)))]
        verb = _CLAIM_VERBS[int(rng.integers(len(_CLAIM_VERBS)))]
        if persona == "stage2":
            metric2 = metrics[(s_idx + 1) % len(metrics)]
            cur2, num2, pct2 = numbers[(s_idx + 1) % len(numbers)]
            value2 = f"{cur2}{num2}{pct2}"
            return (
                f"{org} {verb} {metric} of {value} in {period}, while {metric2} "
                f"rose to {value2}, reflecting {adj} momentum."
            )
        if s_idx % 2 == 0 or persona == "stage1":
            return f"{org} {verb} {metric} of {value} in {period}."
        filler = (
            f"Overall, momentum remained broadly {adj} across the portfolio.",
            f"Management noted {adj} conditions throughout {period}.",
            "The quarter unfolded in line with broader market conditions.",
        )
        return filler[int(rng.integers(len(filler)))]

    def _token(
        self,
        fragment: str,
        peak: float,
        rng: np.random.Generator,
        k: int,
    ) -> TokenLogProb:
        weights = rng.uniform(0.8, 1.2, size=5)
        weights[0] *= peak
        weights[::-1].sort()
        probs = weights / weights.sum()
        chosen_lp = float(np.log(probs[0]))
        distractors = rng.choice(len(_VOCAB), size=4, replace=False)
        alts: list[tuple[str, float]] = [(fragment, chosen_lp)]
        for rank in range(1, k):
            alts.append((" " + _VOCAB[int(distractors[rank - 1])], float(np.log(probs[rank]))))
        return TokenLogProb(token=fragment, chosen_logprob=chosen_lp, alternatives=tuple(alts))


# ---------------------------------------------------------------------------
# HTTP provider
# ---------------------------------------------------------------------------

@dataclass
class GatewayConfig:
    base_url: str = "http://localhost:8000/v1"
    api_key_env: str = "FIST_PROVIDER_API_KEY"
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"
    timeout_s: float = 60.0
    retries: int = 3
    backoff_s: float = 0.5
    max_concurrency: int = 8
    rate_per_s: float | None = None
    mock_seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "GatewayConfig":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**payload)


class _TokenBucket:
    """Minimal thread-safe rate limiter; None rate means unlimited."""

    def __init__(self, rate_per_s: float | None):
        self.rate = rate_per_s
        self.tokens = rate_per_s or 0.0
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if self.rate is None:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(self.rate, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(wait)


class HttpProvider:
    """Chat-completions-compatible JSON client with retry/backoff."""

    def __init__(self, config: GatewayConfig, api_key: str | None = None,
                 transport: httpx.BaseTransport | None = None):
        self.config = config
        self.api_key = api_key
        self._client = httpx.Client(
            base_url=config.base_url,
            timeout=config.timeout_s,
            transport=transport,
        )

    def _headers(self) -> dict[str, str]:
        if not self.api_key:
            return {}
        return {self.config.auth_header: f"{self.config.auth_scheme} {self.api_key}".strip()}

    def _post(self, path: str, payload: dict) -> dict:
        attempts = self.config.retries + 1
        last_rate_limited = False
        for attempt in range(attempts):
            try:
                resp = self._client.post(path, json=payload, headers=self._headers())
            except httpx.TransportError as exc:
                if attempt + 1 < attempts:
                    time.sleep(self.config.backoff_s * (2**attempt))
                    continue
                raise ProviderUnavailable(f"transport failure: {exc}") from exc
            if resp.status_code in (401, 403):
                raise AuthFailure(f"provider rejected credentials ({resp.status_code})")
            if resp.status_code == 429 or resp.status_code >= 500:
                last_rate_limited = resp.status_code == 429
                if attempt + 1 < attempts:
                    time.sleep(self.config.backoff_s * (2**attempt))
                    continue
                if last_rate_limited:
                    raise BudgetExhausted("retry budget exhausted on rate limiting")
                raise ProviderUnavailable(f"provider error {resp.status_code}")
            try:
                return resp.json()
            except json.JSONDecodeError as exc:
                raise MalformedProviderReply("provider reply is not JSON") from exc
        raise ProviderUnavailable("unreachable")

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        payload = {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
            "top_p": request.top_p,
            "logprobs": True,
            "top_logprobs": request.logprob_alternatives,
        }
        reply = self._post("/chat/completions", payload)
        try:
            choice = reply["choices"][0]
            content = choice["message"]["content"]
            entries = choice["logprobs"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedProviderReply(f"reply missing required fields: {exc}") from exc
        if entries is None:
            raise MalformedProviderReply("reply carries no logprobs")
        tokens = []
        for entry in entries:
            try:
                alts = tuple(
                    (alt["token"], float(alt["logprob"]))
                    for alt in entry.get("top_logprobs", [])
                ) or ((entry["token"], float(entry["logprob"])),)
                tokens.append(
                    TokenLogProb(
                        token=entry["token"],
                        chosen_logprob=float(entry["logprob"]),
                        alternatives=alts,
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedProviderReply(f"bad logprob entry: {exc}") from exc
        # trust the token stream; some providers append stop text to content
        text = "".join(t.token for t in tokens) if tokens else content
        return _validate_response(
            GenerationResponse(
                text=text,
                tokens=tuple(tokens),
                model_id=reply.get("model", request.model_id),
                finish_reason=choice.get("finish_reason", "stop"),
            )
        )

    def submit_finetune(self, dataset_path: str | Path, base_model: str, stage: str) -> str:
        validate_jsonl_dataset(dataset_path)
        upload = self._post(
            "/files",
            {"purpose": "fine-tune", "filename": Path(dataset_path).name,
             "content": Path(dataset_path).read_text(encoding="utf-8")},
        )
        reply = self._post(
            "/fine_tuning/jobs",
            {"model": base_model, "training_file": upload.get("id"), "suffix": stage},
        )
        job_id = reply.get("id")
        if not job_id:
            raise MalformedProviderReply("fine-tune submission returned no job id")
        return str(job_id)

    def poll_finetune(self, job_id: str) -> FinetuneJob:
        attempts = self.config.retries + 1
        for attempt in range(attempts):
            try:
                resp = self._client.get(f"/fine_tuning/jobs/{job_id}", headers=self._headers())
            except httpx.TransportError as exc:
                if attempt + 1 < attempts:
                    time.sleep(self.config.backoff_s * (2**attempt))
                    continue
                raise ProviderUnavailable(f"transport failure: {exc}") from exc
            if resp.status_code in (401, 403):
                raise AuthFailure(f"provider rejected credentials ({resp.status_code})")
            payload = resp.json()
            return FinetuneJob(
                job_id=job_id,
                status=payload.get("status", "running"),
                model_id=payload.get("fine_tuned_model"),
            )
        raise ProviderUnavailable("unreachable")


# ---------------------------------------------------------------------------
# Routing client
# ---------------------------------------------------------------------------

class GatewayClient:
    """Routes requests to the mock or HTTP provider by model-id prefix.

    Shareable across threads; in-flight concurrency is capped by a
    semaphore and an optional token bucket paces outbound calls.
    """

    def __init__(self, config: GatewayConfig | None = None, api_key: str | None = None,
                 transport: httpx.BaseTransport | None = None):
        self.config = config or GatewayConfig()
        self._mock = MockProvider(seed=self.config.mock_seed)
        self._http: HttpProvider | None = None
        self._api_key = api_key
        self._transport = transport
        self._sem = threading.Semaphore(self.config.max_concurrency)
        self._bucket = _TokenBucket(self.config.rate_per_s)

    def _provider_for(self, model_id: str):
        if model_id.startswith("mock:"):
            return self._mock
        if self._http is None:
            api_key = self._api_key or os.environ.get(self.config.api_key_env)
            self._http = HttpProvider(self.config, api_key=api_key,
                                      transport=self._transport)
        return self._http

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        self._bucket.acquire()
        with self._sem:
            return self._provider_for(request.model_id).complete(request)

    def submit_finetune(self, dataset_path: str | Path, base_model: str, stage: str) -> str:
        return self._provider_for(base_model).submit_finetune(dataset_path, base_model, stage)

    def poll_finetune(self, job_id: str, base_model: str = "mock:untrained") -> FinetuneJob:
        return self._provider_for(base_model).poll_finetune(job_id)
