"""Model-provider contracts: chat completion, sentence embedding, per-token
embeddings, and extractive QA, plus deterministic mocks for offline runs.

HTTP providers follow the de-facto chat-completions / embeddings schemas and
share one retry policy (exponential backoff with jitter, base 1s, factor 2,
max 5 attempts) and an in-flight throttle.
"""
from __future__ import annotations

import hashlib
import logging
import random
import re
import threading
import time
from dataclasses import dataclass, field

import httpx
import numpy as np

from .errors import ProviderError
from .text import segment_sentences, tokenize

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 5
BACKOFF_BASE = 1.0
BACKOFF_FACTOR = 2.0

# Extractive QA window, in shared-tokenizer tokens. Windows overlap by half
# to avoid losing answers that straddle a boundary.
QA_WINDOW_TOKENS = 400
QA_WINDOW_STRIDE = 200

# Markers that normalize to "no answer".
_INVALID_ANSWERS = frozenset({"", "cannotanswer", "unanswerable"})


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"invalid role: {self.role}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    max_output_tokens: int = 256
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.values)

    def cosine(self, other: "EmbeddingVector") -> float:
        # Vectors are unit-normalized on construction, so the dot product
        # is the cosine.
        return float(np.dot(self.values, other.values))


def _normalize(values) -> EmbeddingVector:
    arr = np.asarray(values, dtype=float)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ProviderError("malformed_response", "zero-norm embedding")
    return EmbeddingVector(values=tuple(arr / norm))


@dataclass(frozen=True)
class QAResult:
    answer: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


def normalize_qa_answer(answer: str) -> str:
    """Map invalid-answer markers to the empty string."""
    trimmed = answer.strip()
    if trimmed.lower() in _INVALID_ANSWERS:
        return ""
    return trimmed


class RateLimiter:
    """Bounds the number of in-flight provider calls."""

    def __init__(self, max_in_flight: int = 4):
        self._semaphore = threading.Semaphore(max_in_flight)

    def __enter__(self):
        self._semaphore.acquire()
        return self

    def __exit__(self, *exc):
        self._semaphore.release()
        return False


def with_retries(call, *, max_attempts: int = MAX_ATTEMPTS,
                 backoff_base: float = BACKOFF_BASE,
                 sleep=time.sleep, rng: random.Random | None = None):
    """Run ``call`` retrying retryable ProviderErrors with jittered
    exponential backoff."""
    rng = rng or random.Random()
    last: ProviderError | None = None
    for attempt in range(max_attempts):
        try:
            return call()
        except ProviderError as err:
            if not err.retryable:
                raise
            last = err
            if attempt + 1 < max_attempts:
                delay = backoff_base * (BACKOFF_FACTOR ** attempt)
                delay *= 0.5 + rng.random()  # jitter in [0.5x, 1.5x)
                logger.debug("retryable %s, attempt %d/%d, sleeping %.2fs",
                             err.kind, attempt + 1, max_attempts, delay)
                sleep(delay)
    assert last is not None
    raise last


def sliding_windows(context: str, window: int = QA_WINDOW_TOKENS,
                    stride: int = QA_WINDOW_STRIDE) -> list[str]:
    """Slice a long context into overlapping token windows (as text)."""
    tokens = tokenize(context)
    if len(tokens) <= window:
        return [context]
    windows = []
    start = 0
    while start < len(tokens):
        windows.append(" ".join(tokens[start:start + window]))
        if start + window >= len(tokens):
            break
        start += stride
    return windows


class ProviderSet:
    """Base class wiring the four capabilities with shared windowing and
    answer normalization. Subclasses implement the raw calls."""

    def chat_complete(self, messages: list[ChatMessage],
                      params: GenerationParams) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        if messages[-1].role != "user":
            raise ValueError("last message must have role 'user'")
        text = self._chat(messages, params).strip()
        if not text:
            raise ProviderError("malformed_response", "empty completion")
        return text

    def embed_sentence(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise ValueError("cannot embed empty text")
        return self._embed_one(text)

    def embed_tokens(self, text: str) -> list[EmbeddingVector]:
        tokens = tokenize(text)
        if not tokens:
            raise ValueError("text has no tokens")
        return [self._embed_token(tok, i, tokens) for i, tok in enumerate(tokens)]

    def extractive_qa(self, question: str, context: str) -> QAResult:
        if not question.strip():
            raise ValueError("question must be non-empty")
        if not context.strip():
            raise ValueError("context must be non-empty")
        best = QAResult(answer="", confidence=0.0)
        for window_text in sliding_windows(context):
            result = self._qa(question, window_text)
            answer = normalize_qa_answer(result.answer)
            if answer and result.confidence > best.confidence:
                best = QAResult(answer=answer, confidence=result.confidence)
        return best

    # -- raw capability hooks -------------------------------------------
    def _chat(self, messages: list[ChatMessage], params: GenerationParams) -> str:
        raise NotImplementedError

    def _embed_one(self, text: str) -> EmbeddingVector:
        raise NotImplementedError

    def _embed_token(self, token: str, position: int,
                     tokens: list[str]) -> EmbeddingVector:
        return self._embed_one(token)

    def _qa(self, question: str, context: str) -> QAResult:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# HTTP-backed providers
# ---------------------------------------------------------------------------

def _redact(payload: dict) -> dict:
    return {k: ("***" if "key" in k.lower() or "authorization" in k.lower()
                else v) for k, v in payload.items()}


@dataclass
class HttpEndpoints:
    chat_url: str = ""
    embeddings_url: str = ""
    qa_url: str = ""
    api_key: str = ""
    chat_model: str = ""
    embedding_model: str = ""


class HttpProviderSet(ProviderSet):
    """Providers speaking the de-facto JSON schemas over HTTP."""

    def __init__(self, endpoints: HttpEndpoints, *, max_in_flight: int = 4,
                 timeout: float = 60.0, verbose: bool = False,
                 transport: httpx.BaseTransport | None = None,
                 backoff_base: float = BACKOFF_BASE, sleep=time.sleep):
        self.endpoints = endpoints
        self.limiter = RateLimiter(max_in_flight)
        self.verbose = verbose
        self._backoff_base = backoff_base
        self._sleep = sleep
        headers = {}
        if endpoints.api_key:
            headers["Authorization"] = f"Bearer {endpoints.api_key}"
        self._client = httpx.Client(timeout=timeout, headers=headers,
                                    transport=transport)

    def close(self):
        self._client.close()

    def _post(self, url: str, payload: dict) -> dict:
        if not url:
            raise ProviderError("bad_request", "endpoint URL not configured")

        def attempt() -> dict:
            if self.verbose:
                logger.info("POST %s %s", url, _redact(payload))
            try:
                with self.limiter:
                    response = self._client.post(url, json=payload)
            except httpx.TimeoutException as exc:
                raise ProviderError("timeout", str(exc)) from exc
            except httpx.HTTPError as exc:
                raise ProviderError("server_error", str(exc)) from exc
            if response.status_code == 429:
                raise ProviderError("rate_limited", "HTTP 429")
            if response.status_code >= 500:
                raise ProviderError("server_error", f"HTTP {response.status_code}")
            if response.status_code >= 400:
                raise ProviderError("bad_request", f"HTTP {response.status_code}")
            try:
                body = response.json()
            except ValueError as exc:
                raise ProviderError("malformed_response", "non-JSON body") from exc
            if self.verbose:
                logger.info("RESPONSE %s %s", url, body)
            return body

        return with_retries(attempt, backoff_base=self._backoff_base,
                            sleep=self._sleep)

    def _chat(self, messages, params):
        payload = {
            "model": self.endpoints.chat_model or "default",
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        body = self._post(self.endpoints.chat_url, payload)
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError("malformed_response",
                                "missing choices[0].message.content") from exc

    def _embed_batch(self, inputs: list[str]) -> list[EmbeddingVector]:
        payload = {"model": self.endpoints.embedding_model or "default",
                   "input": inputs}
        body = self._post(self.endpoints.embeddings_url, payload)
        try:
            data = body["data"]
            vectors = [_normalize(item["embedding"]) for item in data]
        except (KeyError, TypeError) as exc:
            raise ProviderError("malformed_response", "bad embeddings body") from exc
        if len(vectors) != len(inputs):
            raise ProviderError("malformed_response",
                                "embedding count != input count")
        return vectors

    def _embed_one(self, text):
        return self._embed_batch([text])[0]

    def embed_tokens(self, text: str) -> list[EmbeddingVector]:
        tokens = tokenize(text)
        if not tokens:
            raise ValueError("text has no tokens")
        return self._embed_batch(tokens)

    def _qa(self, question, context):
        payload = {"question": question, "context": context}
        body = self._post(self.endpoints.qa_url, payload)
        try:
            answer = str(body.get("answer", ""))
            score = float(body.get("score", 0.0))
        except (TypeError, ValueError) as exc:
            raise ProviderError("malformed_response", "bad QA body") from exc
        score = min(max(score, 0.0), 1.0)
        return QAResult(answer=answer, confidence=score if answer.strip() else 0.0)


# ---------------------------------------------------------------------------
# Deterministic mocks
# ---------------------------------------------------------------------------

def _stable_digest(*parts: str) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.digest()


def _stable_int(*parts: str) -> int:
    return int.from_bytes(_stable_digest(*parts), "big")


_TRANSCRIPT_RE = re.compile(r"output conversation should be in this format",
                            re.IGNORECASE)
_INFILL_RE = re.compile(r"<mask>")


class MockProviderSet(ProviderSet):
    """Deterministic offline providers.

    Responses are derived from a hash of (seed, request content), never from
    call order, so results are stable under any interleaving.

    embedding_mode:
      * "identity"   — same text, same pseudo-random unit vector.
      * "orthogonal" — distinct texts map to distinct one-hot axes, so
        cosines are exactly 0 or 1 and metric values are hand-computable.
    """

    def __init__(self, *, seed: int = 0, embedding_mode: str = "identity",
                 dimension: int = 64, scripted_chat: dict[str, str] | None = None,
                 qa_responses: dict[str, QAResult] | None = None,
                 qa_mode: str = "span", chat_mode: str = "synthesize"):
        if embedding_mode not in ("identity", "orthogonal"):
            raise ValueError(f"unknown embedding_mode: {embedding_mode}")
        if qa_mode not in ("span", "always", "never"):
            raise ValueError(f"unknown qa_mode: {qa_mode}")
        if chat_mode not in ("synthesize", "echo"):
            raise ValueError(f"unknown chat_mode: {chat_mode}")
        self.seed = seed
        self.embedding_mode = embedding_mode
        self.dimension = dimension
        self.scripted_chat = dict(scripted_chat or {})
        self.qa_responses = dict(qa_responses or {})
        self.qa_mode = qa_mode
        self.chat_mode = chat_mode

    # -- chat -----------------------------------------------------------
    def _chat(self, messages, params):
        prompt = messages[-1].content
        for key, response in self.scripted_chat.items():
            if key in prompt:
                return response
        if self.chat_mode == "echo":
            return prompt
        return self._synthesized_reply(prompt)

    def _synthesized_reply(self, prompt: str) -> str:
        tag = _stable_int(str(self.seed), prompt) % 100000
        if _TRANSCRIPT_RE.search(prompt):
            lines = []
            for k in range(1, 7):
                lines.append(f"student: What should I know about part {k} "
                             f"of topic {tag}?")
                lines.append(f"teacher: Part {k} of topic {tag} works like this.")
            return "\n".join(lines)
        if _INFILL_RE.search(prompt):
            return f"What does point {tag} mean here?"
        if "You are a teacher" in prompt:
            return f"Here is an explanation keyed to {tag}."
        return f"What can you tell me about item {tag}?"

    # -- embeddings -----------------------------------------------------
    def _vector_for(self, text: str) -> EmbeddingVector:
        if self.embedding_mode == "orthogonal":
            axis = _stable_int("axis", text) % self.dimension
            values = [0.0] * self.dimension
            values[axis] = 1.0
            return EmbeddingVector(values=tuple(values))
        rng = np.random.default_rng(_stable_int(str(self.seed), "emb", text))
        return _normalize(rng.standard_normal(self.dimension))

    def _embed_one(self, text):
        return self._vector_for(text)

    def _embed_token(self, token, position, tokens):
        return self._vector_for(token)

    # -- extractive QA ---------------------------------------------------
    def _qa(self, question, context):
        if question in self.qa_responses:
            return self.qa_responses[question]
        for key, result in self.qa_responses.items():
            if key in question:
                return result
        if self.qa_mode == "never":
            return QAResult(answer="CANNOTANSWER", confidence=0.0)
        if self.qa_mode == "always":
            return QAResult(answer="yes", confidence=0.9)
        # span mode: return a deterministic sentence copied from the context
        sentences = segment_sentences(context)
        if not sentences:
            return QAResult(answer="", confidence=0.0)
        key = _stable_int(str(self.seed), "qa", question, context)
        span = sentences[key % len(sentences)]
        confidence = 0.5 + (key % 1000) / 2000.0
        return QAResult(answer=span, confidence=confidence)
