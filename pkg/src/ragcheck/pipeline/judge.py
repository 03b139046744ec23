"""HTTP client for an LLM judge behind a chat-completion style endpoint.

The client renders prompts, retries transient failures with exponential
backoff, parses the reply, and caches parsed responses on disk keyed by the
prompt inputs and template version.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import httpx

from ..model import EntailmentLabel
from .cache import CacheStore, cache_key

log = logging.getLogger(__name__)

TEMPLATE_VERSION = "v1"

# The query is deliberately left out of the checker prompt: entailment is
# judged against the reference text alone.
EXTRACT_TEMPLATE = """\
Break the text below into atomic factual claims. Each claim must be a short, \
self-contained statement that can be verified on its own. Write one claim per \
line without numbering. If the text makes no factual claims, write NONE.

### Text
{text}

### Claims
"""

CHECK_TEMPLATE = """\
For each numbered claim, decide whether the reference text entails it. Answer \
with exactly one label per line, in claim order, chosen from: Entailment, \
Neutral, Contradiction.

### Reference
{reference}

### Claims
{claims}

### Labels
"""


class JudgeRole(str, Enum):
    EXTRACT = "extract"
    CHECK = "check"


class JudgeError(RuntimeError):
    """Non-retriable judge failure."""

    def __init__(self, message: str, raw: Optional[str] = None):
        super().__init__(message)
        self.raw = raw


class RetriableJudgeError(JudgeError):
    """Transport error, 5xx/429 status, or an unparseable reply."""


class JudgeParseError(RetriableJudgeError):
    pass


class LabelCountError(JudgeError):
    pass


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    base_delay: float = 1.0
    factor: float = 2.0

    def delay(self, attempt: int) -> float:
        """Sleep before retrying after the given (1-based) failed attempt."""
        return self.base_delay * self.factor ** (attempt - 1)


@dataclass(frozen=True)
class JudgeRequest:
    role: JudgeRole
    prompt: str
    model: str
    input_text: str
    reference_text: str = ""
    temperature: float = 0.0
    max_tokens: int = 2048

    def body(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "messages": [{"role": "user", "content": self.prompt}],
        }

    def key(self) -> str:
        return cache_key(self.role.value, self.model, TEMPLATE_VERSION, self.input_text, self.reference_text)


@dataclass(frozen=True)
class JudgeResponse:
    role: JudgeRole
    raw: str
    payload: tuple[str, ...]
    usage: dict = field(default_factory=dict)

    def to_bytes(self) -> bytes:
        doc = {"role": self.role.value, "raw": self.raw, "payload": list(self.payload), "usage": self.usage}
        return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes) -> JudgeResponse:
        doc = json.loads(data.decode("utf-8"))
        return cls(JudgeRole(doc["role"]), doc["raw"], tuple(doc["payload"]), doc.get("usage") or {})


def render_extract(text: str) -> str:
    return EXTRACT_TEMPLATE.format(text=text)


def render_check(claims: Sequence[str], reference: str) -> str:
    numbered = "\n".join(f"{i}. {c}" for i, c in enumerate(claims, 1))
    return CHECK_TEMPLATE.format(reference=reference, claims=numbered)


_BULLET = re.compile(r"^\s*(?:[-*•]|\(?\d+[.):])\s*")


def _content_lines(raw: str) -> list[str]:
    return [s for s in (_BULLET.sub("", line).strip() for line in raw.splitlines()) if s]


def parse_claims(raw: str) -> tuple[str, ...]:
    lines = _content_lines(raw)
    if not lines:
        raise JudgeParseError("empty claim extraction reply", raw)
    if len(lines) == 1 and lines[0].rstrip(".").upper() == "NONE":
        return ()
    return tuple(lines)


def parse_labels(raw: str, expected: int) -> tuple[str, ...]:
    labels = []
    for line in _content_lines(raw):
        try:
            labels.append(EntailmentLabel.parse(line.rstrip(".").strip()).value)
        except ValueError:
            raise JudgeParseError(f"unparseable label line: {line!r}", raw) from None
    if len(labels) != expected:
        raise LabelCountError(f"judge returned {len(labels)} labels for {expected} claims", raw)
    return tuple(labels)


class JudgeClient:
    """Thread-safe judge client; share one instance across worker threads."""

    def __init__(
        self,
        url: str,
        model: str,
        *,
        api_key: Optional[str] = None,
        temperature: float = 0.0,
        max_tokens: int = 2048,
        timeout: float = 120.0,
        retry: RetryPolicy = RetryPolicy(),
        cache: Optional[CacheStore] = None,
        http: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.url = url
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.retry = retry
        self.cache = cache
        self._sleep = sleep
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._http = http or httpx.Client(timeout=timeout, headers=headers)

    def close(self) -> None:
        self._http.close()

    def request(self, role: JudgeRole, prompt: str, input_text: str, reference_text: str = "") -> JudgeRequest:
        return JudgeRequest(role, prompt, self.model, input_text, reference_text,
                            self.temperature, self.max_tokens)

    def run(self, request: JudgeRequest, parse: Callable[[str], tuple[str, ...]]) -> JudgeResponse:
        key = request.key()
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return JudgeResponse.from_bytes(hit)

        last: Optional[RetriableJudgeError] = None
        for attempt in range(1, self.retry.max_attempts + 1):
            try:
                raw, usage = self._post(request)
                response = JudgeResponse(request.role, raw, parse(raw), usage)
                break
            except RetriableJudgeError as exc:
                last = exc
                log.debug("judge attempt %d/%d failed: %s", attempt, self.retry.max_attempts, exc)
                if attempt < self.retry.max_attempts:
                    self._sleep(self.retry.delay(attempt))
        else:
            assert last is not None
            raise JudgeError(f"judge failed after {self.retry.max_attempts} attempts: {last}", last.raw)

        if self.cache is not None:
            self.cache.put(key, response.to_bytes())
        return response

    def _post(self, request: JudgeRequest) -> tuple[str, dict]:
        try:
            resp = self._http.post(self.url, json=request.body())
        except httpx.TransportError as exc:
            raise RetriableJudgeError(f"transport error: {exc}") from exc
        if resp.status_code >= 500 or resp.status_code == 429:
            raise RetriableJudgeError(f"judge returned HTTP {resp.status_code}", resp.text)
        if resp.status_code >= 400:
            raise JudgeError(f"judge returned HTTP {resp.status_code}", resp.text)
        try:
            doc = resp.json()
            content = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise JudgeParseError("response body lacks choices[0].message.content", resp.text) from None
        if not isinstance(content, str):
            raise JudgeParseError("message content is not a string", resp.text)
        return content, doc.get("usage") or {}
