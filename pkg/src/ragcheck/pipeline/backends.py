"""Claim extractors and entailment checkers.

Three kinds of each: replayed fixtures, a deterministic offline rule
(sentence splitting / normalized substring match), and a remote LLM judge.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Protocol, Sequence

from ..model import Claim, ClaimSource, EntailmentLabel, make_claims, normalize_text
from .judge import JudgeClient, JudgeRole, parse_claims, parse_labels, render_check, render_extract


class ExtractorKind(str, Enum):
    FIXTURE = "fixture"
    SENTENCE = "sentence"
    REMOTE_JUDGE = "remote_judge"


class CheckerKind(str, Enum):
    FIXTURE = "fixture"
    LEXICAL = "lexical"
    REMOTE_JUDGE = "remote_judge"


class ExtractionError(ValueError):
    pass


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class CheckContext:
    """Identifies which judgment cell a check fills; only fixtures need it."""

    query_id: str
    claim_side: ClaimSource
    reference: str  # "gt_answer", "response" or "chunk"
    chunk_pos: Optional[int] = None


class Extractor(Protocol):
    kind: ExtractorKind

    def extract(self, text: str, source: ClaimSource, query_id: str = "") -> Sequence[str]: ...


class Checker(Protocol):
    kind: CheckerKind

    def check(self, claims: Sequence[str], reference: str,
              context: Optional[CheckContext] = None) -> list[EntailmentLabel]: ...


_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_END.split(text.strip()) if s.strip()]


class SentenceExtractor:
    kind = ExtractorKind.SENTENCE

    def extract(self, text: str, source: ClaimSource, query_id: str = "") -> list[str]:
        return split_sentences(text)


class LexicalChecker:
    """Entailed iff the normalized claim is a contiguous substring of the normalized reference."""

    kind = CheckerKind.LEXICAL

    def check(self, claims: Sequence[str], reference: str,
              context: Optional[CheckContext] = None) -> list[EntailmentLabel]:
        ref = normalize_text(reference)
        return [EntailmentLabel.ENTAILMENT if normalize_text(c) in ref else EntailmentLabel.NEUTRAL
                for c in claims]


class FixtureBook:
    """Judgment records keyed by query_id, replayed by the fixture backends."""

    def __init__(self, records: Mapping[str, Mapping]):
        self.records = dict(records)

    def get(self, query_id: str) -> Mapping:
        try:
            return self.records[query_id]
        except KeyError:
            raise FixtureError(f"no fixture for query_id {query_id!r}") from None


class FixtureExtractor:
    kind = ExtractorKind.FIXTURE

    def __init__(self, book: FixtureBook):
        self.book = book

    def extract(self, text: str, source: ClaimSource, query_id: str = "") -> list[str]:
        field = "response_claims" if source is ClaimSource.RESPONSE else "gt_claims"
        claims = self.book.get(query_id).get(field)
        if not isinstance(claims, list) or not all(isinstance(c, str) for c in claims):
            raise FixtureError(f"{query_id}: fixture {field} is not a list of strings")
        return list(claims)


class FixtureChecker:
    kind = CheckerKind.FIXTURE

    def __init__(self, book: FixtureBook):
        self.book = book

    def check(self, claims: Sequence[str], reference: str,
              context: Optional[CheckContext] = None) -> list[EntailmentLabel]:
        if context is None:
            raise FixtureError("fixture checker needs a check context")
        record = self.book.get(context.query_id)
        response_side = context.claim_side is ClaimSource.RESPONSE
        try:
            if context.reference == "chunk":
                rows = record["response_vs_chunks" if response_side else "gt_vs_chunks"]
                values = [row[context.chunk_pos] for row in rows]
            else:
                values = record["response_vs_gt" if response_side else "gt_vs_response"]
            labels = [EntailmentLabel.parse(v) for v in values]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise FixtureError(f"{context.query_id}: unusable fixture labels ({exc})") from None
        if len(labels) != len(claims):
            raise FixtureError(f"{context.query_id}: fixture has {len(labels)} labels for {len(claims)} claims")
        return labels


class RemoteExtractor:
    kind = ExtractorKind.REMOTE_JUDGE

    def __init__(self, client: JudgeClient):
        self.client = client

    def extract(self, text: str, source: ClaimSource, query_id: str = "") -> tuple[str, ...]:
        if not text.strip():
            return ()
        req = self.client.request(JudgeRole.EXTRACT, render_extract(text), text)
        return self.client.run(req, parse_claims).payload


class RemoteChecker:
    """One request per reference by default; ``per_claim`` sends each claim alone."""

    kind = CheckerKind.REMOTE_JUDGE

    def __init__(self, client: JudgeClient, batching: str = "per_reference"):
        if batching not in ("per_reference", "per_claim"):
            raise ValueError(f"unknown batching mode {batching!r}")
        self.client = client
        self.batching = batching

    def check(self, claims: Sequence[str], reference: str,
              context: Optional[CheckContext] = None) -> list[EntailmentLabel]:
        if not claims:
            return []
        groups = [list(claims)] if self.batching == "per_reference" else [[c] for c in claims]
        labels: list[EntailmentLabel] = []
        for group in groups:
            req = self.client.request(JudgeRole.CHECK, render_check(group, reference),
                                      "\n".join(group), reference)
            payload = self.client.run(req, lambda raw, n=len(group): parse_labels(raw, n)).payload
            labels.extend(EntailmentLabel(v) for v in payload)
        return labels


def extract_claims(text: str, source: ClaimSource, backend: Extractor, query_id: str = "") -> tuple[Claim, ...]:
    """Run an extractor and turn its output into a claim list.

    Fixture claims are kept verbatim so they stay aligned with the fixture's
    label rows; other backends are normalized and de-duplicated.
    """
    if source is ClaimSource.GROUND_TRUTH and not text.strip() and backend.kind is not ExtractorKind.FIXTURE:
        raise ExtractionError(f"{query_id}: ground-truth answer is empty")
    raw = backend.extract(text, source, query_id)
    if backend.kind is ExtractorKind.FIXTURE:
        try:
            claims = tuple(Claim(i, t, source) for i, t in enumerate(raw))
        except ValueError as exc:
            raise FixtureError(f"{query_id}: {exc}") from None
    else:
        claims = make_claims(raw, source)
    if source is ClaimSource.GROUND_TRUTH and not claims:
        raise ExtractionError(f"{query_id}: no claims extracted from the ground-truth answer")
    return claims


def check_claims(claims: Sequence[Claim], reference: str, backend: Checker,
                 context: Optional[CheckContext] = None) -> list[EntailmentLabel]:
    if not claims:
        return []
    labels = backend.check([c.text for c in claims], reference, context)
    if len(labels) != len(claims):
        raise ValueError(f"checker returned {len(labels)} labels for {len(claims)} claims")
    return labels
