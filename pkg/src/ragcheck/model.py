"""Evaluation data model: instances, claims, entailment judgments and chunk classes.

Everything here is an immutable value object. Membership of a claim in a set
of chunks is always derived as an OR over the per-chunk judgment row; it is
never stored separately.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class JudgmentError(ValueError):
    """Raised when a JudgmentSet is malformed (bad dimensions, no gt claims)."""


class ClaimSource(str, Enum):
    RESPONSE = "response"
    GROUND_TRUTH = "ground_truth"


class EntailmentLabel(str, Enum):
    ENTAILMENT = "Entailment"
    NEUTRAL = "Neutral"
    CONTRADICTION = "Contradiction"

    @property
    def entailed(self) -> bool:
        # Neutral and Contradiction are both "not in" for metric purposes.
        return self is EntailmentLabel.ENTAILMENT

    @classmethod
    def parse(cls, value: str | bool) -> EntailmentLabel:
        if isinstance(value, bool):
            return cls.ENTAILMENT if value else cls.NEUTRAL
        key = str(value).strip().lower()
        for label in cls:
            if label.value.lower() == key:
                return label
        raise ValueError(f"unknown entailment label: {value!r}")


class Scope(str, Enum):
    ALL_CHUNKS = "all"
    RELEVANT_CHUNKS = "relevant"
    IRRELEVANT_CHUNKS = "irrelevant"


_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """NFC-normalize, lowercase and collapse whitespace runs."""
    return _WS.sub(" ", unicodedata.normalize("NFC", text).lower()).strip()


@dataclass(frozen=True)
class RetrievedChunk:
    doc_id: str
    chunk_index: int
    text: str


@dataclass(frozen=True)
class RagInstance:
    query_id: str
    query: str
    gt_answer: str
    response: str
    retrieved: tuple[RetrievedChunk, ...] = ()

    def __post_init__(self) -> None:
        # Accept any sequence but keep rank order untouched.
        object.__setattr__(self, "retrieved", tuple(self.retrieved))

    @property
    def k(self) -> int:
        return len(self.retrieved)


@dataclass(frozen=True)
class Claim:
    claim_id: int
    text: str
    source: ClaimSource

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("claim text must be non-empty")


def make_claims(texts: Iterable[str], source: ClaimSource) -> tuple[Claim, ...]:
    """Normalize claim texts, drop empties and later duplicates, assign ids."""
    seen: set[str] = set()
    out: list[Claim] = []
    for raw in texts:
        norm = normalize_text(raw)
        if not norm or norm in seen:
            continue
        seen.add(norm)
        out.append(Claim(len(out), norm, source))
    return tuple(out)


def _bool_row(row: Iterable[bool]) -> tuple[bool, ...]:
    return tuple(bool(v) for v in row)


@dataclass(frozen=True)
class JudgmentSet:
    """The four entailment tables every metric is computed from.

    ``response_vs_chunks[i][j]`` is true iff response claim i is entailed by
    chunk j; ``gt_vs_chunks`` likewise for ground-truth claims. ``k`` is
    taken from the gt rows, which always exist since at least one gt claim
    is required.
    """

    response_claims: tuple[Claim, ...]
    gt_claims: tuple[Claim, ...]
    response_vs_gt: tuple[bool, ...]
    gt_vs_response: tuple[bool, ...]
    response_vs_chunks: tuple[tuple[bool, ...], ...]
    gt_vs_chunks: tuple[tuple[bool, ...], ...]
    query_id: str = ""
    k: int = field(init=False)

    def __post_init__(self) -> None:
        set_ = object.__setattr__
        set_(self, "response_claims", tuple(self.response_claims))
        set_(self, "gt_claims", tuple(self.gt_claims))
        set_(self, "response_vs_gt", _bool_row(self.response_vs_gt))
        set_(self, "gt_vs_response", _bool_row(self.gt_vs_response))
        set_(self, "response_vs_chunks", tuple(_bool_row(r) for r in self.response_vs_chunks))
        set_(self, "gt_vs_chunks", tuple(_bool_row(r) for r in self.gt_vs_chunks))
        if not self.gt_claims:
            raise JudgmentError(f"{self.query_id or 'judgment'}: no ground-truth claims (G must be >= 1)")
        set_(self, "k", len(self.gt_vs_chunks[0]) if self.gt_vs_chunks else -1)
        self._check_shapes()

    def _check_shapes(self) -> None:
        m, g, k = self.m, self.g, self.k

        def fail(name: str, detail: str) -> None:
            prefix = f"{self.query_id}: " if self.query_id else ""
            raise JudgmentError(f"{prefix}{name} {detail}")

        if len(self.response_vs_gt) != m:
            fail("response_vs_gt", f"has length {len(self.response_vs_gt)}, expected M={m}")
        if len(self.gt_vs_response) != g:
            fail("gt_vs_response", f"has length {len(self.gt_vs_response)}, expected G={g}")
        if len(self.gt_vs_chunks) != g:
            fail("gt_vs_chunks", f"has {len(self.gt_vs_chunks)} rows, expected G={g}")
        for i, row in enumerate(self.gt_vs_chunks):
            if len(row) != k:
                fail("gt_vs_chunks", f"row {i} has {len(row)} columns, expected k={k}")
        if len(self.response_vs_chunks) != m:
            fail("response_vs_chunks", f"has {len(self.response_vs_chunks)} rows, expected M={m}")
        for i, row in enumerate(self.response_vs_chunks):
            if len(row) != k:
                fail("response_vs_chunks", f"row {i} has {len(row)} columns, expected k={k}")
        for claims, side in ((self.response_claims, ClaimSource.RESPONSE),
                             (self.gt_claims, ClaimSource.GROUND_TRUTH)):
            if any(c.source is not side for c in claims):
                fail(f"{side.value} claims", "contain a claim with the wrong source")

    @property
    def m(self) -> int:
        return len(self.response_claims)

    @property
    def g(self) -> int:
        return len(self.gt_claims)


@dataclass(frozen=True)
class ChunkClassification:
    relevant: tuple[bool, ...]

    @property
    def irrelevant(self) -> tuple[bool, ...]:
        return tuple(not r for r in self.relevant)

    @property
    def n_relevant(self) -> int:
        return sum(self.relevant)


def classify_chunks(judgments: JudgmentSet) -> ChunkClassification:
    """A chunk is relevant iff it entails at least one ground-truth claim."""
    relevant = [False] * judgments.k
    for row in judgments.gt_vs_chunks:
        for j, hit in enumerate(row):
            if hit:
                relevant[j] = True
    return ChunkClassification(tuple(relevant))


def claim_membership(
    judgments: JudgmentSet,
    claim_side: ClaimSource,
    scope: Scope = Scope.ALL_CHUNKS,
    classification: ChunkClassification | None = None,
) -> tuple[bool, ...]:
    """Per-claim flag: entailed by at least one chunk inside ``scope``."""
    rows = (judgments.response_vs_chunks if claim_side is ClaimSource.RESPONSE
            else judgments.gt_vs_chunks)
    if scope is Scope.ALL_CHUNKS:
        return tuple(any(row) for row in rows)
    if classification is None:
        classification = classify_chunks(judgments)
    if len(classification.relevant) != judgments.k:
        raise JudgmentError(
            f"classification covers {len(classification.relevant)} chunks, expected k={judgments.k}")
    want = scope is Scope.RELEVANT_CHUNKS
    mask = [r == want for r in classification.relevant]
    return tuple(any(hit and keep for hit, keep in zip(row, mask)) for row in rows)


def validate_instance(instance: RagInstance) -> list[str]:
    """List the problems with one instance; an empty list means well-formed.

    An empty response is allowed (it yields zero response claims). Duplicate
    query ids are a dataset-level concern and are checked by the caller.
    """
    problems: list[str] = []
    for name in ("query_id", "query", "gt_answer"):
        if not getattr(instance, name).strip():
            problems.append(f"{name} empty")
    seen: set[tuple[str, int]] = set()
    for pos, chunk in enumerate(instance.retrieved):
        if chunk.chunk_index < 0:
            problems.append(f"retrieved[{pos}] chunk_index negative ({chunk.chunk_index})")
        if not chunk.text.strip():
            problems.append(f"retrieved[{pos}] text empty")
        key = (chunk.doc_id, chunk.chunk_index)
        if key in seen:
            problems.append(f"duplicate chunk (doc_id={chunk.doc_id!r}, chunk_index={chunk.chunk_index})")
        seen.add(key)
    return problems


def judgment_from_bools(
    response_vs_gt: Sequence[bool],
    gt_vs_response: Sequence[bool],
    response_vs_chunks: Sequence[Sequence[bool]],
    gt_vs_chunks: Sequence[Sequence[bool]],
    query_id: str = "",
) -> JudgmentSet:
    """Build a JudgmentSet with placeholder claim texts; handy for tests and sweeps."""
    resp = tuple(Claim(i, f"response claim {i}", ClaimSource.RESPONSE)
                 for i in range(len(response_vs_gt)))
    gt = tuple(Claim(i, f"gt claim {i}", ClaimSource.GROUND_TRUTH)
               for i in range(len(gt_vs_response)))
    return JudgmentSet(resp, gt, response_vs_gt, gt_vs_response,
                       response_vs_chunks, gt_vs_chunks, query_id=query_id)
