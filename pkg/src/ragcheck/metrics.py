"""Per-query claim-level metrics and their dataset macro-average.

Undefined values (zero denominators) are ``None`` and are excluded from
aggregation rather than coerced to 0 or 1.

Incorrect response claims are split into three disjoint buckets: entailed by
some relevant chunk (relevant noise), entailed only by irrelevant chunks
(irrelevant noise), and entailed by no chunk (hallucination). A claim backed
by both a relevant and an irrelevant chunk therefore counts once, as relevant
noise, and precision + the three buckets always sum to 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from .model import ChunkClassification, ClaimSource, JudgmentSet, Scope, classify_chunks, claim_membership

# Display order follows the usual results-table layout.
METRIC_NAMES: tuple[str, ...] = (
    "precision",
    "recall",
    "f1",
    "claim_recall",
    "context_precision",
    "context_utilization",
    "ns_relevant",
    "ns_irrelevant",
    "hallucination",
    "self_knowledge",
    "faithfulness",
)

COLUMN_HEADERS: dict[str, str] = {
    "precision": "Prec.",
    "recall": "Rec.",
    "f1": "F1",
    "claim_recall": "CR",
    "context_precision": "CP",
    "context_utilization": "CU",
    "ns_relevant": "NS(I)",
    "ns_irrelevant": "NS(II)",
    "hallucination": "Hallu.",
    "self_knowledge": "SK",
    "faithfulness": "Faith.",
}


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def f1_score(precision: Optional[float], recall: Optional[float]) -> Optional[float]:
    if precision is None or recall is None:
        return None
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class MetricsRecord:
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    claim_recall: Optional[float]
    context_precision: Optional[float]
    context_utilization: Optional[float]
    ns_relevant: Optional[float]
    ns_irrelevant: Optional[float]
    hallucination: Optional[float]
    self_knowledge: Optional[float]
    faithfulness: Optional[float]
    n_response_claims: int
    n_gt_claims: int
    k: int
    query_id: str = ""

    def metrics(self) -> dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def as_dict(self) -> dict:
        return asdict(self)


def overall_metrics(judgments: JudgmentSet) -> tuple[Optional[float], Optional[float], Optional[float]]:
    precision = _ratio(sum(judgments.response_vs_gt), judgments.m)
    recall = _ratio(sum(judgments.gt_vs_response), judgments.g)
    return precision, recall, f1_score(precision, recall)


def retriever_metrics(
    judgments: JudgmentSet, classification: ChunkClassification | None = None
) -> tuple[Optional[float], Optional[float]]:
    if classification is None:
        classification = classify_chunks(judgments)
    covered = claim_membership(judgments, ClaimSource.GROUND_TRUTH, Scope.ALL_CHUNKS)
    claim_recall = _ratio(sum(covered), judgments.g)
    context_precision = _ratio(classification.n_relevant, judgments.k)
    return claim_recall, context_precision


def generator_metrics(
    judgments: JudgmentSet, classification: ChunkClassification | None = None
) -> dict[str, Optional[float]]:
    if classification is None:
        classification = classify_chunks(judgments)
    resp = ClaimSource.RESPONSE
    in_any = claim_membership(judgments, resp, Scope.ALL_CHUNKS)
    in_rel = claim_membership(judgments, resp, Scope.RELEVANT_CHUNKS, classification)
    in_irr = claim_membership(judgments, resp, Scope.IRRELEVANT_CHUNKS, classification)

    faithful = hallucinated = self_known = ns_rel = ns_irr = 0
    for correct, any_, rel, irr in zip(judgments.response_vs_gt, in_any, in_rel, in_irr):
        if any_:
            faithful += 1
        if correct:
            if not any_:
                self_known += 1
        elif rel:
            ns_rel += 1
        elif irr:
            ns_irr += 1
        else:
            hallucinated += 1

    m = judgments.m
    gt_in_chunks = claim_membership(judgments, ClaimSource.GROUND_TRUTH, Scope.ALL_CHUNKS)
    used = sum(1 for hit, covered in zip(gt_in_chunks, judgments.gt_vs_response) if hit and covered)
    return {
        "context_utilization": _ratio(used, sum(gt_in_chunks)),
        "ns_relevant": _ratio(ns_rel, m),
        "ns_irrelevant": _ratio(ns_irr, m),
        "hallucination": _ratio(hallucinated, m),
        "self_knowledge": _ratio(self_known, m),
        "faithfulness": _ratio(faithful, m),
    }


def compute_all(judgments: JudgmentSet) -> MetricsRecord:
    classification = classify_chunks(judgments)
    precision, recall, f1 = overall_metrics(judgments)
    claim_recall, context_precision = retriever_metrics(judgments, classification)
    return MetricsRecord(
        precision=precision,
        recall=recall,
        f1=f1,
        claim_recall=claim_recall,
        context_precision=context_precision,
        **generator_metrics(judgments, classification),
        n_response_claims=judgments.m,
        n_gt_claims=judgments.g,
        k=judgments.k,
        query_id=judgments.query_id,
    )


@dataclass(frozen=True)
class AggregateReport:
    means: dict[str, Optional[float]]
    defined: dict[str, int]
    n_records: int
    mean_response_claims: float
    total_response_claims: int
    total_gt_claims: int
    total_chunks: int

    @property
    def display_claims(self) -> int:
        # Half-up so the display does not depend on banker's rounding.
        return int(self.mean_response_claims + 0.5)


def aggregate(records: Sequence[MetricsRecord]) -> AggregateReport:
    """Macro-average each metric over the records where it is defined."""
    if not records:
        raise ValueError("cannot aggregate an empty list of records")
    means: dict[str, Optional[float]] = {}
    defined: dict[str, int] = {}
    for name in METRIC_NAMES:
        values = [v for v in (getattr(r, name) for r in records) if v is not None]
        defined[name] = len(values)
        means[name] = math.fsum(values) / len(values) if values else None
    total_m = sum(r.n_response_claims for r in records)
    return AggregateReport(
        means=means,
        defined=defined,
        n_records=len(records),
        mean_response_claims=total_m / len(records),
        total_response_claims=total_m,
        total_gt_claims=sum(r.n_gt_claims for r in records),
        total_chunks=sum(r.k for r in records),
    )
