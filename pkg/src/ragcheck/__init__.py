"""Claim-level evaluation of retrieval-augmented generation systems."""

from .metrics import METRIC_NAMES, AggregateReport, MetricsRecord, aggregate, compute_all
from .model import (
    ChunkClassification,
    Claim,
    ClaimSource,
    EntailmentLabel,
    JudgmentError,
    JudgmentSet,
    RagInstance,
    RetrievedChunk,
    Scope,
    claim_membership,
    classify_chunks,
    judgment_from_bools,
    make_claims,
    validate_instance,
)

__version__ = "0.1.0"
