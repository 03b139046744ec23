"""Turn RAG instances into judgment sets, one at a time or as a parallel batch."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from ..model import ClaimSource, JudgmentSet, RagInstance
from .backends import CheckContext, Checker, Extractor, check_claims, extract_claims

log = logging.getLogger(__name__)


class InstanceError(RuntimeError):
    def __init__(self, query_id: str, cause: BaseException):
        super().__init__(f"{query_id}: {type(cause).__name__}: {cause}")
        self.query_id = query_id
        self.cause = cause


@dataclass(frozen=True)
class BatchError:
    query_id: str
    index: int
    error_type: str
    message: str
    raw: str | None = None

    def as_dict(self) -> dict:
        doc = {"query_id": self.query_id, "index": self.index,
               "error_type": self.error_type, "message": self.message}
        if self.raw is not None:
            doc["raw"] = self.raw
        return doc


@dataclass(frozen=True)
class BatchResult:
    judgments: list[JudgmentSet]
    errors: list[BatchError]


def judge_instance(instance: RagInstance, extractor: Extractor, checker: Checker) -> JudgmentSet:
    """Extract claims from response and ground truth, then fill all four judgment tables.

    References are the full ground-truth text, the full response text, and
    each retrieved chunk on its own.
    """
    qid = instance.query_id
    resp_side, gt_side = ClaimSource.RESPONSE, ClaimSource.GROUND_TRUTH
    try:
        resp_claims = extract_claims(instance.response, resp_side, extractor, qid)
        gt_claims = extract_claims(instance.gt_answer, gt_side, extractor, qid)

        resp_vs_gt = check_claims(resp_claims, instance.gt_answer, checker,
                                  CheckContext(qid, resp_side, "gt_answer"))
        gt_vs_resp = check_claims(gt_claims, instance.response, checker,
                                  CheckContext(qid, gt_side, "response"))

        resp_cols, gt_cols = [], []
        for pos, chunk in enumerate(instance.retrieved):
            resp_cols.append(check_claims(resp_claims, chunk.text, checker,
                                          CheckContext(qid, resp_side, "chunk", pos)))
            gt_cols.append(check_claims(gt_claims, chunk.text, checker,
                                        CheckContext(qid, gt_side, "chunk", pos)))

        return JudgmentSet(
            response_claims=resp_claims,
            gt_claims=gt_claims,
            response_vs_gt=[lab.entailed for lab in resp_vs_gt],
            gt_vs_response=[lab.entailed for lab in gt_vs_resp],
            response_vs_chunks=[[col[i].entailed for col in resp_cols] for i in range(len(resp_claims))],
            gt_vs_chunks=[[col[i].entailed for col in gt_cols] for i in range(len(gt_claims))],
            query_id=qid,
        )
    except InstanceError:
        raise
    except Exception as exc:
        raise InstanceError(qid, exc) from exc


def run_batch(
    instances: Sequence[RagInstance],
    extractor: Extractor,
    checker: Checker,
    parallelism: int = 1,
) -> BatchResult:
    """Judge every instance with up to ``parallelism`` workers.

    Each worker issues its judge calls sequentially, so remote calls in
    flight never exceed ``parallelism``. Failures are collected, not raised;
    successful results keep input order.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def work(item: tuple[int, RagInstance]) -> JudgmentSet | BatchError:
        index, inst = item
        try:
            return judge_instance(inst, extractor, checker)
        except InstanceError as exc:
            log.warning("instance %s failed: %s", inst.query_id, exc)
            return BatchError(inst.query_id, index, type(exc.cause).__name__, str(exc),
                              getattr(exc.cause, "raw", None))

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        outcomes = list(pool.map(work, enumerate(instances)))

    judgments = [o for o in outcomes if isinstance(o, JudgmentSet)]
    errors = [o for o in outcomes if isinstance(o, BatchError)]
    return BatchResult(judgments, errors)
