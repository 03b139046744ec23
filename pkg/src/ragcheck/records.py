"""Line-delimited JSON record schemas and conversion to/from the core types."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterator, Optional

from pydantic import BaseModel, ConfigDict, StrictBool, StrictInt, StrictStr, ValidationError

from .meta_eval import PreferencePair
from .metrics import METRIC_NAMES, AggregateReport, MetricsRecord
from .model import Claim, ClaimSource, JudgmentSet, RagInstance, RetrievedChunk

AGGREGATE_ID = "__aggregate__"


class InputError(ValueError):
    """Unreadable or malformed input file; maps to exit status 2."""


class ChunkRecord(BaseModel):
    doc_id: StrictStr
    chunk_index: StrictInt
    text: StrictStr


class DatasetRecord(BaseModel):
    query_id: StrictStr
    query: StrictStr
    gt_answer: StrictStr
    response: StrictStr
    retrieved_context: list[ChunkRecord] = []

    def to_instance(self) -> RagInstance:
        return RagInstance(
            self.query_id, self.query, self.gt_answer, self.response,
            tuple(RetrievedChunk(c.doc_id, c.chunk_index, c.text) for c in self.retrieved_context),
        )

    @classmethod
    def from_instance(cls, inst: RagInstance) -> DatasetRecord:
        return cls(
            query_id=inst.query_id, query=inst.query, gt_answer=inst.gt_answer, response=inst.response,
            retrieved_context=[ChunkRecord(doc_id=c.doc_id, chunk_index=c.chunk_index, text=c.text)
                               for c in inst.retrieved],
        )


class JudgmentRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    query_id: StrictStr
    response_claims: list[StrictStr]
    gt_claims: list[StrictStr]
    response_vs_gt: list[StrictBool]
    gt_vs_response: list[StrictBool]
    response_vs_chunks: list[list[StrictBool]]
    gt_vs_chunks: list[list[StrictBool]]

    def to_judgment(self) -> JudgmentSet:
        """Raises JudgmentError on shape problems or when there are no gt claims."""
        return JudgmentSet(
            response_claims=tuple(Claim(i, t, ClaimSource.RESPONSE) for i, t in enumerate(self.response_claims)),
            gt_claims=tuple(Claim(i, t, ClaimSource.GROUND_TRUTH) for i, t in enumerate(self.gt_claims)),
            response_vs_gt=self.response_vs_gt,
            gt_vs_response=self.gt_vs_response,
            response_vs_chunks=self.response_vs_chunks,
            gt_vs_chunks=self.gt_vs_chunks,
            query_id=self.query_id,
        )

    @classmethod
    def from_judgment(cls, js: JudgmentSet) -> JudgmentRecord:
        return cls(
            query_id=js.query_id,
            response_claims=[c.text for c in js.response_claims],
            gt_claims=[c.text for c in js.gt_claims],
            response_vs_gt=list(js.response_vs_gt),
            gt_vs_response=list(js.gt_vs_response),
            response_vs_chunks=[list(r) for r in js.response_vs_chunks],
            gt_vs_chunks=[list(r) for r in js.gt_vs_chunks],
        )


class ReportRecord(BaseModel):
    query_id: StrictStr
    metrics: dict[str, Optional[float]]
    counts: dict
    metadata: Optional[dict] = None

    @classmethod
    def from_metrics(cls, rec: MetricsRecord) -> ReportRecord:
        metrics = rec.metrics()
        return cls(
            query_id=rec.query_id,
            metrics=metrics,
            counts={"m": rec.n_response_claims, "g": rec.n_gt_claims, "k": rec.k,
                    "defined": {n: int(v is not None) for n, v in metrics.items()}},
        )

    @classmethod
    def from_aggregate(cls, agg: AggregateReport, metadata: Optional[dict] = None) -> ReportRecord:
        # m/g/k are totals over the dataset here; the mean claim count is kept alongside.
        return cls(
            query_id=AGGREGATE_ID,
            metrics=dict(agg.means),
            counts={"m": agg.total_response_claims, "g": agg.total_gt_claims, "k": agg.total_chunks,
                    "defined": dict(agg.defined), "n_records": agg.n_records,
                    "mean_response_claims": agg.mean_response_claims},
            metadata=metadata,
        )

    def to_metrics(self) -> MetricsRecord:
        if self.query_id == AGGREGATE_ID:
            raise ValueError("aggregate record has no per-query metrics")
        return MetricsRecord(
            **{n: self.metrics.get(n) for n in METRIC_NAMES},
            n_response_claims=self.counts["m"], n_gt_claims=self.counts["g"], k=self.counts["k"],
            query_id=self.query_id,
        )

    def to_line(self) -> str:
        return dump_line(self.to_doc())

    def to_doc(self) -> dict:
        doc = {"query_id": self.query_id, "metrics": self.metrics, "counts": self.counts}
        if self.metadata is not None:
            doc["metadata"] = self.metadata
        return doc


class PairRecord(BaseModel):
    pair_id: StrictStr
    scores_a: dict[str, float]
    scores_b: dict[str, float]
    labels: dict[str, list[StrictInt]]
    query_id: StrictStr = ""
    response_a: StrictStr = ""
    response_b: StrictStr = ""

    def to_pair(self) -> PreferencePair:
        return PreferencePair(self.pair_id, self.scores_a, self.scores_b,
                              {k: tuple(v) for k, v in self.labels.items()},
                              self.query_id, self.response_a, self.response_b)


def dump_line(doc: dict) -> str:
    return json.dumps(doc, ensure_ascii=False)


def iter_jsonl(path: str | os.PathLike[str]) -> Iterator[tuple[int, dict]]:
    """Yield (1-based line number, object) for each non-blank line."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(doc, dict):
                raise InputError(f"{path}: line {lineno}: expected a JSON object")
            yield lineno, doc


def load_records(path: str | os.PathLike[str], model: type[BaseModel]) -> list[tuple[int, BaseModel]]:
    out = []
    for lineno, doc in iter_jsonl(path):
        try:
            out.append((lineno, model.model_validate(doc)))
        except ValidationError as exc:
            first = exc.errors()[0]
            where = ".".join(str(p) for p in first["loc"]) or "record"
            raise InputError(f"{path}: line {lineno}: {where}: {first['msg']}") from None
    return out


def write_atomic(path: str | os.PathLike[str], text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path: str | os.PathLike[str], docs: list[dict]) -> None:
    write_atomic(path, "".join(dump_line(d) + "\n" for d in docs))
