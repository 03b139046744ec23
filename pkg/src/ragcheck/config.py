"""Run configuration (JSON or YAML) and construction of the judging backends."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError

from .pipeline import (
    CacheStore,
    FixtureBook,
    FixtureChecker,
    FixtureExtractor,
    JudgeClient,
    LexicalChecker,
    RemoteChecker,
    RemoteExtractor,
    RetryPolicy,
    SentenceExtractor,
)
from .records import InputError, iter_jsonl

API_KEY_ENV = "JUDGE_API_KEY"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ExtractorConfig(_Strict):
    kind: Literal["sentence", "fixture", "remote_judge"] = "sentence"
    fixture_path: Optional[str] = None


class CheckerConfig(_Strict):
    kind: Literal["lexical", "fixture", "remote_judge"] = "lexical"
    fixture_path: Optional[str] = None
    batching: Literal["per_reference", "per_claim"] = "per_reference"


class JudgeConfig(_Strict):
    url: Optional[str] = None
    model: str = "Llama3-70B-Instruct"
    temperature: float = 0.0
    max_tokens: int = Field(2048, gt=0)
    timeout: float = Field(120.0, gt=0)


class RetryConfig(_Strict):
    max_attempts: int = Field(5, ge=1)
    base_delay: float = Field(1.0, ge=0)
    factor: float = Field(2.0, ge=1)


class ChunkingMetadata(_Strict):
    """Describes how the system under test chunked and retrieved; recorded, never applied."""

    chunk_size: int = 300
    chunk_overlap_ratio: float = 0.2
    top_k: int = 20


class RunConfig(_Strict):
    extractor: ExtractorConfig = ExtractorConfig()
    checker: CheckerConfig = CheckerConfig()
    judge: JudgeConfig = JudgeConfig()
    parallelism: int = Field(8, ge=1)
    cache_dir: Optional[str] = None
    retry: RetryConfig = RetryConfig()
    metadata: ChunkingMetadata = ChunkingMetadata()

    _base_dir: Path = PrivateAttr(default=Path("."))

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self._base_dir / p

    def report_metadata(self) -> dict:
        return {
            "extractor": self.extractor.kind,
            "checker": self.checker.kind,
            "judge_model": self.judge.model if "remote_judge" in (self.extractor.kind, self.checker.kind) else None,
            "temperature": self.judge.temperature,
            "max_tokens": self.judge.max_tokens,
            **self.metadata.model_dump(),
        }


def load_config(path: Optional[str | os.PathLike[str]]) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {p}: {exc.strerror}") from None
    try:
        doc = yaml.safe_load(text) if p.suffix in (".yaml", ".yml") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise InputError(f"config {p}: {exc}") from None
    try:
        cfg = RunConfig.model_validate(doc or {})
    except ValidationError as exc:
        first = exc.errors()[0]
        raise InputError(f"config {p}: {'.'.join(map(str, first['loc']))}: {first['msg']}") from None
    cfg._base_dir = p.parent
    return cfg


def _fixture_book(cfg: RunConfig, path: Optional[str]) -> FixtureBook:
    if not path:
        raise InputError("fixture backend requires fixture_path")
    # Fixture rows are validated lazily so one bad record only fails its own instance.
    return FixtureBook({doc.get("query_id"): doc for _, doc in iter_jsonl(cfg.resolve(path))})


def build_backends(cfg: RunConfig, *, client: Optional[JudgeClient] = None):
    """Return (extractor, checker, client); the client is None when nothing remote is used."""
    needs_remote = "remote_judge" in (cfg.extractor.kind, cfg.checker.kind)
    if needs_remote and client is None:
        if not cfg.judge.url:
            raise InputError("remote_judge backend requires judge.url in the config")
        client = JudgeClient(
            cfg.judge.url, cfg.judge.model,
            api_key=os.environ.get(API_KEY_ENV),
            temperature=cfg.judge.temperature,
            max_tokens=cfg.judge.max_tokens,
            timeout=cfg.judge.timeout,
            retry=RetryPolicy(cfg.retry.max_attempts, cfg.retry.base_delay, cfg.retry.factor),
            cache=CacheStore(cfg.resolve(cfg.cache_dir)) if cfg.cache_dir else None,
        )

    if cfg.extractor.kind == "sentence":
        extractor = SentenceExtractor()
    elif cfg.extractor.kind == "fixture":
        extractor = FixtureExtractor(_fixture_book(cfg, cfg.extractor.fixture_path))
    else:
        extractor = RemoteExtractor(client)

    if cfg.checker.kind == "lexical":
        checker = LexicalChecker()
    elif cfg.checker.kind == "fixture":
        checker = FixtureChecker(_fixture_book(cfg, cfg.checker.fixture_path))
    else:
        checker = RemoteChecker(client, cfg.checker.batching)
    return extractor, checker, client

