from .backends import (
    CheckContext,
    CheckerKind,
    ExtractionError,
    ExtractorKind,
    FixtureBook,
    FixtureChecker,
    FixtureError,
    FixtureExtractor,
    LexicalChecker,
    RemoteChecker,
    RemoteExtractor,
    SentenceExtractor,
    check_claims,
    extract_claims,
    split_sentences,
)
from .batch import BatchError, BatchResult, InstanceError, judge_instance, run_batch
from .cache import CacheStore, cache_key
from .judge import (
    TEMPLATE_VERSION,
    JudgeClient,
    JudgeError,
    JudgeRequest,
    JudgeResponse,
    JudgeRole,
    RetriableJudgeError,
    RetryPolicy,
)
