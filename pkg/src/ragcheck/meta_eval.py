"""Meta-evaluation: how well metric score differences track pairwise human preferences.

Label encoding per aspect is the integer scale -2..2, read as "how much better
response B is than response A":

    -2  A significantly better
    -1  A slightly better
     0  tie
     1  B slightly better
     2  B significantly better
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

ASPECTS: tuple[str, ...] = ("correctness", "completeness", "overall")

# Metric compared against each human aspect when none is given explicitly.
DEFAULT_ASPECT_METRIC: dict[str, str] = {
    "correctness": "precision",
    "completeness": "recall",
    "overall": "f1",
}

LABEL_CHOICES: dict[str, int] = {
    "A significantly better": -2,
    "A slightly better": -1,
    "tie": 0,
    "B slightly better": 1,
    "B significantly better": 2,
}


@dataclass(frozen=True)
class PreferencePair:
    pair_id: str
    scores_a: Mapping[str, float]
    scores_b: Mapping[str, float]
    labels: Mapping[str, Sequence[int]]
    query_id: str = ""
    response_a: str = ""
    response_b: str = ""

    def __post_init__(self) -> None:
        for aspect, values in self.labels.items():
            for v in values:
                if isinstance(v, bool) or not isinstance(v, int) or not -2 <= v <= 2:
                    raise ValueError(f"pair {self.pair_id}: {aspect} label {v!r} outside -2..2")


@dataclass(frozen=True)
class CorrelationResult:
    pearson: Optional[float]
    spearman: Optional[float]
    n: int
    excluded: tuple[str, ...] = field(default=())


def _check_lengths(xs: Sequence[float], ys: Sequence[float], minimum: int) -> None:
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < minimum:
        raise ValueError(f"need at least {minimum} values, got {len(xs)}")


def normalize_diffs(raw_diffs: Sequence[float]) -> list[float]:
    """Scale differences linearly into [-2, 2] by the largest absolute value."""
    if not raw_diffs:
        raise ValueError("normalize_diffs needs at least one value")
    scale = max(abs(d) for d in raw_diffs)
    if scale == 0:
        return [0.0] * len(raw_diffs)
    return [2.0 * d / scale for d in raw_diffs]


def pearson(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    """Sample product-moment correlation; None if either side is constant."""
    _check_lengths(xs, ys, 2)
    if min(xs) == max(xs) or min(ys) == max(ys):
        return None
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    denom = math.sqrt(sxx) * math.sqrt(syy)
    if denom == 0:
        return None
    r = sxy / denom
    return max(-1.0, min(1.0, r))


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of the positions they span."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1
        for pos in range(i, j + 1):
            ranks[order[pos]] = shared
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    _check_lengths(xs, ys, 2)
    return pearson(average_ranks(xs), average_ranks(ys))


def agreement_rate(h: Sequence[int], h_prime: Sequence[int]) -> float:
    """Share of items where two annotators' labels differ by at most one step."""
    _check_lengths(h, h_prime, 1)
    return sum(1 for a, b in zip(h, h_prime) if abs(a - b) <= 1) / len(h)


def correlate_metric(
    pairs: Sequence[PreferencePair], metric: str, aspect: str
) -> CorrelationResult:
    """Correlate averaged human labels with normalized metric differences (B minus A).

    Pairs missing the metric on either side, or without labels for the
    aspect, are skipped and listed in ``excluded``.
    """
    diffs: list[float] = []
    human: list[float] = []
    excluded: list[str] = []
    for pair in pairs:
        a = pair.scores_a.get(metric)
        b = pair.scores_b.get(metric)
        labels = pair.labels.get(aspect) or []
        if a is None or b is None or not labels:
            excluded.append(pair.pair_id)
            continue
        diffs.append(b - a)
        human.append(sum(labels) / len(labels))
    if len(diffs) < 2:
        return CorrelationResult(None, None, len(diffs), tuple(excluded))
    scaled = normalize_diffs(diffs)
    return CorrelationResult(pearson(human, scaled), spearman(human, scaled), len(diffs), tuple(excluded))


def annotator_agreement(pairs: Sequence[PreferencePair], aspect: str) -> Optional[tuple[CorrelationResult, float]]:
    """Correlation and agreement between the first two annotators, where both labelled."""
    first: list[int] = []
    second: list[int] = []
    for pair in pairs:
        labels = pair.labels.get(aspect) or []
        if len(labels) >= 2:
            first.append(labels[0])
            second.append(labels[1])
    if not first:
        return None
    if len(first) < 2:
        corr = CorrelationResult(None, None, len(first))
    else:
        corr = CorrelationResult(pearson(first, second), spearman(first, second), len(first))
    return corr, agreement_rate(first, second)
