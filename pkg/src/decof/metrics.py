"""Detection metrics: accuracy at a fixed threshold, average precision, and
frame-to-video score aggregation."""
import math
from dataclasses import dataclass

from .errors import MetricError


@dataclass(frozen=True)
class ScoredItem:
    score: float
    label: int
    video_id: str = ""
    generator: str = None


def _check(items):
    if not items:
        raise MetricError("cannot compute a metric on an empty scored set")
    for it in items:
        if not math.isfinite(it.score):
            raise MetricError(f"non-finite score for {it.video_id!r}")


def accuracy(items, threshold=0.5):
    """Share of items where ``score >= threshold`` agrees with ``label == 1``.

    A score exactly at the threshold counts as generated.
    """
    _check(items)
    hits = sum((it.score >= threshold) == (it.label == 1) for it in items)
    return hits / len(items)


def rank_order(items):
    """Descending score; ties broken by ascending video id."""
    return sorted(items, key=lambda it: (-it.score, it.video_id))


def average_precision(items):
    """Mean of precision@k taken at the rank k of every positive."""
    _check(items)
    ranked = rank_order(items)
    positives = 0
    total = 0.0
    for k, it in enumerate(ranked, start=1):
        if it.label == 1:
            positives += 1
            total += positives / k
    if positives == 0:
        raise MetricError("average precision needs at least one positive label")
    return total / positives


def aggregate_frames(frame_scores):
    scores = list(frame_scores)
    if not scores:
        raise MetricError("no frame scores to aggregate")
    # clamp: rounding of the division must not escape [min, max]
    return min(max(math.fsum(scores) / len(scores), min(scores)), max(scores))
