"""Event scoring of topic segments against their pathway's recent history.

Each indicator is the ratio of a segment statistic to the mean of the same
statistic over the ``w`` preceding segments of the pathway: message volume,
mean positive strength, and mean negative strength magnitude. The event
score is their weighted sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .pathways import TopicPathway, frequent_terms

__all__ = ["EventConfig", "IndicatorScores", "Event", "volume_indicator", "sentiment_indicator",
           "event_score", "detect_events", "novel_terms"]


@dataclass(frozen=True)
class EventConfig:
    w: int = 2
    r_v: float = 0.1
    r_ps: float = 0.45
    r_ns: float = 0.45
    tau_e: float = 1.0
    min_batch_fraction: float = 0.01
    novel_terms_n: int = 10
    exclusion_n: int = 20

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("w must be >= 1")
        for name in ("r_v", "r_ps", "r_ns", "min_batch_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if abs(self.r_v + self.r_ps + self.r_ns - 1.0) > 1e-9:
            raise ValueError(f"indicator weights must sum to 1, got {self.r_v + self.r_ps + self.r_ns}")
        if self.tau_e < 0:
            raise ValueError("tau_e must be non-negative")
        if self.novel_terms_n < 1 or self.exclusion_n < 1:
            raise ValueError("term list sizes must be >= 1")


@dataclass(frozen=True)
class IndicatorScores:
    i_v: float
    i_ps: float
    i_ns: float


@dataclass
class Event:
    pathway_id: int
    batch_index: int
    score: float
    wv: float
    wps: float
    wns: float
    segment_count: int
    batch_count: int
    indicators: IndicatorScores
    novel_terms: list[str] = field(default_factory=list)


def _window_ratio(series: Mapping[int, float], i: int, w: int) -> float | None:
    if i not in series:
        return None
    history = [series.get(j) for j in range(i - w, i)]
    if any(h is None or h == 0 for h in history):
        return None
    return series[i] * w / math.fsum(history)


def volume_indicator(counts: Mapping[int, int], i: int, w: int) -> float | None:
    """Segment size over the pathway's trailing ``w``-segment mean size.

    ``None`` when any of the ``w`` previous segments is missing or empty.
    """
    return _window_ratio(counts, i, w)


def sentiment_indicator(kind: str, avgs: Mapping[int, float], i: int, w: int) -> float | None:
    """Positive or negative strength ratio; negatives are compared by magnitude."""
    if kind not in ("positive", "negative"):
        raise ValueError("kind must be 'positive' or 'negative'")
    series = {k: abs(v) for k, v in avgs.items()} if kind == "negative" else avgs
    return _window_ratio(series, i, w)


def event_score(ind: IndicatorScores, cfg: EventConfig) -> tuple[float, tuple[float, float, float]]:
    parts = (cfg.r_v * ind.i_v, cfg.r_ps * ind.i_ps, cfg.r_ns * ind.i_ns)
    return math.fsum(parts), parts


def novel_terms(pathway: TopicPathway, i: int, w: int, n: int, exclusion_n: int = 20) -> list[str]:
    """Frequent terms of segment ``i`` that are not frequent in the ``w`` segments before it."""
    seg = pathway.segment_at(i)
    if seg is None:
        return []
    excluded = set()
    for j in range(i - w, i):
        prev = pathway.segment_at(j)
        if prev is not None:
            excluded.update(t for t, _ in frequent_terms(prev, exclusion_n))
    ranked = [t for t, _ in frequent_terms(seg, len(seg.term_freqs))]
    return [t for t in ranked if t not in excluded][:n]


def detect_events(pathways: Iterable[TopicPathway], batch_sizes: Mapping[int, int],
                  cfg: EventConfig) -> list[Event]:
    """Score every segment with a full history window and keep the significant ones.

    A segment is an event when its score is strictly above ``tau_e`` and it
    holds at least ``min_batch_fraction`` of its batch's messages. Sorted by
    descending score, then batch index and pathway id.
    """
    events = []
    for pw in pathways:
        counts = {s.batch_index: s.count for s in pw.segments}
        pos = {s.batch_index: s.avg_pos_sent for s in pw.segments if s.avg_pos_sent is not None}
        neg = {s.batch_index: s.avg_neg_sent for s in pw.segments if s.avg_neg_sent is not None}
        for seg in pw.segments:
            i = seg.batch_index
            i_v = volume_indicator(counts, i, cfg.w)
            i_ps = sentiment_indicator("positive", pos, i, cfg.w)
            i_ns = sentiment_indicator("negative", neg, i, cfg.w)
            if i_v is None or i_ps is None or i_ns is None:
                continue
            ind = IndicatorScores(i_v, i_ps, i_ns)
            score, (wv, wps, wns) = event_score(ind, cfg)
            total = batch_sizes.get(i, 0)
            if score > cfg.tau_e and seg.count >= cfg.min_batch_fraction * total:
                events.append(Event(pw.id, i, score, wv, wps, wns, seg.count, total, ind,
                                    novel_terms(pw, i, cfg.w, cfg.novel_terms_n, cfg.exclusion_n)))
    events.sort(key=lambda e: (-e.score, e.batch_index, e.pathway_id))
    return events
