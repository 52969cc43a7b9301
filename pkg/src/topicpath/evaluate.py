"""Topic coherence, a synthetic stream generator and brute-force cross-checks."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Microblog

__all__ = [
    "DocTermIndex", "topic_coherence", "coherence_curve", "TopicDef", "Injection",
    "SyntheticSpec", "make_topics", "generate_synthetic", "segment_purity",
    "oracle_route", "oracle_indicators", "POS_WORDS", "NEG_WORDS",
]


class DocTermIndex:
    """Which documents contain which terms."""

    def __init__(self, docs: Mapping[str, Iterable[str]] | None = None):
        self.postings: dict[str, set[str]] = {}
        self.n_docs = 0
        for doc_id, terms in (docs or {}).items():
            self.add(doc_id, terms)

    def add(self, doc_id: str, terms: Iterable[str]) -> None:
        self.n_docs += 1
        for t in set(terms):
            self.postings.setdefault(t, set()).add(doc_id)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def co_df(self, a: str, b: str) -> int:
        pa, pb = self.postings.get(a), self.postings.get(b)
        if not pa or not pb:
            return 0
        if len(pa) > len(pb):
            pa, pb = pb, pa
        return sum(1 for d in pa if d in pb)


def _pair_sum(terms: Sequence[str], t: int, index: DocTermIndex) -> float:
    vt = terms[t]
    return math.fsum(
        math.log((index.co_df(vt, terms[l]) + 1) / max(index.df(terms[l]), 1)) for l in range(t)
    )


def topic_coherence(terms: Sequence[str], index: DocTermIndex) -> float:
    """Log co-document coherence of a frequency-ordered term list.

    Sum over pairs l < t of ``log((D(v_t, v_l) + 1) / D(v_l))`` with natural
    logs and ``D(v_l)`` floored at 1.
    """
    return math.fsum(_pair_sum(terms, t, index) for t in range(1, len(terms)))


def coherence_curve(ranked_terms: Sequence[str], index: DocTermIndex,
                    n_min: int = 2, n_max: int = 100) -> list[tuple[int, float]]:
    """Coherence of the top-n terms for every n in ``[n_min, n_max]`` the list supports."""
    terms = list(ranked_terms)
    top = min(n_max, len(terms))
    if top < 2:
        return []
    out = []
    parts = []
    for t in range(1, top):
        parts.append(_pair_sum(terms, t, index))
        n = t + 1
        if n >= n_min:
            out.append((n, math.fsum(parts)))
    return out


# -- synthetic streams -------------------------------------------------------

POS_WORDS = {2: "nice", 3: "great", 4: "awesome"}
NEG_WORDS = {2: "boring", 3: "hate", 4: "horrible"}


@dataclass
class TopicDef:
    terms: list[str]
    base: int = 10
    weights: list[float] | None = None
    zipf: float = 1.0

    def probabilities(self) -> np.ndarray:
        if self.weights is None:
            w = 1.0 / np.arange(1, len(self.terms) + 1) ** self.zipf
        else:
            w = np.asarray(self.weights, dtype=np.float64)
        return w / w.sum()


@dataclass
class Injection:
    batch: int
    topic: int
    volume: float = 1.0
    pos_shift: float = 0.0
    neg_shift: float = 0.0

    def __post_init__(self):
        if self.volume <= 0:
            raise ValueError("volume multiplier must be positive")


@dataclass
class SyntheticSpec:
    topics: list[TopicDef]
    batches: int
    background: list[str] = field(default_factory=list)
    noise_rate: float = 0.0
    injections: list[Injection] = field(default_factory=list)
    arrivals: list[tuple[int, TopicDef]] = field(default_factory=list)
    base_pos: float = 1.0
    base_neg: float = 1.0
    delta_t: float = 7 * 24 * 3600.0
    start: float = 1_420_070_400.0
    min_tokens: int = 5
    max_tokens: int = 12
    rng_seed: int = 0

    def __post_init__(self):
        n_topics = len(self.topics) + len(self.arrivals)
        for inj in self.injections:
            if not 0 <= inj.batch < self.batches or not 0 <= inj.topic < n_topics:
                raise ValueError(f"injection out of range: {inj}")
        for b, _ in self.arrivals:
            if not 0 <= b < self.batches:
                raise ValueError(f"arrival batch {b} out of range")

    @staticmethod
    def sentiment_terms() -> frozenset[str]:
        return frozenset(POS_WORDS.values()) | frozenset(NEG_WORDS.values())


def make_topics(n_topics: int, terms_per_topic: int = 30, base: int = 40,
                prefix: str = "t", zipf: float = 1.0) -> list[TopicDef]:
    """Topics over disjoint synthetic vocabularies like ``t0w07``."""
    return [TopicDef([f"{prefix}{k}w{j:02d}" for j in range(terms_per_topic)], base, zipf=zipf)
            for k in range(n_topics)]


def _strengths(rng: np.random.Generator, count: int, target: float) -> np.ndarray:
    """Per-message integer strengths in [1, 4] whose mean is ``target`` up to rounding."""
    target = min(max(target, 1.0), 4.0)
    lo = int(math.floor(target))
    out = np.full(count, lo, dtype=np.int64)
    n_hi = int(round((target - lo) * count))
    if lo < 4 and n_hi:
        out[rng.permutation(count)[:n_hi]] = lo + 1
    return out


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[Microblog], list[dict]]:
    """Messages plus ground-truth labels ``{"id", "topic", "batch"}``.

    Each active topic emits ``round(base * volume)`` messages per batch of
    5-12 tokens; sentiment targets are realised by appending a word of the
    required strength.
    """
    rng = np.random.default_rng(spec.rng_seed)
    topics = list(spec.topics) + [t for _, t in spec.arrivals]
    first_batch = [0] * len(spec.topics) + [b for b, _ in spec.arrivals]
    probs = [t.probabilities() for t in topics]
    mods = {(i.batch, i.topic): i for i in spec.injections}
    messages, labels = [], []
    for b in range(spec.batches):
        for k, topic in enumerate(topics):
            if b < first_batch[k]:
                continue
            inj = mods.get((b, k))
            count = int(round(topic.base * (inj.volume if inj else 1.0)))
            if count <= 0:
                continue
            pos = _strengths(rng, count, spec.base_pos + (inj.pos_shift if inj else 0.0))
            neg = _strengths(rng, count, spec.base_neg + (inj.neg_shift if inj else 0.0))
            for m in range(count):
                n_tok = int(rng.integers(spec.min_tokens, spec.max_tokens + 1))
                words = []
                for _ in range(n_tok):
                    if spec.background and rng.random() < spec.noise_rate:
                        words.append(spec.background[int(rng.integers(len(spec.background)))])
                    else:
                        words.append(topic.terms[int(rng.choice(len(topic.terms), p=probs[k]))])
                if pos[m] >= 2:
                    words.append(POS_WORDS[int(pos[m])])
                if neg[m] >= 2:
                    words.append(NEG_WORDS[int(neg[m])])
                # the stream origin must coincide with spec.start so windows line up
                offset = 0.0 if not messages else float(rng.random())
                ts = math.floor((spec.start + (b + offset) * spec.delta_t) * 1000) / 1000
                mid = f"b{b:03d}-t{k:02d}-{m:05d}"
                messages.append(Microblog(mid, ts, " ".join(words)))
                labels.append({"id": mid, "topic": k, "batch": b})
    order = sorted(range(len(messages)), key=lambda i: (messages[i].timestamp, messages[i].id))
    return [messages[i] for i in order], [labels[i] for i in order]


def segment_purity(segment_ids: Iterable[Sequence[str]], truth: Mapping[str, int]) -> list[float]:
    """Majority-topic share of each segment."""
    out = []
    for ids in segment_ids:
        ids = list(ids)
        if not ids:
            continue
        top = Counter(truth[i] for i in ids).most_common(1)[0][1]
        out.append(top / len(ids))
    return out


# -- independent brute-force checks --------------------------------------------

def _terms_of(vec) -> dict[str, float]:
    terms = vec.vocab.terms
    return {terms[int(i)]: float(w) for i, w in zip(vec.indices, vec.values)}


def oracle_route(vectors: Mapping[str, object], crvs: Sequence[object],
                 tau_sim: float, tie_tol: float = 1e-12) -> dict[str, int | None]:
    """Route by exhaustive pairwise similarity; ``None`` means the new map.

    ``crvs`` are objects with ``id`` and ``weights``; only raw vector fields
    are read, never the pipeline's similarity code.
    """
    crv_data = []
    for c in sorted(crvs, key=lambda c: c.id):
        crv_data.append((c.id, _terms_of(c.weights), set(c.weights.vocab.terms)))
    out: dict[str, int | None] = {}
    for vid, v in vectors.items():
        vw = _terms_of(v)
        v_vocab = set(v.vocab.terms)
        best_id, best = None, -1.0
        for cid, cw, c_vocab in crv_data:
            shared = v_vocab & c_vocab
            a = {t: x for t, x in cw.items() if t in shared}
            b = {t: x for t, x in vw.items() if t in shared}
            dot = sum(a[t] * b[t] for t in a if t in b)
            na = math.sqrt(sum(x * x for x in a.values()))
            nb = math.sqrt(sum(x * x for x in b.values()))
            sim = 0.0 if na == 0 or nb == 0 or dot == 0 else min(1.0, dot / (na * nb))
            if sim > best + tie_tol:
                best_id, best = cid, sim
        out[vid] = best_id if best_id is not None and best > tau_sim else None
    return out


def oracle_indicators(counts: Sequence[float], pos: Sequence[float], neg: Sequence[float],
                      w: int, r: tuple[float, float, float]) -> list[tuple[int, float, float, float, float] | None]:
    """Per-index (i, i_v, i_ps, i_ns, score) for consecutive segments, ``None`` before a full window."""
    out = []
    for i in range(len(counts)):
        if i < w:
            out.append(None)
            continue
        hv = hp = hn = 0.0
        for j in range(i - w, i):
            hv += counts[j]
            hp += pos[j]
            hn += -neg[j]
        if any(counts[j] == 0 for j in range(i - w, i)):
            out.append(None)
            continue
        iv = counts[i] * w / hv
        ip = pos[i] * w / hp
        ins = -neg[i] * w / hn
        out.append((i, iv, ip, ins, r[0] * iv + r[1] * ip + r[2] * ins))
    return out
