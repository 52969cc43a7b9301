"""Stream ingestion: time batching, tokenisation and per-batch term-frequency features."""
from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Sequence

from sklearn.feature_extraction.text import ENGLISH_STOP_WORDS

from .vecspace import SparseVector, Vocabulary

__all__ = [
    "Microblog", "BatchConfig", "Batch", "TokenizedMessage", "Vocabulary",
    "segment_stream", "preprocess", "extract_features", "tokenize",
    "read_jsonl", "parse_timestamp", "load_stopwords", "default_stopwords",
]

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[#@]?\w+(?:['’]\w+)*", re.UNICODE)
_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class Microblog:
    id: str
    timestamp: float
    text: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("message id must be non-empty")
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise ValueError(f"invalid timestamp for message {self.id!r}: {self.timestamp}")


def load_stopwords(path) -> frozenset[str]:
    """Read a stopword file: one term per line, ``#`` lines are comments."""
    terms = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                terms.add(line.lower())
    return frozenset(terms)


def default_stopwords() -> frozenset[str]:
    return frozenset(ENGLISH_STOP_WORDS)


@dataclass(frozen=True)
class BatchConfig:
    delta_t: float = 7 * 24 * 3600.0
    min_doc_freq: int = 3
    ngram_max: int = 2
    stopwords: frozenset = field(default_factory=default_stopwords)

    def __post_init__(self):
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if self.min_doc_freq < 1:
            raise ValueError("min_doc_freq must be >= 1")
        if self.ngram_max < 1:
            raise ValueError("ngram_max must be >= 1")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))


@dataclass
class Batch:
    index: int
    start: float
    end: float
    messages: list[Microblog] = field(default_factory=list)

    def __len__(self):
        return len(self.messages)


@dataclass(frozen=True)
class TokenizedMessage:
    id: str
    tokens: tuple[str, ...]


def parse_timestamp(value) -> float:
    """Epoch seconds from an integer/float or an RFC-3339 string."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValueError(f"unsupported timestamp {value!r}")


def read_jsonl(path, stats: dict | None = None) -> Iterator[Microblog]:
    """Yield messages from line-delimited JSON, skipping malformed lines.

    ``stats["skipped"]`` counts the rejected lines when a dict is passed.
    """
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                msg = Microblog(str(obj["id"]), parse_timestamp(obj["timestamp"]), str(obj["text"]))
            except (ValueError, KeyError, TypeError) as exc:
                skipped += 1
                logger.warning("%s:%d: skipping malformed line (%s)", path, lineno, exc)
                continue
            yield msg
    if stats is not None:
        stats["skipped"] = stats.get("skipped", 0) + skipped


def segment_stream(messages: Iterable[Microblog], cfg: BatchConfig,
                   origin: float | None = None) -> list[Batch]:
    """Split messages into half-open ``[i*dt, (i+1)*dt)`` windows.

    Windows are anchored at ``origin`` (default: the earliest timestamp).
    Empty windows between populated ones are kept so indices stay contiguous.
    Messages before ``origin`` are dropped.
    """
    msgs = sorted(messages, key=lambda m: (m.timestamp, m.id))
    if not msgs:
        return []
    t0 = msgs[0].timestamp if origin is None else origin
    buckets: dict[int, list[Microblog]] = {}
    for m in msgs:
        if m.timestamp < t0:
            continue
        i = int(math.floor((m.timestamp - t0) / cfg.delta_t))
        buckets.setdefault(i, []).append(m)
    if not buckets:
        return []
    return [
        Batch(i, t0 + i * cfg.delta_t, t0 + (i + 1) * cfg.delta_t, buckets.get(i, []))
        for i in range(max(buckets) + 1)
    ]


def tokenize(text: str, stopwords: frozenset | set = frozenset()) -> tuple[str, ...]:
    """Lowercased word tokens without handles, URLs or stopwords; hashtags keep ``#``."""
    text = _URL_RE.sub(" ", text.lower())
    out = []
    for tok in _TOKEN_RE.findall(text):
        if tok.startswith("@"):
            continue
        if tok in stopwords:
            continue
        out.append(tok)
    return tuple(out)


def _normalized(text: str) -> str:
    return _WS_RE.sub(" ", text.lower()).strip()


def preprocess(batch: Batch, cfg: BatchConfig) -> list[TokenizedMessage]:
    """Tokenise a batch, dropping in-batch exact duplicates (after lowercasing)."""
    seen = set()
    out = []
    for m in batch.messages:
        key = _normalized(m.text)
        if key in seen:
            continue
        seen.add(key)
        out.append(TokenizedMessage(m.id, tokenize(m.text, cfg.stopwords)))
    return out


def ngrams(tokens: Sequence[str], n_max: int) -> list[str]:
    terms = list(tokens)
    for n in range(2, n_max + 1):
        terms.extend(" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return terms


def extract_features(tokenized: Sequence[TokenizedMessage], cfg: BatchConfig,
                     batch_index: int = 0) -> tuple[Vocabulary, dict[str, SparseVector]]:
    """Raw term-frequency vectors over the batch's thresholded vocabulary.

    Messages left with no in-vocabulary term are omitted from the returned
    mapping.
    """
    counts = [Counter(ngrams(t.tokens, cfg.ngram_max)) for t in tokenized]
    df = Counter()
    for c in counts:
        df.update(c.keys())
    vocab = Vocabulary.from_terms((t for t, f in df.items() if f >= cfg.min_doc_freq), batch_index)
    vectors: dict[str, SparseVector] = {}
    for msg, c in zip(tokenized, counts):
        vec = SparseVector.from_mapping(vocab, c)
        if vec.nnz:
            vectors[msg.id] = vec
    return vocab, vectors
