"""Estimator front-end for incremental topic-pathway learning and event detection."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from os import PathLike
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import (BatchConfig, Microblog, default_stopwords, extract_features,
                     load_stopwords, parse_timestamp, preprocess, segment_stream, tokenize)
from .events import Event, EventConfig, detect_events
from .pathways import LayerConfig, LayerResult, PathwayRegistry, TopicPathway, _first_best
from .sentiment import Lexicon, default_lexicon, load_lexicon, score_message, segment_sentiment
from .som import SomConfig
from .vecspace import SparseVector, Vocabulary, intersection_cosine

__all__ = ["TopicPathwayDetector", "BatchInfo", "check_messages"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BatchInfo:
    index: int
    start: float
    count: int       # messages left after duplicate removal
    vectorized: int  # messages with a non-empty feature vector


def check_messages(X) -> list[Microblog]:
    """Coerce an iterable of Microblog objects or ``{id, timestamp, text}`` dicts."""
    out = []
    for item in X:
        if isinstance(item, Microblog):
            out.append(item)
        elif isinstance(item, dict):
            try:
                out.append(Microblog(str(item["id"]), parse_timestamp(item["timestamp"]), str(item["text"])))
            except KeyError as exc:
                raise ValueError(f"message is missing field {exc}") from None
        else:
            raise TypeError(f"expected Microblog or dict, got {type(item).__name__}")
    ids = [m.id for m in out]
    if len(set(ids)) != len(ids):
        dup = next(i for i, c in Counter(ids).items() if c > 1)
        raise ValueError(f"duplicate message id {dup!r}")
    return out


class TopicPathwayDetector(BaseEstimator):
    """Separates a timestamped message stream into topic pathways and scores events.

    ``fit`` consumes a whole stream; ``partial_fit`` continues from the last
    processed batch, which is how the stream is consumed incrementally.
    Messages falling in an already processed window are ignored.

    Fitted attributes: ``pathways_``, ``batches_``, ``events_``,
    ``origin_`` (stream start, epoch seconds) and ``last_batch_``.
    """

    def __init__(self, delta_t=7 * 24 * 3600.0, min_doc_freq=3, ngram_max=2, stopwords=None,
                 learning_rate=0.3, lr_decay=0.9, spread_factor=0.1, growth_threshold=None,
                 epochs=5, min_crv_hits=3, tau_sim=0.4, min_spawn_size=1, top_terms_n=10,
                 retire_after=4, w=2, r_v=0.1, r_ps=0.45, r_ns=0.45, tau_e=1.0,
                 min_batch_fraction=0.01, novel_terms_n=10, exclusion_n=20, lexicon=None,
                 random_state=0):
        self.delta_t = delta_t
        self.min_doc_freq = min_doc_freq
        self.ngram_max = ngram_max
        self.stopwords = stopwords
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.spread_factor = spread_factor
        self.growth_threshold = growth_threshold
        self.epochs = epochs
        self.min_crv_hits = min_crv_hits
        self.tau_sim = tau_sim
        self.min_spawn_size = min_spawn_size
        self.top_terms_n = top_terms_n
        self.retire_after = retire_after
        self.w = w
        self.r_v = r_v
        self.r_ps = r_ps
        self.r_ns = r_ns
        self.tau_e = tau_e
        self.min_batch_fraction = min_batch_fraction
        self.novel_terms_n = novel_terms_n
        self.exclusion_n = exclusion_n
        self.lexicon = lexicon
        self.random_state = random_state

    # -- configuration ---------------------------------------------------------

    def _resolve_stopwords(self) -> frozenset:
        if self.stopwords is None:
            return default_stopwords()
        if isinstance(self.stopwords, (str, PathLike)):
            return load_stopwords(self.stopwords)
        return frozenset(self.stopwords)

    def _resolve_lexicon(self) -> Lexicon:
        if self.lexicon is None:
            return default_lexicon()
        if isinstance(self.lexicon, Lexicon):
            return self.lexicon
        return load_lexicon(self.lexicon)

    def _build_configs(self):
        self.batch_config_ = BatchConfig(float(self.delta_t), int(self.min_doc_freq),
                                         int(self.ngram_max), self._resolve_stopwords())
        self.som_config_ = SomConfig(self.learning_rate, self.lr_decay, self.spread_factor,
                                     self.growth_threshold, int(self.epochs), int(self.min_crv_hits),
                                     int(self.random_state or 0))
        self.layer_config_ = LayerConfig(self.tau_sim, int(self.min_spawn_size),
                                         int(self.top_terms_n), int(self.retire_after))
        self.event_config_ = EventConfig(int(self.w), self.r_v, self.r_ps, self.r_ns, self.tau_e,
                                         self.min_batch_fraction, int(self.novel_terms_n),
                                         int(self.exclusion_n))
        self.lexicon_ = self._resolve_lexicon()

    def _reset(self):
        self._build_configs()
        self.registry_ = PathwayRegistry(self.layer_config_)
        self.origin_ = None
        self.last_batch_ = -1
        self.batches_: list[BatchInfo] = []
        self.doc_terms_: dict[str, list[str]] = {}
        self.term_counts_: Counter = Counter()

    # -- learning ----------------------------------------------------------------

    def fit(self, X, y=None):
        self._reset()
        return self.partial_fit(X)

    def partial_fit(self, X, y=None, stop_after: int | None = None):
        """Process every batch after ``last_batch_`` found in ``X``.

        With ``stop_after`` only batches up to that index are processed.
        """
        if not hasattr(self, "registry_"):
            self._reset()
        messages = check_messages(X)
        if not messages:
            return self
        if self.origin_ is None:
            self.origin_ = min(m.timestamp for m in messages)
        batches = segment_stream(messages, self.batch_config_, origin=self.origin_)
        stale = sum(len(b) for b in batches if b.index <= self.last_batch_)
        if stale:
            logger.info("skipping %d message(s) in already processed batches", stale)
        for batch in batches:
            if batch.index <= self.last_batch_:
                continue
            if stop_after is not None and batch.index > stop_after:
                break
            self._learn_batch(batch)
        return self

    def _learn_batch(self, batch) -> LayerResult:
        tokenized = preprocess(batch, self.batch_config_)
        vocab, vectors = extract_features(tokenized, self.batch_config_, batch.index)
        result = self.registry_.step(batch.index, vectors, self.som_config_)
        texts = {m.id: m.text for m in batch.messages}
        for seg in result.segments:
            avg_pos, avg_neg = segment_sentiment([score_message(texts[i], self.lexicon_)
                                                  for i in seg.message_ids])
            seg.avg_pos_sent, seg.avg_neg_sent = avg_pos, avg_neg
        for vid, vec in vectors.items():
            terms = vec.to_mapping()
            self.doc_terms_[vid] = sorted(terms)
            self.term_counts_.update({t: int(c) for t, c in terms.items()})
        self.batches_.append(BatchInfo(batch.index, batch.start, len(tokenized), len(vectors)))
        self.last_batch_ = batch.index
        logger.info("batch %d: %d messages, %d vectors, %d CRVs, %d new pathways",
                    batch.index, len(tokenized), len(vectors), len(result.crvs), len(result.spawned))
        return result

    # -- results -----------------------------------------------------------------

    @property
    def pathways_(self) -> dict[int, TopicPathway]:
        check_is_fitted(self, "registry_")
        return self.registry_.pathways

    @property
    def events_(self) -> list[Event]:
        check_is_fitted(self, "registry_")
        sizes = {b.index: b.count for b in self.batches_}
        return detect_events(self.pathways_.values(), sizes, self.event_config_)

    def batch_start(self, index: int) -> float:
        return self.origin_ + index * self.batch_config_.delta_t

    def predict(self, X) -> np.ndarray:
        """Pathway id whose latest CRV best matches each text, or -1 below ``tau_sim``.

        ``X`` holds raw strings or messages; each text is compared in its own
        term space through the intersection cosine.
        """
        check_is_fitted(self, "registry_")
        crvs = self.registry_.routing_crvs(self.last_batch_ + 1)
        out = np.full(len(X), -1, dtype=np.int64)
        for r, item in enumerate(X):
            text = item.text if isinstance(item, Microblog) else str(item)
            tf = Counter(tokenize(text, self.batch_config_.stopwords))
            if not tf or not crvs:
                continue
            vec = SparseVector.from_mapping(Vocabulary.from_terms(tf), tf)
            sims = [intersection_cosine(c.weights, vec) for c in crvs]
            k = int(_first_best(np.array([sims]))[0])
            if sims[k] > self.layer_config_.tau_sim:
                out[r] = crvs[k].pathway_id
        return out
