"""Layered map learning across batches and topic-pathway bookkeeping.

Each batch is one layer. Its vectors are routed to the latest cluster
representation vector (CRV) of every live pathway when the best intersection
cosine clears ``tau_sim``; every non-empty pool trains a map seeded from its
CRV, and the leftovers train one freshly randomised map. The generalised
CRVs of the layer then partition the batch's messages into topic segments.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .som import SomConfig, calibrate, generalize, init_random_map, init_seeded_map, train
from .vecspace import SparseVector, intersection_cosine_matrix, stack

__all__ = [
    "LayerConfig", "ClusterRepVector", "TopicSegment", "TopicPathway", "LineageEdge",
    "LayerResult", "PathwayRegistry", "route_batch", "learn_layer", "build_segments",
    "frequent_terms", "term_distribution",
]


@dataclass(frozen=True)
class LayerConfig:
    tau_sim: float = 0.4
    min_spawn_size: int = 1
    top_terms_n: int = 10
    retire_after: int = 4

    def __post_init__(self):
        if not 0 <= self.tau_sim <= 1:
            raise ValueError("tau_sim must be in [0, 1]")
        if self.min_spawn_size < 1:
            raise ValueError("min_spawn_size must be >= 1")
        if self.top_terms_n < 1:
            raise ValueError("top_terms_n must be >= 1")
        if self.retire_after < 1:
            raise ValueError("retire_after must be >= 1")


@dataclass
class ClusterRepVector:
    id: int
    layer: int
    weights: SparseVector
    pathway_id: int
    parent: int | None = None
    hits: int = 0

    @property
    def vocab(self):
        return self.weights.vocab


@dataclass
class TopicSegment:
    pathway_id: int
    batch_index: int
    crv_id: int
    message_ids: list[str] = field(default_factory=list)
    term_freqs: dict[str, int] = field(default_factory=dict)
    avg_pos_sent: float | None = None
    avg_neg_sent: float | None = None

    @property
    def count(self) -> int:
        return len(self.message_ids)


@dataclass
class TopicPathway:
    id: int
    spawn_batch: int
    parent_pathway: int | None = None
    segments: list[TopicSegment] = field(default_factory=list)
    crv_chain: list[int] = field(default_factory=list)
    last_crv_layer: int = -1

    def segment_at(self, batch_index: int) -> TopicSegment | None:
        for s in self.segments:
            if s.batch_index == batch_index:
                return s
        return None

    @property
    def message_count(self) -> int:
        return sum(s.count for s in self.segments)


@dataclass(frozen=True)
class LineageEdge:
    crv: int
    parent: int | None
    layer: int
    pathway_id: int


@dataclass
class LayerResult:
    crvs: list[ClusterRepVector]
    segments: list[TopicSegment]
    edges: list[LineageEdge]
    spawned: list[tuple[int, int | None]]  # (pathway id, branch parent pathway)
    routing: dict[int, list[str]]
    new_pool: list[str]


# similarities this close are treated as ties; they differ only by rounding
SIM_TIE_TOL = 1e-12


def _first_best(sims: np.ndarray) -> np.ndarray:
    """Per-row index of the first column within ``SIM_TIE_TOL`` of the row maximum."""
    top = sims.max(axis=1, keepdims=True)
    return np.argmax(sims >= top - SIM_TIE_TOL, axis=1)


def route_batch(vectors: Mapping[str, SparseVector], prev_crvs: Sequence[ClusterRepVector],
                cfg: LayerConfig) -> tuple[dict[int, list[str]], list[str]]:
    """Send each vector to its most similar CRV when that similarity exceeds ``tau_sim``.

    Argmax ties (within ``SIM_TIE_TOL``) go to the smallest CRV id. Returns the per-CRV pools (only
    non-empty ones) and the ids left for a new map, both in input order.
    """
    ids = list(vectors)
    if not ids:
        return {}, []
    if not prev_crvs:
        return {}, ids
    crvs = sorted(prev_crvs, key=lambda c: c.id)
    vocab = vectors[ids[0]].vocab
    sims = intersection_cosine_matrix(stack([vectors[i] for i in ids], vocab), vocab,
                                      [c.weights for c in crvs])
    best = _first_best(sims)
    pools: dict[int, list[str]] = {}
    new_pool = []
    for r, vid in enumerate(ids):
        k = best[r]
        if sims[r, k] > cfg.tau_sim:
            pools.setdefault(crvs[k].id, []).append(vid)
        else:
            new_pool.append(vid)
    return pools, new_pool


def build_segments(vectors: Mapping[str, SparseVector], layer_crvs: Sequence[ClusterRepVector],
                   batch_index: int) -> list[TopicSegment]:
    """Assign every vectorised message to its nearest CRV of this layer (no threshold)."""
    ids = list(vectors)
    if not ids or not layer_crvs:
        return []
    crvs = sorted(layer_crvs, key=lambda c: c.id)
    vocab = vectors[ids[0]].vocab
    sims = intersection_cosine_matrix(stack([vectors[i] for i in ids], vocab), vocab,
                                      [c.weights for c in crvs])
    best = _first_best(sims)
    by_crv: dict[int, TopicSegment] = {}
    freqs: dict[int, Counter] = {}
    for r, vid in enumerate(ids):
        crv = crvs[best[r]]
        seg = by_crv.get(crv.id)
        if seg is None:
            seg = by_crv[crv.id] = TopicSegment(crv.pathway_id, batch_index, crv.id)
            freqs[crv.id] = Counter()
        seg.message_ids.append(vid)
        freqs[crv.id].update(vectors[vid].to_mapping())
    for cid, seg in by_crv.items():
        seg.term_freqs = {t: int(c) for t, c in sorted(freqs[cid].items())}
    return [by_crv[c.id] for c in crvs if c.id in by_crv]


def _map_rng(seed: int, batch_index: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, batch_index, slot]))


def learn_layer(batch_index: int, vectors: Mapping[str, SparseVector],
                prev_crvs: Sequence[ClusterRepVector], som_cfg: SomConfig,
                layer_cfg: LayerConfig, next_crv_id: int, next_pathway_id: int) -> LayerResult:
    """Learn one layer and derive its CRVs, lineage and segments.

    CRV and pathway ids are allocated consecutively from ``next_crv_id`` and
    ``next_pathway_id``: seeded maps first (by parent CRV id), then the new
    random map.
    """
    pools, new_pool = route_batch(vectors, prev_crvs, layer_cfg)
    if not vectors:
        return LayerResult([], [], [], [], pools, new_pool)
    vocab = next(iter(vectors.values())).vocab
    by_id = {c.id: c for c in prev_crvs}

    crvs: list[ClusterRepVector] = []
    edges: list[LineageEdge] = []
    spawned: list[tuple[int, int | None]] = []
    cid, pid = next_crv_id, next_pathway_id

    jobs = [(by_id[k], pools[k]) for k in sorted(pools)]
    if len(new_pool) >= layer_cfg.min_spawn_size:
        jobs.append((None, new_pool))
    for parent, pool in jobs:
        sub = {v: vectors[v] for v in pool}
        if parent is None:
            active = np.unique(np.concatenate([v.indices for v in sub.values()]))
            rng = _map_rng(som_cfg.rng_seed, batch_index, 0)
            fmap = init_random_map(vocab, som_cfg, active_features=active, rng=rng)
        else:
            rng = _map_rng(som_cfg.rng_seed, batch_index, parent.id + 1)
            fmap = init_seeded_map(parent.weights, vocab, som_cfg)
        fmap = train(fmap, list(sub.values()), som_cfg, rng=rng)
        for rank, g in enumerate(generalize(fmap, calibrate(fmap, sub), som_cfg)):
            if parent is not None and rank == 0:
                pathway = parent.pathway_id
            else:
                pathway = pid
                pid += 1
                spawned.append((pathway, None if parent is None else parent.pathway_id))
            crv = ClusterRepVector(cid, batch_index, g.weights, pathway,
                                   None if parent is None else parent.id, g.hits)
            cid += 1
            crvs.append(crv)
            edges.append(LineageEdge(crv.id, crv.parent, batch_index, pathway))
    segments = build_segments(vectors, crvs, batch_index)
    return LayerResult(crvs, segments, edges, spawned, pools, new_pool)


class PathwayRegistry:
    """Live pathway state carried from one layer to the next."""

    def __init__(self, layer_cfg: LayerConfig | None = None):
        self.layer_cfg = layer_cfg or LayerConfig()
        self.pathways: dict[int, TopicPathway] = {}
        self.latest_crv: dict[int, ClusterRepVector] = {}
        self.edges: list[LineageEdge] = []
        self.next_crv_id = 0
        self.next_pathway_id = 0

    def routing_crvs(self, batch_index: int) -> list[ClusterRepVector]:
        """Latest CRV of each pathway not yet retired before ``batch_index``."""
        k = self.layer_cfg.retire_after
        out = [c for pid, c in self.latest_crv.items()
               if (batch_index - 1) - self.pathways[pid].last_crv_layer < k]
        return sorted(out, key=lambda c: c.id)

    def retire(self, batch_index: int) -> None:
        k = self.layer_cfg.retire_after
        for pid in [p for p in self.latest_crv if batch_index - self.pathways[p].last_crv_layer >= k]:
            del self.latest_crv[pid]

    def step(self, batch_index: int, vectors: Mapping[str, SparseVector],
             som_cfg: SomConfig) -> LayerResult:
        result = learn_layer(batch_index, vectors, self.routing_crvs(batch_index), som_cfg,
                             self.layer_cfg, self.next_crv_id, self.next_pathway_id)
        self.next_crv_id += len(result.crvs)
        self.next_pathway_id += len(result.spawned)
        for pid, parent in result.spawned:
            self.pathways[pid] = TopicPathway(pid, batch_index, parent)
        for crv in result.crvs:
            pw = self.pathways[crv.pathway_id]
            pw.crv_chain.append(crv.id)
            pw.last_crv_layer = batch_index
            self.latest_crv[crv.pathway_id] = crv
        for seg in result.segments:
            self.pathways[seg.pathway_id].segments.append(seg)
        self.edges.extend(result.edges)
        self.retire(batch_index)
        return result


def _aggregate(scope) -> Counter:
    if isinstance(scope, TopicPathway):
        total = Counter()
        for s in scope.segments:
            total.update(s.term_freqs)
        return total
    return Counter(scope.term_freqs)


def frequent_terms(scope, n: int) -> list[tuple[str, int]]:
    """Top-``n`` terms of a segment or pathway by count, ties broken alphabetically."""
    counts = _aggregate(scope)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]


def term_distribution(term: str, pathways: Iterable[TopicPathway]) -> dict[int, float]:
    """Share (%) of a term's occurrences falling in each pathway."""
    pathways = list(pathways)
    counts = {p.id: sum(s.term_freqs.get(term, 0) for s in p.segments) for p in pathways}
    total = sum(counts.values())
    if total == 0:
        return {pid: 0.0 for pid in counts}
    return {pid: 100.0 * c / total for pid, c in counts.items()}
