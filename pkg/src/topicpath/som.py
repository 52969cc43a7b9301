"""Growing self-organising feature map on a 2-D rectangular lattice.

Maps start either as a random 2x2 lattice or as a single node seeded from a
cluster representation vector. Training is competitive: the best matching
node and its 4-neighbours move toward each input, the winner accumulates
quantisation error, and once that error reaches the growth threshold the
winner spawns nodes on every free adjacent lattice position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .vecspace import SparseVector, Vocabulary, max_pool, project

__all__ = [
    "SomConfig", "Node", "FeatureMap", "CalibrationResult", "GeneralizedNode",
    "init_random_map", "init_seeded_map", "best_matching_node", "train",
    "train_step", "calibrate", "generalize", "growth_threshold", "GrowingSOM",
]

_OFFSETS = ((0, -1), (-1, 0), (1, 0), (0, 1))  # already in (y, x) order


@dataclass(frozen=True)
class SomConfig:
    learning_rate: float = 0.3
    lr_decay: float = 0.9
    spread_factor: float = 0.1
    growth_threshold: float | None = None
    epochs: int = 5
    min_crv_hits: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.learning_rate < 1:
            raise ValueError("learning_rate must be in (0, 1)")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must be in (0, 1]")
        if not 0 < self.spread_factor < 1:
            raise ValueError("spread_factor must be in (0, 1)")
        if self.growth_threshold is not None and self.growth_threshold < 0:
            raise ValueError("growth_threshold must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.min_crv_hits < 1:
            raise ValueError("min_crv_hits must be >= 1")


@dataclass(frozen=True)
class Node:
    id: int
    pos: tuple[int, int]
    weights: SparseVector
    total_error: float


class FeatureMap:
    """Lattice of weight vectors over one vocabulary.

    Node ids are insertion indices; ``weights[i]`` is the dense weight row of
    node ``i`` and ``errors[i]`` its accumulated quantisation error.
    """

    def __init__(self, vocab: Vocabulary, positions, weights, origin: str = "random",
                 empty_seed: bool = False):
        self.vocab = vocab
        self.positions: list[tuple[int, int]] = [tuple(p) for p in positions]
        self.weights = np.array(weights, dtype=np.float64).reshape(len(self.positions), len(vocab))
        self.errors = np.zeros(len(self.positions), dtype=np.float64)
        self.origin = origin
        self.empty_seed = empty_seed
        self._reindex()

    def _reindex(self):
        if len(set(self.positions)) != len(self.positions):
            raise ValueError("lattice positions must be unique")
        self._index = {p: i for i, p in enumerate(self.positions)}
        ys = np.array([p[1] for p in self.positions])
        xs = np.array([p[0] for p in self.positions])
        self._order = np.lexsort((xs, ys)) if self.positions else np.zeros(0, np.int64)

    def __len__(self) -> int:
        return len(self.positions)

    def copy(self) -> "FeatureMap":
        out = FeatureMap.__new__(FeatureMap)
        out.vocab = self.vocab
        out.positions = list(self.positions)
        out.weights = self.weights.copy()
        out.errors = self.errors.copy()
        out.origin = self.origin
        out.empty_seed = self.empty_seed
        out._index = dict(self._index)
        out._order = self._order.copy()
        return out

    @property
    def nodes(self) -> list[Node]:
        return [
            Node(i, p, SparseVector.from_dense(self.vocab, self.weights[i]), float(self.errors[i]))
            for i, p in enumerate(self.positions)
        ]

    def node_at(self, pos) -> int | None:
        return self._index.get(tuple(pos))

    def neighbours(self, node: int) -> list[int]:
        """Existing 4-neighbours of ``node`` in (y, x) order."""
        x, y = self.positions[node]
        out = []
        for dy, dx in _OFFSETS:
            j = self._index.get((x + dx, y + dy))
            if j is not None:
                out.append(j)
        return out

    def free_positions(self, node: int) -> list[tuple[int, int]]:
        x, y = self.positions[node]
        return [(x + dx, y + dy) for dy, dx in _OFFSETS if (x + dx, y + dy) not in self._index]

    def sq_distances(self, x: np.ndarray) -> np.ndarray:
        diff = self.weights - x
        return np.einsum("ij,ij->i", diff, diff)

    def bmu(self, x: np.ndarray) -> tuple[int, float]:
        """Index and squared distance of the nearest node; ties go to the smallest (y, x)."""
        d2 = self.sq_distances(x)[self._order]
        k = int(np.argmin(d2))
        return int(self._order[k]), float(d2[k])

    def grow(self, node: int) -> list[int]:
        """Attach nodes at every free position next to ``node``; returns new ids."""
        free = self.free_positions(node)
        if not free:
            return []
        new_rows = []
        for fx, fy in free:
            nb = [self._index[(fx + dx, fy + dy)] for dy, dx in _OFFSETS
                  if (fx + dx, fy + dy) in self._index]
            new_rows.append(self.weights[nb].mean(axis=0))
        start = len(self.positions)
        self.positions.extend(free)
        self.weights = np.vstack([self.weights, np.asarray(new_rows)])
        self.errors = np.concatenate([self.errors, np.zeros(len(free))])
        self._reindex()
        return list(range(start, start + len(free)))


@dataclass
class CalibrationResult:
    assignments: dict[int, list[str]] = field(default_factory=dict)

    @property
    def hit_nodes(self) -> list[int]:
        return sorted(n for n, ids in self.assignments.items() if ids)

    def node_of(self) -> dict[str, int]:
        return {vid: n for n, ids in self.assignments.items() for vid in ids}


@dataclass(frozen=True)
class GeneralizedNode:
    """A raw cluster representation: pooled weights of one hit node's neighbourhood."""

    node: int
    pos: tuple[int, int]
    hits: int
    weights: SparseVector


def _as_dense(v, vocab: Vocabulary) -> np.ndarray:
    if isinstance(v, SparseVector):
        if v.vocab != vocab:
            raise ValueError("vector vocabulary differs from the map vocabulary")
        return v.to_dense()
    x = np.asarray(v, dtype=np.float64)
    if x.shape != (len(vocab),):
        raise ValueError(f"expected a vector of length {len(vocab)}")
    return x


def growth_threshold(vectors: Sequence[SparseVector], cfg: SomConfig) -> float:
    """``-ln(SF) * d_eff`` with ``d_eff`` the median non-zero count of the vectors."""
    if cfg.growth_threshold is not None:
        return float(cfg.growth_threshold)
    nnz = [v.nnz if isinstance(v, SparseVector) else int(np.count_nonzero(v)) for v in vectors]
    d_eff = float(np.median(nnz)) if nnz else 1.0
    return -math.log(cfg.spread_factor) * max(d_eff, 1.0)


def init_random_map(vocab: Vocabulary, cfg: SomConfig, active_features=None,
                    rng: np.random.Generator | None = None) -> FeatureMap:
    """Four nodes at (0,0),(1,0),(0,1),(1,1) with uniform [0, 1) weights.

    When ``active_features`` is given only those feature ids receive random
    weights; all others start at zero.
    """
    d = len(vocab)
    if d == 0:
        raise ValueError("empty vocabulary")
    rng = np.random.default_rng(cfg.rng_seed) if rng is None else rng
    cols = np.arange(d) if active_features is None else np.unique(np.asarray(active_features, np.int64))
    weights = np.zeros((4, d))
    weights[:, cols] = rng.random((4, cols.size))
    return FeatureMap(vocab, [(0, 0), (1, 0), (0, 1), (1, 1)], weights, origin="random")


def init_seeded_map(crv: SparseVector, batch_vocab: Vocabulary, cfg: SomConfig,
                    origin: str = "seeded") -> FeatureMap:
    """Single start node carrying ``crv`` translated into ``batch_vocab``.

    Terms the vocabularies do not share are dropped; ``empty_seed`` flags a
    start node that ended up all-zero.
    """
    w = project(crv, batch_vocab)
    return FeatureMap(batch_vocab, [(0, 0)], w[None, :], origin=origin, empty_seed=not w.any())


def best_matching_node(fmap: FeatureMap, v) -> int:
    if len(fmap) == 0:
        raise ValueError("empty map")
    return fmap.bmu(_as_dense(v, fmap.vocab))[0]


@dataclass(frozen=True)
class StepInfo:
    bmu: int
    distance: float
    error_before_growth: float
    grown: tuple[int, ...]


def train_step(fmap: FeatureMap, x: np.ndarray, lr: float, gt: float) -> StepInfo:
    """Present one dense input to ``fmap`` in place."""
    q, d2 = fmap.bmu(x)
    dist = math.sqrt(d2)
    fmap.errors[q] += dist
    hood = [q] + fmap.neighbours(q)
    fmap.weights[hood] += lr * (x - fmap.weights[hood])
    te = float(fmap.errors[q])
    grown: list[int] = []
    if te >= gt:
        grown = fmap.grow(q)
        fmap.errors[q] = 0.0
    return StepInfo(q, dist, te, tuple(grown))


def train(fmap: FeatureMap, vectors: Sequence, cfg: SomConfig,
          rng: np.random.Generator | None = None) -> FeatureMap:
    """Return a trained copy of ``fmap``.

    Each of ``cfg.epochs`` epochs presents the vectors in a shuffled order;
    the learning rate is multiplied by ``lr_decay`` after every epoch.
    """
    fmap = fmap.copy()
    vectors = list(vectors)
    if not vectors:
        return fmap
    X = np.vstack([_as_dense(v, fmap.vocab) for v in vectors])
    gt = growth_threshold(vectors, cfg)
    rng = np.random.default_rng(cfg.rng_seed) if rng is None else rng
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        for r in rng.permutation(len(X)):
            train_step(fmap, X[r], lr, gt)
        lr *= cfg.lr_decay
    return fmap


def calibrate(fmap: FeatureMap, vectors: Mapping[str, SparseVector]) -> CalibrationResult:
    out: dict[int, list[str]] = {}
    for vid, v in vectors.items():
        out.setdefault(best_matching_node(fmap, v), []).append(vid)
    return CalibrationResult(out)


def generalize(fmap: FeatureMap, calib: CalibrationResult, cfg: SomConfig) -> list[GeneralizedNode]:
    """Max-pool each sufficiently hit node with its 4-neighbours.

    Nodes with fewer than ``min_crv_hits`` assignments are skipped; if none
    qualifies, the most-hit node is used anyway. Output is ordered by
    descending hits, then (y, x).
    """
    hits = {n: len(ids) for n, ids in calib.assignments.items() if ids}
    if not hits:
        return []

    def key(n):
        x, y = fmap.positions[n]
        return (-hits[n], y, x)

    ranked = sorted(hits, key=key)
    chosen = [n for n in ranked if hits[n] >= cfg.min_crv_hits] or ranked[:1]
    out = []
    for n in chosen:
        hood = [SparseVector.from_dense(fmap.vocab, fmap.weights[j]) for j in [n] + fmap.neighbours(n)]
        out.append(GeneralizedNode(n, fmap.positions[n], hits[n], max_pool(hood)))
    return out


class GrowingSOM(ClusterMixin, TransformerMixin, BaseEstimator):
    """Estimator wrapper around a randomly initialised growing map.

    ``fit`` grows and trains the map on dense or sparse rows; ``predict``
    returns best-matching node ids; ``transform`` returns distances to every
    node. ``cluster_vectors_`` holds the pooled hit-node representations.
    """

    def __init__(self, learning_rate=0.3, lr_decay=0.9, spread_factor=0.1,
                 growth_threshold=None, epochs=5, min_crv_hits=3, random_state=0):
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.spread_factor = spread_factor
        self.growth_threshold = growth_threshold
        self.epochs = epochs
        self.min_crv_hits = min_crv_hits
        self.random_state = random_state

    def _config(self) -> SomConfig:
        return SomConfig(self.learning_rate, self.lr_decay, self.spread_factor,
                         self.growth_threshold, self.epochs, self.min_crv_hits,
                         int(self.random_state or 0))

    def fit(self, X, y=None):
        X = check_array(X, accept_sparse="csr", dtype=np.float64, ensure_min_features=1)
        if X.min() < 0:
            raise ValueError("GrowingSOM expects non-negative features")
        dense = X.toarray() if hasattr(X, "toarray") else X
        self.n_features_in_ = dense.shape[1]
        width = len(str(self.n_features_in_ - 1))
        vocab = Vocabulary(0, tuple(f"x{i:0{width}d}" for i in range(self.n_features_in_)))
        cfg = self._config()
        rng = np.random.default_rng(cfg.rng_seed)
        rows = [SparseVector.from_dense(vocab, r) for r in dense]
        self.map_ = train(init_random_map(vocab, cfg, rng=rng), rows, cfg, rng=rng)
        calib = calibrate(self.map_, {str(i): r for i, r in enumerate(rows)})
        self.labels_ = np.array([calib.node_of()[str(i)] for i in range(len(rows))], dtype=np.int64)
        self.cluster_vectors_ = [g.weights.to_dense() for g in generalize(self.map_, calib, cfg)]
        return self

    def _check(self, X):
        check_is_fitted(self, "map_")
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X.toarray() if hasattr(X, "toarray") else X

    def predict(self, X):
        return np.array([self.map_.bmu(r)[0] for r in self._check(X)], dtype=np.int64)

    def transform(self, X):
        return np.sqrt(np.vstack([self.map_.sq_distances(r) for r in self._check(X)]))
