"""Sparse term vectors over per-batch vocabularies.

Every batch owns its own :class:`Vocabulary`; vectors from different batches
are only ever compared through :func:`intersection_cosine`, which restricts the
dot product and both norms to the terms the two vocabularies share.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """Bijection between term strings and dense feature ids ``0..d-1``.

    Ids follow lexicographic term order, so identical term sets always yield
    identical ids.
    """

    batch_index: int
    terms: tuple[str, ...]
    _ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        if list(terms) != sorted(set(terms)):
            raise ValueError("vocabulary terms must be unique and sorted")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_ids", {t: i for i, t in enumerate(terms)})

    @classmethod
    def from_terms(cls, terms: Iterable[str], batch_index: int = 0) -> "Vocabulary":
        return cls(batch_index, tuple(sorted(set(terms))))

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self._ids

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self.batch_index == other.batch_index and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.batch_index, self.terms))

    def id_of(self, term: str) -> int:
        return self._ids[term]

    def get(self, term: str, default: int | None = None) -> int | None:
        return self._ids.get(term, default)

    def shared_mask(self, other: "Vocabulary") -> np.ndarray:
        """Boolean mask over this vocabulary marking terms also in ``other``."""
        if other is self:
            return np.ones(len(self), dtype=bool)
        return np.fromiter((t in other for t in self.terms), dtype=bool, count=len(self))


class SparseVector:
    """Non-negative sparse vector bound to one vocabulary.

    Stored as strictly increasing feature ids with strictly positive weights.
    """

    __slots__ = ("vocab", "indices", "values")

    def __init__(self, vocab: Vocabulary, indices, values):
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.float64)
        if idx.ndim != 1 or idx.shape != val.shape:
            raise ValueError("indices and values must be 1-D and of equal length")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("feature ids must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= len(vocab):
                raise ValueError("feature id outside vocabulary")
            if not np.all(np.isfinite(val)):
                raise ValueError("weights must be finite")
            if np.any(val < 0):
                raise ValueError("weights must be non-negative")
            keep = val > 0
            if not keep.all():
                idx, val = idx[keep], val[keep]
        self.vocab = vocab
        self.indices = idx
        self.values = val

    @classmethod
    def from_dense(cls, vocab: Vocabulary, dense) -> "SparseVector":
        dense = np.asarray(dense, dtype=np.float64)
        if dense.shape != (len(vocab),):
            raise ValueError(f"expected dense vector of length {len(vocab)}, got {dense.shape}")
        nz = np.flatnonzero(dense)
        return cls(vocab, nz, dense[nz])

    @classmethod
    def from_mapping(cls, vocab: Vocabulary, weights: Mapping[str, float]) -> "SparseVector":
        """Build from a term->weight mapping; terms outside ``vocab`` are dropped."""
        pairs = sorted((vocab.id_of(t), float(w)) for t, w in weights.items() if t in vocab and w != 0)
        if not pairs:
            return cls(vocab, [], [])
        idx, val = zip(*pairs)
        return cls(vocab, idx, val)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(len(self.vocab), dtype=np.float64)
        out[self.indices] = self.values
        return out

    def to_mapping(self) -> dict[str, float]:
        terms = self.vocab.terms
        return {terms[i]: float(v) for i, v in zip(self.indices, self.values)}

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def __len__(self) -> int:
        return len(self.vocab)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.vocab == other.vocab
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        body = ", ".join(f"{t}:{w:g}" for t, w in list(self.to_mapping().items())[:8])
        more = ", ..." if self.nnz > 8 else ""
        return f"SparseVector({{{body}{more}}}, d={len(self.vocab)})"

    def scale(self, c: float) -> "SparseVector":
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return SparseVector(self.vocab, self.indices, self.values * c)


def intersection_cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity restricted to the terms shared by both vocabularies.

    The dot product and *both* norms only see terms in ``V_a & V_b``. Returns
    0.0 when the intersection is empty or either restricted norm vanishes.
    """
    if a.vocab is b.vocab or a.vocab == b.vocab:
        common, ia, ib = np.intersect1d(a.indices, b.indices, assume_unique=True, return_indices=True)
        dot = float(np.dot(a.values[ia], b.values[ib])) if common.size else 0.0
        na = float(np.sqrt(np.dot(a.values, a.values)))
        nb = float(np.sqrt(np.dot(b.values, b.values)))
    else:
        a_terms, b_terms = a.vocab.terms, b.vocab.terms
        a_w = {a_terms[i]: w for i, w in zip(a.indices, a.values) if a_terms[i] in b.vocab}
        b_w = {b_terms[i]: w for i, w in zip(b.indices, b.values) if b_terms[i] in a.vocab}
        dot = sum(w * b_w[t] for t, w in a_w.items() if t in b_w)
        na = float(np.sqrt(sum(w * w for w in a_w.values())))
        nb = float(np.sqrt(sum(w * w for w in b_w.values())))
    if na == 0.0 or nb == 0.0 or dot == 0.0:
        return 0.0
    return min(1.0, dot / (na * nb))


def max_pool(vectors: Sequence[SparseVector]) -> SparseVector:
    """Elementwise maximum of vectors sharing one vocabulary."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("empty pool")
    vocab = vectors[0].vocab
    if any(v.vocab != vocab for v in vectors[1:]):
        raise ValueError("max_pool requires a shared vocabulary")
    if len(vectors) == 1:
        return vectors[0]
    out = np.zeros(len(vocab), dtype=np.float64)
    for v in vectors:
        np.maximum.at(out, v.indices, v.values)
    return SparseVector.from_dense(vocab, out)


def stack(vectors: Sequence[SparseVector], vocab: Vocabulary) -> sp.csr_matrix:
    """Row-stack vectors over ``vocab`` into a CSR matrix."""
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for r, v in enumerate(vectors):
        indptr[r + 1] = indptr[r] + v.nnz
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), len(vocab)))


def project(vec: SparseVector, vocab: Vocabulary) -> np.ndarray:
    """Dense copy of ``vec`` translated into ``vocab`` by term string."""
    out = np.zeros(len(vocab), dtype=np.float64)
    terms = vec.vocab.terms
    for i, w in zip(vec.indices, vec.values):
        j = vocab.get(terms[i])
        if j is not None:
            out[j] = w
    return out


def intersection_cosine_matrix(X: sp.csr_matrix, vocab: Vocabulary,
                               refs: Sequence[SparseVector]) -> np.ndarray:
    """Similarities of every row of ``X`` (over ``vocab``) to every reference vector.

    Vectorised counterpart of :func:`intersection_cosine`; returns an
    ``(n_rows, len(refs))`` array.
    """
    n = X.shape[0]
    out = np.zeros((n, len(refs)), dtype=np.float64)
    if n == 0 or not refs:
        return out
    sq = X.multiply(X).tocsr()
    for k, ref in enumerate(refs):
        c = project(ref, vocab)
        c_norm = float(np.sqrt(np.dot(c, c)))
        if c_norm == 0.0:
            continue
        mask = vocab.shared_mask(ref.vocab).astype(np.float64)
        dots = X @ c
        x_norm = np.sqrt(sq @ mask)
        with np.errstate(divide="ignore", invalid="ignore"):
            sims = np.where((x_norm > 0) & (dots > 0), dots / (x_norm * c_norm), 0.0)
        out[:, k] = np.minimum(sims, 1.0)
    return out
