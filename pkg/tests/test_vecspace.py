import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topicpath.vecspace import (SparseVector, Vocabulary, intersection_cosine,
                                intersection_cosine_matrix, max_pool, project, stack)


def vec(weights, vocab_terms=None, batch=0):
    vocab = Vocabulary.from_terms(vocab_terms or weights, batch)
    return SparseVector.from_mapping(vocab, weights)


def test_vocabulary_ids_follow_sorted_terms():
    v = Vocabulary.from_terms(["war", "putin", "war", "russia"])
    assert v.terms == ("putin", "russia", "war")
    assert v.id_of("war") == 2
    assert "russia" in v and "kremlin" not in v


def test_vocabulary_rejects_unsorted_terms():
    with pytest.raises(ValueError):
        Vocabulary(0, ("b", "a"))


def test_sparse_vector_rejects_negative_weights():
    vocab = Vocabulary.from_terms(["a", "b"])
    with pytest.raises(ValueError):
        SparseVector.from_dense(vocab, [0.5, -0.1])


def test_from_mapping_drops_unknown_terms():
    vocab = Vocabulary.from_terms(["a", "b"])
    v = SparseVector.from_mapping(vocab, {"a": 2, "zzz": 5})
    assert v.to_mapping() == {"a": 2.0}


def test_identical_shared_content_scores_one():
    a = vec({"putin": 3, "russia": 1}, ["putin", "russia", "tank"], batch=0)
    b = vec({"putin": 3, "russia": 1, "kremlin": 4}, ["kremlin", "putin", "russia"], batch=1)
    # 'kremlin' and 'tank' are outside the shared vocabulary
    assert intersection_cosine(a, b) == pytest.approx(1.0)


def test_restricted_norm_hand_value():
    # shared terms {x, y}; a -> (1, 2), b -> (2, 1); cos = 4 / 5
    a = vec({"x": 1, "y": 2, "only_a": 7})
    b = vec({"x": 2, "y": 1, "only_b": 9})
    assert intersection_cosine(a, b) == pytest.approx(0.8, abs=1e-12)


def test_disjoint_vocabularies_score_zero():
    assert intersection_cosine(vec({"a": 1}), vec({"b": 1})) == 0.0


def test_zero_restricted_norm_scores_zero():
    a = vec({"a": 1}, ["a", "b"])
    b = vec({"c": 1}, ["b", "c"])
    assert intersection_cosine(a, b) == 0.0


def test_max_pool_elementwise():
    vocab = Vocabulary.from_terms(["a", "b", "c"])
    p = max_pool([SparseVector.from_dense(vocab, [0.2, 0, 0.5]),
                  SparseVector.from_dense(vocab, [0.1, 0.9, 0])])
    np.testing.assert_allclose(p.to_dense(), [0.2, 0.9, 0.5])


def test_max_pool_errors():
    with pytest.raises(ValueError, match="empty pool"):
        max_pool([])
    with pytest.raises(ValueError):
        max_pool([vec({"a": 1}), vec({"b": 1})])


def test_project_translates_by_term():
    v = vec({"putin": 0.9, "russia": 0.7, "gone": 0.3})
    target = Vocabulary.from_terms(["putin", "russia", "war"])
    np.testing.assert_allclose(project(v, target), [0.9, 0.7, 0.0])


weights = st.dictionaries(st.sampled_from("abcdefgh"), st.floats(0.01, 10), min_size=1)


@given(weights, weights, st.floats(0.1, 50))
def test_cosine_range_symmetry_and_scale_invariance(wa, wb, c):
    a = vec(wa, sorted(set(wa) | {"a", "b"}))
    b = vec(wb, sorted(set(wb) | {"b", "c"}), batch=1)
    s = intersection_cosine(a, b)
    assert 0.0 <= s <= 1.0
    assert s == pytest.approx(intersection_cosine(b, a), abs=1e-12)
    assert intersection_cosine(a.scale(c), b) == pytest.approx(s, abs=1e-9)


@given(st.lists(st.lists(st.floats(0, 1), min_size=4, max_size=4), min_size=1, max_size=5))
def test_max_pool_dominates_inputs(rows):
    vocab = Vocabulary.from_terms("abcd")
    vs = [SparseVector.from_dense(vocab, r) for r in rows]
    pooled = max_pool(vs).to_dense()
    for v in vs:
        assert np.all(pooled >= v.to_dense())


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1))
def test_matrix_similarity_matches_pairwise(seed):
    rng = np.random.default_rng(seed)
    pool = [f"t{i}" for i in range(12)]
    vocab = Vocabulary.from_terms(rng.choice(pool, 8, replace=False), 1)
    refs = []
    for _ in range(3):
        rv = Vocabulary.from_terms(rng.choice(pool, 7, replace=False), 0)
        refs.append(SparseVector.from_dense(rv, rng.random(len(rv)) * (rng.random(len(rv)) < 0.6)))
    rows = [SparseVector.from_dense(vocab, rng.integers(0, 3, len(vocab))) for _ in range(6)]
    got = intersection_cosine_matrix(stack(rows, vocab), vocab, refs)
    want = np.array([[intersection_cosine(r, c) for c in refs] for r in rows])
    np.testing.assert_allclose(got, want, atol=1e-12)
    assert not math.isnan(got.sum())
