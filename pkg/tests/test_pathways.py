import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topicpath.evaluate import oracle_route
from topicpath.pathways import (ClusterRepVector, LayerConfig, PathwayRegistry, TopicPathway,
                                TopicSegment, build_segments, frequent_terms, learn_layer,
                                route_batch, term_distribution)
from topicpath.som import SomConfig
from topicpath.vecspace import SparseVector, Vocabulary, intersection_cosine

POOL = [f"w{i:02d}" for i in range(30)]


def crv(cid, weights, terms=None, layer=0, pathway=None):
    vocab = Vocabulary.from_terms(terms or weights, layer)
    return ClusterRepVector(cid, layer, SparseVector.from_mapping(vocab, weights),
                            cid if pathway is None else pathway)


def random_instance(seed, n_vec=50, n_crv=5, d=12):
    rng = np.random.default_rng(seed)
    vocab = Vocabulary.from_terms(rng.choice(POOL, d, replace=False), 1)
    vectors = {}
    for i in range(n_vec):
        dense = rng.integers(0, 3, len(vocab)) * (rng.random(len(vocab)) < 0.4)
        if dense.any():
            vectors[f"m{i}"] = SparseVector.from_dense(vocab, dense)
    crvs = []
    for k in range(n_crv):
        cv = Vocabulary.from_terms(rng.choice(POOL, d, replace=False), 0)
        w = rng.random(len(cv)) * (rng.random(len(cv)) < 0.5)
        crvs.append(ClusterRepVector(k, 0, SparseVector.from_dense(cv, w), k))
    return vectors, crvs


def test_route_threshold_rule():
    vocab = Vocabulary.from_terms(["a", "b"], 1)
    vectors = {"hi": SparseVector.from_mapping(vocab, {"a": 1}),
               "lo": SparseVector.from_mapping(vocab, {"a": 1, "b": 3})}
    c = crv(0, {"a": 1.0}, ["a", "b"])
    pools, new = route_batch(vectors, [c], LayerConfig(tau_sim=0.5))
    # 'hi' has similarity 1.0, 'lo' has 1/sqrt(10) ~ 0.32
    assert pools == {0: ["hi"]} and new == ["lo"]


def test_route_equal_to_threshold_goes_to_new_pool():
    vocab = Vocabulary.from_terms(["a", "b"], 1)
    v = {"m": SparseVector.from_mapping(vocab, {"a": 1, "b": 1})}
    c = crv(0, {"a": 1.0}, ["a", "b"])
    sim = intersection_cosine(v["m"], c.weights)
    pools, new = route_batch(v, [c], LayerConfig(tau_sim=sim))
    assert pools == {} and new == ["m"]


def test_route_first_batch_all_new():
    vectors, _ = random_instance(0)
    pools, new = route_batch(vectors, [], LayerConfig())
    assert pools == {} and new == list(vectors)


def test_route_ties_go_to_smallest_crv_id():
    vocab = Vocabulary.from_terms(["a"], 1)
    v = {"m": SparseVector.from_mapping(vocab, {"a": 2})}
    pools, _ = route_batch(v, [crv(5, {"a": 1.0}), crv(2, {"a": 3.0})], LayerConfig(tau_sim=0.1))
    assert pools == {2: ["m"]}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.9))
def test_route_matches_oracle(seed, tau):
    vectors, crvs = random_instance(seed)
    pools, new = route_batch(vectors, crvs, LayerConfig(tau_sim=tau))
    want = oracle_route(vectors, crvs, tau)
    got = {v: k for k, ids in pools.items() for v in ids} | {v: None for v in new}
    assert got == want
    # partition: every vector exactly once
    assert sorted(got) == sorted(vectors)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_raising_threshold_never_rescues_from_new_pool(seed, t1, dt):
    vectors, crvs = random_instance(seed)
    _, new_lo = route_batch(vectors, crvs, LayerConfig(tau_sim=t1))
    _, new_hi = route_batch(vectors, crvs, LayerConfig(tau_sim=min(1.0, t1 + dt)))
    assert set(new_lo) <= set(new_hi)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.5, 20))
def test_routing_is_scale_invariant(seed, c):
    vectors, crvs = random_instance(seed)
    scaled = {k: v.scale(c) for k, v in vectors.items()}
    assert route_batch(vectors, crvs, LayerConfig()) == route_batch(scaled, crvs, LayerConfig())


def test_build_segments_matches_brute_force():
    vectors, crvs = random_instance(4, n_vec=50, n_crv=3)
    crvs = [ClusterRepVector(c.id, 1, SparseVector.from_mapping(
        next(iter(vectors.values())).vocab, c.weights.to_mapping()), c.pathway_id) for c in crvs]
    segs = build_segments(vectors, crvs, 1)
    got = {m: s.crv_id for s in segs for m in s.message_ids}
    for vid, v in vectors.items():
        sims = [intersection_cosine(v, c.weights) for c in crvs]
        assert got[vid] == crvs[int(np.argmax(sims))].id
    assert sum(s.count for s in segs) == len(vectors)


def test_single_crv_takes_every_message():
    vectors, _ = random_instance(1)
    vocab = next(iter(vectors.values())).vocab
    only = ClusterRepVector(0, 1, SparseVector.from_dense(vocab, np.full(len(vocab), 0.1)), 0)
    segs = build_segments(vectors, [only], 1)
    assert len(segs) == 1 and segs[0].count == len(vectors)
    assert build_segments(vectors, [], 1) == []


def test_segment_term_freqs_are_recounts():
    vectors, crvs = random_instance(2)
    vocab = next(iter(vectors.values())).vocab
    layer = [ClusterRepVector(0, 1, SparseVector.from_dense(vocab, np.ones(len(vocab))), 0)]
    seg = build_segments(vectors, layer, 1)[0]
    total = {}
    for v in vectors.values():
        for t, c in v.to_mapping().items():
            total[t] = total.get(t, 0) + int(c)
    assert seg.term_freqs == total


def two_topic_vectors(n=30, seed=0, batch=0, prefix=("a", "b")):
    rng = np.random.default_rng(seed)
    terms = [f"{p}{j}" for p in prefix for j in range(6)]
    vocab = Vocabulary.from_terms(terms, batch)
    vectors = {}
    for i in range(n):
        p = prefix[i % 2]
        picks = rng.choice(6, 3, replace=False)
        vectors[f"{batch}-{i}"] = SparseVector.from_mapping(vocab, {f"{p}{j}": 1 for j in picks})
    return vectors


def test_first_layer_all_crvs_start_pathways():
    res = learn_layer(0, two_topic_vectors(), [], SomConfig(), LayerConfig(), 0, 0)
    assert res.crvs and all(c.parent is None for c in res.crvs)
    assert [p for p, _ in res.spawned] == [c.pathway_id for c in res.crvs]
    assert sum(s.count for s in res.segments) == 30


def test_all_vectors_near_one_crv_train_one_seeded_map():
    vectors = two_topic_vectors(prefix=("a", "a"), batch=1)
    parent = crv(3, {f"a{j}": 1.0 for j in range(6)})
    res = learn_layer(1, vectors, [parent], SomConfig(), LayerConfig(tau_sim=0.3), 10, 7)
    assert list(res.routing) == [3] and res.new_pool == []
    assert all(c.parent == 3 for c in res.crvs)
    # most-hit CRV continues the parent's pathway, siblings branch off it
    assert res.crvs[0].pathway_id == parent.pathway_id
    assert all(p == parent.pathway_id for _, p in res.spawned)
    assert [c.id for c in res.crvs] == list(range(10, 10 + len(res.crvs)))


def test_disjoint_batch_trains_only_the_random_map():
    vectors = two_topic_vectors(prefix=("x", "y"), batch=1)
    old = crv(0, {"a0": 1.0, "a1": 1.0})
    res = learn_layer(1, vectors, [old], SomConfig(), LayerConfig(), 1, 1)
    assert res.routing == {} and sorted(res.new_pool) == sorted(vectors)
    assert all(c.parent is None for c in res.crvs)
    assert all(parent is None for _, parent in res.spawned)
    assert oracle_route(vectors, [old], 0.4) == {v: None for v in vectors}


def test_min_spawn_size_suppresses_small_new_map():
    vectors = two_topic_vectors(prefix=("x", "y"), batch=1)
    res = learn_layer(1, vectors, [crv(0, {"a0": 1.0})], SomConfig(),
                      LayerConfig(min_spawn_size=len(vectors) + 1), 1, 1)
    assert res.crvs == [] and res.segments == []


def test_empty_batch_gives_empty_layer():
    res = learn_layer(2, {}, [crv(0, {"a": 1.0})], SomConfig(), LayerConfig(), 0, 0)
    assert res.crvs == [] and res.segments == []


def test_registry_lineage_and_retirement():
    reg = PathwayRegistry(LayerConfig(retire_after=2))
    reg.step(0, two_topic_vectors(batch=0), SomConfig())
    first = set(reg.pathways)
    # two batches about something else: the first pathways get no CRV
    reg.step(1, two_topic_vectors(batch=1, prefix=("x", "y")), SomConfig())
    assert first <= {c.pathway_id for c in reg.routing_crvs(2)}
    reg.step(2, two_topic_vectors(batch=2, prefix=("x", "y")), SomConfig())
    assert not first & {c.pathway_id for c in reg.routing_crvs(3)}
    for p in reg.pathways.values():
        layers = [s.batch_index for s in p.segments]
        assert layers == sorted(set(layers))
    by_id = {e.crv: e for e in reg.edges}
    for e in reg.edges:
        if e.parent is not None:
            assert by_id[e.parent].layer == e.layer - 1


def test_frequent_terms_ranking_and_truncation():
    seg = TopicSegment(0, 0, 0, ["m"], {"putin": 5, "war": 3, "x": 1, "a": 3})
    assert [t for t, _ in frequent_terms(seg, 2)] == ["putin", "a"]
    assert len(frequent_terms(seg, 99)) == 4
    pw = TopicPathway(0, 0, segments=[seg, TopicSegment(0, 1, 1, ["n"], {"x": 9})])
    assert frequent_terms(pw, 1) == [("x", 10)]
    assert frequent_terms(TopicPathway(1, 0), 3) == []


def test_term_distribution():
    p1 = TopicPathway(1, 0, segments=[TopicSegment(1, 0, 0, ["a"], {"putin": 47, "war": 1})])
    p2 = TopicPathway(2, 0, segments=[TopicSegment(2, 0, 1, ["b"], {"putin": 1})])
    d = term_distribution("putin", [p1, p2])
    assert d[1] == pytest.approx(100 * 47 / 48) and d[1] > 80
    assert sum(d.values()) == pytest.approx(100)
    assert term_distribution("nothing", [p1, p2]) == {1: 0.0, 2: 0.0}
    assert term_distribution("war", [p1]) == {1: 100.0}


def test_layer_config_validation():
    with pytest.raises(ValueError):
        LayerConfig(tau_sim=1.5)
    with pytest.raises(ValueError):
        LayerConfig(min_spawn_size=0)
