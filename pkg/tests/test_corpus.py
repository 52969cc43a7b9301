import json

import pytest

from topicpath.corpus import (Batch, BatchConfig, Microblog, TokenizedMessage, extract_features,
                              load_stopwords, ngrams, parse_timestamp, preprocess, read_jsonl,
                              segment_stream, tokenize)

DAY = 86400.0


def m(i, ts, text="x"):
    return Microblog(str(i), ts, text)


def test_weekly_windows_are_half_open():
    cfg = BatchConfig()
    week = cfg.delta_t
    batches = segment_stream([m(1, 0), m(2, week - 1), m(3, week), m(4, 2 * week + 5)], cfg)
    assert [[x.id for x in b.messages] for b in batches] == [["1", "2"], ["3"], ["4"]]
    assert batches[1].start == week and batches[1].end == 2 * week


def test_empty_windows_keep_indices_contiguous():
    cfg = BatchConfig(delta_t=DAY)
    batches = segment_stream([m(1, 0), m(2, 3 * DAY)], cfg)
    assert [b.index for b in batches] == [0, 1, 2, 3]
    assert [len(b) for b in batches] == [1, 0, 0, 1]


def test_messages_before_origin_are_dropped():
    batches = segment_stream([m(1, 5), m(2, 100)], BatchConfig(delta_t=DAY), origin=50)
    assert [x.id for b in batches for x in b.messages] == ["2"]


def test_empty_stream():
    assert segment_stream([], BatchConfig()) == []


def test_parse_timestamp_forms():
    assert parse_timestamp(1420070400) == 1420070400.0
    assert parse_timestamp("2015-01-01T00:00:00Z") == 1420070400.0
    assert parse_timestamp("2015-01-01T01:00:00+01:00") == 1420070400.0
    with pytest.raises(ValueError):
        parse_timestamp(True)


def test_microblog_validation():
    with pytest.raises(ValueError):
        Microblog("", 0.0, "x")
    with pytest.raises(ValueError):
        Microblog("a", float("nan"), "x")


def test_tokenize_drops_handles_urls_and_stopwords():
    toks = tokenize("RT @bob The #Budget visit http://t.co/xyz was GREAT", frozenset({"the", "was", "rt"}))
    assert toks == ("#budget", "visit", "great")


def test_ngrams_space_joined():
    assert ngrams(("a", "b", "c"), 2) == ["a", "b", "c", "a b", "b c"]
    assert ngrams(("a", "b"), 1) == ["a", "b"]


def test_preprocess_removes_in_batch_duplicates():
    b = Batch(0, 0, 1, [m(1, 0, "Putin  speaks"), m(2, 0, "putin speaks"), m(3, 0, "other")])
    out = preprocess(b, BatchConfig(stopwords=frozenset()))
    assert [t.id for t in out] == ["1", "3"]


def test_extract_features_threshold_and_counts():
    tok = [TokenizedMessage(str(i), t) for i, t in
           enumerate([("putin", "war"), ("putin", "war"), ("putin", "tank"), ("budget",)])]
    vocab, vecs = extract_features(tok, BatchConfig(min_doc_freq=2, ngram_max=2), batch_index=4)
    assert vocab.terms == ("putin", "putin war", "war")
    assert vocab.batch_index == 4
    assert vecs["0"].to_mapping() == {"putin": 1.0, "putin war": 1.0, "war": 1.0}
    assert vecs["2"].to_mapping() == {"putin": 1.0}
    assert "3" not in vecs  # no term survives the threshold


def test_raw_term_frequency():
    tok = [TokenizedMessage(str(i), ("a", "a", "b")) for i in range(3)]
    _, vecs = extract_features(tok, BatchConfig(min_doc_freq=3, ngram_max=1))
    assert vecs["0"].to_mapping() == {"a": 2.0, "b": 1.0}


def test_read_jsonl_skips_and_counts_malformed(tmp_path):
    p = tmp_path / "in.jsonl"
    p.write_text("\n".join([
        json.dumps({"id": "a", "timestamp": 10, "text": "hi"}),
        "{not json",
        json.dumps({"id": "b", "text": "no time"}),
        json.dumps({"id": "c", "timestamp": "2015-01-01T00:00:00Z", "text": "ok"}),
    ]) + "\n")
    stats = {}
    got = list(read_jsonl(p, stats))
    assert [x.id for x in got] == ["a", "c"]
    assert stats["skipped"] == 2


def test_load_stopwords_ignores_comments(tmp_path):
    p = tmp_path / "sw.txt"
    p.write_text("# comment\nThe\n\nand\n")
    assert load_stopwords(p) == frozenset({"the", "and"})


def test_batch_config_validation():
    with pytest.raises(ValueError):
        BatchConfig(delta_t=0)
    with pytest.raises(ValueError):
        BatchConfig(min_doc_freq=0)
