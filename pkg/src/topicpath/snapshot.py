"""Saving and restoring a detector's full incremental state as JSON.

A snapshot holds everything later batches and the reports depend on: the
resolved configuration, the batch bookkeeping, every pathway with its
segments, the routing CRVs of live pathways (with their batch vocabularies)
and the coherence index. Map RNGs are derived from the seed and the batch
index, so no generator state needs to be stored.
"""
from __future__ import annotations

import json
import os
import tempfile
from collections import Counter

from .model import BatchInfo, TopicPathwayDetector
from .pathways import ClusterRepVector, LineageEdge, TopicPathway, TopicSegment
from .sentiment import Lexicon
from .vecspace import SparseVector, Vocabulary

__all__ = ["SNAPSHOT_VERSION", "SnapshotError", "to_state", "from_state", "dumps", "loads",
           "save_snapshot", "load_snapshot"]

SNAPSHOT_VERSION = 1


class SnapshotError(Exception):
    """Unreadable, truncated or incompatible snapshot."""


def _lexicon_state(lex: Lexicon) -> dict:
    return {"words": lex.words, "boosters": lex.boosters,
            "negators": sorted(lex.negators), "emoticons": lex.emoticons}


def _segment_state(seg: TopicSegment) -> dict:
    return {"batch": seg.batch_index, "crv": seg.crv_id, "message_ids": seg.message_ids,
            "term_freqs": seg.term_freqs, "avg_pos_sent": seg.avg_pos_sent,
            "avg_neg_sent": seg.avg_neg_sent}


def to_state(det: TopicPathwayDetector) -> dict:
    """Plain JSON-compatible state of a fitted detector."""
    if not hasattr(det, "registry_"):
        raise SnapshotError("detector has not processed any input")
    params = det.get_params()
    params["stopwords"] = sorted(det.batch_config_.stopwords)
    params["lexicon"] = _lexicon_state(det.lexicon_)
    reg = det.registry_
    latest = sorted(reg.latest_crv.values(), key=lambda c: c.id)
    vocabs = {c.layer: c.vocab for c in latest}
    return {
        "version": SNAPSHOT_VERSION,
        "params": params,
        "origin": det.origin_,
        "last_batch": det.last_batch_,
        "batches": [[b.index, b.start, b.count, b.vectorized] for b in det.batches_],
        "registry": {
            "next_crv_id": reg.next_crv_id,
            "next_pathway_id": reg.next_pathway_id,
            "pathways": [
                {"id": p.id, "spawn_batch": p.spawn_batch, "parent_pathway": p.parent_pathway,
                 "crv_chain": p.crv_chain, "last_crv_layer": p.last_crv_layer,
                 "segments": [_segment_state(s) for s in p.segments]}
                for p in reg.pathways.values()
            ],
            "vocabularies": {str(layer): list(v.terms) for layer, v in sorted(vocabs.items())},
            "latest_crvs": [
                {"id": c.id, "layer": c.layer, "pathway": c.pathway_id, "parent": c.parent,
                 "hits": c.hits, "weights": c.weights.to_mapping()}
                for c in latest
            ],
            "edges": [[e.crv, e.parent, e.layer, e.pathway_id] for e in reg.edges],
        },
        "doc_terms": det.doc_terms_,
        "term_counts": dict(det.term_counts_),
    }


def from_state(state: dict) -> TopicPathwayDetector:
    """Rebuild a detector from :func:`to_state` output."""
    if not isinstance(state, dict) or "version" not in state:
        raise SnapshotError("not a snapshot: missing version field")
    if state["version"] != SNAPSHOT_VERSION:
        raise SnapshotError(f"snapshot version {state['version']} is not supported "
                            f"(this build reads version {SNAPSHOT_VERSION})")
    try:
        params = dict(state["params"])
        lex = params["lexicon"]
        params["lexicon"] = Lexicon(lex["words"], lex["boosters"], frozenset(lex["negators"]),
                                    lex["emoticons"])
        det = TopicPathwayDetector(**params)
        det._reset()
        det.origin_ = state["origin"]
        det.last_batch_ = state["last_batch"]
        det.batches_ = [BatchInfo(*row) for row in state["batches"]]
        reg_state = state["registry"]
        reg = det.registry_
        reg.next_crv_id = reg_state["next_crv_id"]
        reg.next_pathway_id = reg_state["next_pathway_id"]
        for p in reg_state["pathways"]:
            segs = [TopicSegment(p["id"], s["batch"], s["crv"], list(s["message_ids"]),
                                 dict(s["term_freqs"]), s["avg_pos_sent"], s["avg_neg_sent"])
                    for s in p["segments"]]
            reg.pathways[p["id"]] = TopicPathway(p["id"], p["spawn_batch"], p["parent_pathway"],
                                                 segs, list(p["crv_chain"]), p["last_crv_layer"])
        vocabs = {int(k): Vocabulary(int(k), tuple(v)) for k, v in reg_state["vocabularies"].items()}
        for c in reg_state["latest_crvs"]:
            weights = SparseVector.from_mapping(vocabs[c["layer"]], c["weights"])
            reg.latest_crv[c["pathway"]] = ClusterRepVector(c["id"], c["layer"], weights,
                                                            c["pathway"], c["parent"], c["hits"])
        reg.edges = [LineageEdge(*e) for e in reg_state["edges"]]
        det.doc_terms_ = {k: list(v) for k, v in state["doc_terms"].items()}
        det.term_counts_ = Counter(state["term_counts"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed snapshot: {exc!r}") from None
    return det


def dumps(det: TopicPathwayDetector) -> str:
    return json.dumps(to_state(det), sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str) -> TopicPathwayDetector:
    try:
        state = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"truncated or corrupt snapshot: {exc}") from None
    return from_state(state)


def save_snapshot(det: TopicPathwayDetector, path) -> None:
    """Write atomically so an interrupted save never leaves a half-written file."""
    text = dumps(det)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".snapshot-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def load_snapshot(path) -> TopicPathwayDetector:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
