"""Report files written after a run: pathways, events, coherence and segment terms.

All outputs are plain JSON/CSV with fixed orderings and float formatting so
two runs over the same input produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import os
from datetime import datetime, timezone

from .evaluate import DocTermIndex, coherence_curve
from .model import TopicPathwayDetector
from .pathways import frequent_terms

__all__ = ["REPORT_VERSION", "iso_time", "pathways_report", "events_csv", "coherence_rows",
           "coherence_csv", "segment_terms_csv", "write_reports"]

REPORT_VERSION = 1
EVENT_COLUMNS = ["batch_index", "batch_start_iso", "pathway_id", "score", "wv", "wps", "wns",
                 "segment_count", "batch_count", "novel_terms"]


def iso_time(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def _f(x: float) -> str:
    return f"{x:.6f}"


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def pathways_report(det: TopicPathwayDetector) -> dict:
    n_top = det.layer_config_.top_terms_n
    pathways = []
    for p in sorted(det.pathways_.values(), key=lambda p: p.id):
        pathways.append({
            "id": p.id,
            "spawn_batch": p.spawn_batch,
            "parent_pathway": p.parent_pathway,
            "crv_chain": p.crv_chain,
            "message_count": p.message_count,
            "top_terms": [[t, c] for t, c in frequent_terms(p, n_top)],
            "segments": [
                {"batch": s.batch_index, "crv": s.crv_id, "count": s.count,
                 "avg_pos_sent": s.avg_pos_sent, "avg_neg_sent": s.avg_neg_sent,
                 "top_terms": [[t, c] for t, c in frequent_terms(s, n_top)],
                 "message_ids": s.message_ids}
                for s in p.segments
            ],
        })
    return {
        "version": REPORT_VERSION,
        "batches": [{"index": b.index, "start": iso_time(b.start), "count": b.count,
                     "vectorized": b.vectorized} for b in det.batches_],
        "pathways": pathways,
        "lineage": [{"crv": e.crv, "parent": e.parent, "layer": e.layer, "pathway": e.pathway_id}
                    for e in det.registry_.edges],
    }


def events_csv(det: TopicPathwayDetector) -> str:
    rows = [[e.batch_index, iso_time(det.batch_start(e.batch_index)), e.pathway_id,
             _f(e.score), _f(e.wv), _f(e.wps), _f(e.wns), e.segment_count, e.batch_count,
             ";".join(e.novel_terms)]
            for e in det.events_]
    return _csv_text(EVENT_COLUMNS, rows)


def coherence_rows(det: TopicPathwayDetector, n_max: int = 100) -> list[tuple[str, int, float]]:
    """Corpus baseline curve followed by one curve per pathway, all over one message index."""
    index = DocTermIndex(det.doc_terms_)
    ranked = [t for t, _ in sorted(det.term_counts_.items(), key=lambda kv: (-kv[1], kv[0]))]
    rows = [("corpus", n, s) for n, s in coherence_curve(ranked, index, n_max=n_max)]
    for p in sorted(det.pathways_.values(), key=lambda p: p.id):
        terms = [t for t, _ in frequent_terms(p, n_max)]
        rows.extend((f"pathway:{p.id}", n, s) for n, s in coherence_curve(terms, index, n_max=n_max))
    return rows


def coherence_csv(det: TopicPathwayDetector, n_max: int = 100) -> str:
    return _csv_text(["scope", "n", "score"],
                     [[scope, n, _f(s)] for scope, n, s in coherence_rows(det, n_max)])


def segment_terms_csv(segment) -> str:
    ranked = frequent_terms(segment, len(segment.term_freqs))
    return _csv_text(["term", "count"], ranked)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_reports(det: TopicPathwayDetector, out_dir) -> list[str]:
    """Write every report under ``out_dir`` and return the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    path = os.path.join(out_dir, "pathways.json")
    _write(path, json.dumps(pathways_report(det), indent=1, sort_keys=True) + "\n")
    written.append(path)
    for name, text in (("events.csv", events_csv(det)), ("coherence.csv", coherence_csv(det))):
        path = os.path.join(out_dir, name)
        _write(path, text)
        written.append(path)
    for p in det.pathways_.values():
        seg_dir = os.path.join(out_dir, "segments", str(p.id))
        os.makedirs(seg_dir, exist_ok=True)
        for s in p.segments:
            path = os.path.join(seg_dir, f"{s.batch_index}.terms.csv")
            _write(path, segment_terms_csv(s))
            written.append(path)
    return written
