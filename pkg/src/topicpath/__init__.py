"""Incremental topic-pathway separation and event detection for short-text streams."""
from .corpus import BatchConfig, Microblog, read_jsonl, segment_stream
from .events import Event, EventConfig, detect_events, event_score
from .evaluate import DocTermIndex, SyntheticSpec, coherence_curve, generate_synthetic, topic_coherence
from .model import TopicPathwayDetector
from .pathways import LayerConfig, PathwayRegistry, TopicPathway, TopicSegment, frequent_terms
from .sentiment import Lexicon, default_lexicon, score_message
from .snapshot import SnapshotError, load_snapshot, save_snapshot
from .som import GrowingSOM, SomConfig
from .vecspace import SparseVector, Vocabulary, intersection_cosine, max_pool

__version__ = "0.1.0"

__all__ = [
    "BatchConfig", "Microblog", "read_jsonl", "segment_stream", "Event", "EventConfig",
    "detect_events", "event_score", "DocTermIndex", "SyntheticSpec", "coherence_curve",
    "generate_synthetic", "topic_coherence", "TopicPathwayDetector", "LayerConfig",
    "PathwayRegistry", "TopicPathway", "TopicSegment", "frequent_terms", "Lexicon",
    "default_lexicon", "score_message", "SnapshotError", "load_snapshot", "save_snapshot",
    "GrowingSOM", "SomConfig", "SparseVector", "Vocabulary", "intersection_cosine", "max_pool",
]
