"""Dual-polarity sentiment strength from a word/emoticon lexicon.

Every message gets a positive strength in [1, 4] and a negative strength in
[-4, -1]; (1, -1) means no sentiment was found. Word strengths are adjusted
by a preceding booster, a negator in the two preceding tokens, and letter
repetition ("goooood").
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import NamedTuple, Sequence

logger = logging.getLogger(__name__)

__all__ = ["Lexicon", "SentimentScore", "score_message", "segment_sentiment",
           "load_lexicon", "default_lexicon"]

_WORD_RE = re.compile(r"[^\W\d_]+(?:'[^\W\d_]+)*")
_REPEAT_RE = re.compile(r"([^\W\d_])\1{2,}")
_CATEGORIES = ("word", "booster", "negator", "emoticon")


class SentimentScore(NamedTuple):
    pos: int
    neg: int


@dataclass
class Lexicon:
    words: dict[str, int] = field(default_factory=dict)
    boosters: dict[str, int] = field(default_factory=dict)
    negators: frozenset[str] = frozenset()
    emoticons: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for name, table in (("word", self.words), ("emoticon", self.emoticons)):
            for term, v in table.items():
                if not (2 <= abs(v) <= 4):
                    raise ValueError(f"{name} {term!r}: strength {v} outside [-4,-2] U [2,4]")
        for term, v in self.boosters.items():
            if v not in (-1, 1):
                raise ValueError(f"booster {term!r}: value must be -1 or +1")
        self.negators = frozenset(self.negators)
        keys = [set(self.words), set(self.boosters), set(self.negators), set(self.emoticons)]
        for i in range(len(keys)):
            for j in range(i + 1, len(keys)):
                clash = keys[i] & keys[j]
                if clash:
                    raise ValueError(f"terms in more than one category: {sorted(clash)[:5]}")


def load_lexicon(path) -> Lexicon:
    """Parse ``term<TAB>category<TAB>value`` lines; ``#`` starts a comment line."""
    tables: dict[str, dict[str, int]] = {c: {} for c in _CATEGORIES}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected term<TAB>category<TAB>value")
            term, category = parts[0].strip(), parts[1].strip()
            if category not in tables:
                raise ValueError(f"{path}:{lineno}: unknown category {category!r}")
            value = int(parts[2]) if len(parts) > 2 and parts[2].strip() else 0
            if category != "emoticon":
                term = term.lower()
            if term in tables[category]:
                logger.warning("%s:%d: duplicate %s %r, keeping the last value", path, lineno, category, term)
            tables[category][term] = value
    return Lexicon(tables["word"], tables["booster"], frozenset(tables["negator"]), tables["emoticon"])


def default_lexicon() -> Lexicon:
    """The small bundled English lexicon."""
    with resources.as_file(resources.files("topicpath") / "data" / "lexicon.tsv") as p:
        return load_lexicon(p)


def _tokens(text: str, lexicon: Lexicon) -> list[tuple[str, bool]]:
    """Split text into (token, is_emoticon) pairs in reading order."""
    out = []
    for chunk in text.replace("’", "'").split():
        if chunk in lexicon.emoticons:
            out.append((chunk, True))
            continue
        out.extend((w, False) for w in _WORD_RE.findall(chunk.lower()))
    return out


def _lookup(word: str, words: dict[str, int]) -> tuple[int | None, bool]:
    """Lexicon strength of ``word`` and whether it carried emphatic letter repeats."""
    emphatic = bool(_REPEAT_RE.search(word))
    if word in words:
        return words[word], emphatic
    if emphatic:
        for collapsed in (_REPEAT_RE.sub(r"\1\1", word), _REPEAT_RE.sub(r"\1", word)):
            if collapsed in words:
                return words[collapsed], True
    return None, emphatic


def score_message(text: str, lexicon: Lexicon) -> SentimentScore:
    tokens = _tokens(text, lexicon)
    pos, neg = 1, 1
    for i, (tok, is_emo) in enumerate(tokens):
        if is_emo:
            s = lexicon.emoticons[tok]
        else:
            base, emphatic = _lookup(tok, lexicon.words)
            if base is None:
                continue
            sign = 1 if base > 0 else -1
            mag = abs(base) + (1 if emphatic else 0)
            if i >= 1 and not tokens[i - 1][1]:
                mag += lexicon.boosters.get(tokens[i - 1][0], 0)
            if any(not e and t in lexicon.negators for t, e in tokens[max(0, i - 2):i]):
                sign, mag = -sign, mag - 1
            if mag <= 1:
                continue
            s = sign * min(mag, 4)
        if s > 0:
            pos = max(pos, s)
        else:
            neg = max(neg, -s)
    return SentimentScore(min(pos, 4), -min(neg, 4))


def segment_sentiment(scores: Sequence[SentimentScore]) -> tuple[float, float]:
    """Mean positive and mean negative strength of a segment's messages."""
    if not scores:
        raise ValueError("empty segment")
    n = len(scores)
    return sum(s.pos for s in scores) / n, sum(s.neg for s in scores) / n
