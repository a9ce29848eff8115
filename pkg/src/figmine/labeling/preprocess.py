"""Shared text preprocessing for the embedding and topic models.

Lowercases, strips punctuation and numeric characters, and removes stopwords,
so "1.93 wt% Ru-WSe2" reduces to the tokens ["wt", "ru", "wse"].
"""

from __future__ import annotations

import re

STOPWORDS = frozenset(
    """a about above after again against all am an and any are as at be
    because been before being below between both but by can could did do does
    doing down during each few for from further had has have having he her
    here hers herself him himself his how i if in into is it its itself just
    me more most my myself no nor not now of off on once only or other our
    ours ourselves out over own same she should so some such than that the
    their theirs them themselves then there these they this those through to
    too under until up very was we were what when where which while who whom
    why will with you your yours yourself yourselves however also may might
    must shall upon via et al fig figure figures table tables respectively
    using used use show shows shown""".split()
)

_LETTERS_RE = re.compile(r"[^a-z]+")


def tokenize(text: str) -> list:
    """Preprocessed token list; empty when nothing survives filtering."""
    cleaned = _LETTERS_RE.sub(" ", text.lower())
    return [t for t in cleaned.split() if len(t) >= 2 and t not in STOPWORDS]


def tokenize_corpus(documents) -> list:
    return [tokenize(doc) for doc in documents]
