"""Hierarchical label construction from trained models.

Caption labels come from iterative word dropout, abstract labels from
proximity to the joint caption+abstract centroid, and topic names from the
embedding centroid of a topic's top words.
"""

from __future__ import annotations

import numpy as np

from ..models import HierarchicalLabels
from .embeddings import EmbeddingModel, cosine_similarity
from .lda import TopicModel, assign_topic
from .preprocess import tokenize

DEFAULT_CAPTION_LABELS = 5
ABSTRACT_LABELS = 3
TOPIC_NAME_WORDS = 2
TOPIC_POOL_WORDS = 20


def _centroid(model: EmbeddingModel, words) -> np.ndarray:
    return np.mean([model.vector(w) for w in words], axis=0)


def caption_dropout_labels(caption_words, model: EmbeddingModel, target_k: int = DEFAULT_CAPTION_LABELS) -> list:
    """Iteratively drop the word farthest (cosine) from the group centroid.

    One word is removed per iteration, the centroid recomputed, until target_k
    words remain. Distance ties drop the lexicographically first word. The
    result is ordered most-central-first against the final centroid.
    """
    if target_k < 1:
        raise ValueError(f"target_k must be >= 1, got {target_k}")
    group = sorted({w for w in caption_words if w in model})
    while len(group) > target_k:
        centroid = _centroid(model, group)
        distances = [(1.0 - cosine_similarity(model.vector(w), centroid), w) for w in group]
        drop = min(distances, key=lambda t: (-t[0], t[1]))[1]
        group.remove(drop)
    if not group:
        return []
    centroid = _centroid(model, group)
    group.sort(key=lambda w: (1.0 - cosine_similarity(model.vector(w), centroid), w))
    return group


def abstract_labels(caption_words, abstract_words, model: EmbeddingModel, n: int = ABSTRACT_LABELS) -> list:
    """Abstract-only words nearest the joint caption+abstract centroid."""
    caption_in = {w for w in caption_words if w in model}
    abstract_in = {w for w in abstract_words if w in model}
    joint = sorted(caption_in | abstract_in)
    if not joint:
        return []
    centroid = _centroid(model, joint)
    candidates = sorted(abstract_in - caption_in)
    candidates.sort(key=lambda w: (1.0 - cosine_similarity(model.vector(w), centroid), w))
    return candidates[:n]


def name_topic(topic: int, model: TopicModel, embeddings: EmbeddingModel, n: int = TOPIC_NAME_WORDS) -> list:
    """Name a topic: the top-phi words' embedding centroid picks its own nearest."""
    pool = [w for w in model.top_words(topic, TOPIC_POOL_WORDS) if w in embeddings]
    if not pool:
        return []
    centroid = _centroid(embeddings, pool)
    ranked = sorted(pool, key=lambda w: (1.0 - cosine_similarity(embeddings.vector(w), centroid), w))
    return ranked[:n]


def build_labels(
    caption_text: str,
    abstract_text: str | None,
    embeddings: EmbeddingModel,
    topics: TopicModel | None,
    topic_threshold: float,
    target_k: int = DEFAULT_CAPTION_LABELS,
) -> HierarchicalLabels:
    """Full hierarchical labels for one image from its caption and article abstract."""
    caption_words = set(tokenize(caption_text))
    abstract_words = set(tokenize(abstract_text)) if abstract_text else set()
    caption = caption_dropout_labels(caption_words, embeddings, target_k)
    abstract = abstract_labels(caption_words, abstract_words, embeddings) if abstract_words else []
    topic_label = None
    topic_confidence = 0.0
    if topics is not None and abstract_text:
        assigned = assign_topic(abstract_text, topics, topic_threshold)
        if assigned is not None:
            index, topic_confidence = assigned
            topic_label = " ".join(name_topic(index, topics, embeddings))
    return HierarchicalLabels(
        caption_labels=tuple(caption),
        abstract_labels=tuple(abstract),
        topic_label=topic_label or None,
        topic_confidence=topic_confidence,
    )
