"""Skip-gram word embeddings with negative sampling, trained from scratch.

Single-worker, seeded, fixed update order: identical inputs give identical
vectors. The analytic gradients of the per-pair objective are exposed for
direct verification against finite differences.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..models import SchemaError
from .preprocess import tokenize_corpus

FORMAT_VERSION = "1"


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 100
    window: int = 5
    negative: int = 5
    min_count: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    seed: int = 0

    def __post_init__(self):
        for name in ("dim", "window", "negative", "epochs"):
            if getattr(self, name) < 1:
                raise SchemaError(name, f"must be >= 1, got {getattr(self, name)}")
        if self.min_count < 1:
            raise SchemaError("min_count", f"must be >= 1, got {self.min_count}")
        if self.learning_rate <= 0:
            raise SchemaError("learning_rate", f"must be positive, got {self.learning_rate}")


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def ns_loss_and_grad(center, context, negatives):
    """Negative-sampling objective for one (center, context) pair.

    loss = -log s(u.v) - sum_k log s(-u.n_k); returns (loss, grad_center,
    grad_context, grad_negatives) with gradients of the loss.
    """
    center = np.asarray(center, dtype=np.float64)
    context = np.asarray(context, dtype=np.float64)
    negatives = np.asarray(negatives, dtype=np.float64)
    if negatives.size == 0:
        negatives = negatives.reshape(0, center.shape[0])
    pos = sigmoid(center @ context)
    neg = sigmoid(negatives @ center)
    loss = float(-np.log(pos) - np.sum(np.log(1.0 - neg)))
    grad_center = (pos - 1.0) * context + (negatives * neg[:, None]).sum(axis=0)
    grad_context = (pos - 1.0) * center
    grad_negatives = neg[:, None] * center[None, :]
    return loss, grad_center, grad_context, grad_negatives


class EmbeddingModel:
    """Vocabulary plus |V| x d vector matrix with cosine lookups."""

    def __init__(self, vocabulary: dict, vectors: np.ndarray, config: EmbeddingConfig | None = None):
        if sorted(vocabulary.values()) != list(range(len(vocabulary))):
            raise SchemaError("vocabulary", "indices must be dense 0..|V|-1")
        if vectors.shape[0] != len(vocabulary):
            raise SchemaError("vectors", f"row count {vectors.shape[0]} != vocabulary size {len(vocabulary)}")
        if not np.all(np.isfinite(vectors)):
            raise SchemaError("vectors", "must be finite")
        self.vocabulary = dict(vocabulary)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.config = config
        self._words = [None] * len(vocabulary)
        for w, i in vocabulary.items():
            self._words[i] = w

    def __contains__(self, word: str) -> bool:
        return word in self.vocabulary

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.vocabulary[word]]

    def cosine(self, a: str, b: str) -> float:
        return cosine_similarity(self.vector(a), self.vector(b))

    def nearest(self, word: str, k: int = 3) -> list:
        """k most-similar vocabulary words, ties broken alphabetically."""
        v = self.vector(word)
        scored = [
            (cosine_similarity(v, self.vectors[i]), w)
            for w, i in self.vocabulary.items()
            if w != word
        ]
        scored.sort(key=lambda t: (-t[0], t[1]))
        return [w for _, w in scored[:k]]

    def save(self, path) -> None:
        """Text format: header "|V| d", then "word v1 ... vd" per line."""
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{len(self._words)} {self.vectors.shape[1]}\n")
            for i, w in enumerate(self._words):
                floats = " ".join(repr(float(x)) for x in self.vectors[i])
                f.write(f"{w} {floats}\n")

    @classmethod
    def load(cls, path) -> "EmbeddingModel":
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise SchemaError("header", "expected '|V| d'")
            n, d = int(header[0]), int(header[1])
            vocabulary = {}
            vectors = np.zeros((n, d), dtype=np.float64)
            for i in range(n):
                parts = f.readline().split()
                if len(parts) != d + 1:
                    raise SchemaError(f"line {i + 2}", f"expected word + {d} floats, got {len(parts)} fields")
                vocabulary[parts[0]] = i
                vectors[i] = [float(x) for x in parts[1:]]
        return cls(vocabulary=vocabulary, vectors=vectors)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


def build_vocabulary(token_docs, min_count: int) -> dict:
    """Words at or above min_count, indexed by descending frequency then alphabetically."""
    counts = Counter(t for doc in token_docs for t in doc)
    kept = sorted((w for w, c in counts.items() if c >= min_count), key=lambda w: (-counts[w], w))
    return {w: i for i, w in enumerate(kept)}


def train_embeddings(corpus, config: EmbeddingConfig = EmbeddingConfig()) -> EmbeddingModel:
    """Train skip-gram vectors over raw documents (strings)."""
    token_docs = tokenize_corpus(corpus)
    vocabulary = build_vocabulary(token_docs, config.min_count)
    if not vocabulary:
        raise SchemaError("corpus", f"vocabulary empty after min_count={config.min_count} filtering")
    docs = [[vocabulary[t] for t in doc if t in vocabulary] for doc in token_docs]
    docs = [d for d in docs if len(d) >= 2]

    rng = np.random.default_rng(config.seed)
    n, d = len(vocabulary), config.dim
    center_vecs = (rng.random((n, d)) - 0.5) / d
    context_vecs = np.zeros((n, d), dtype=np.float64)

    counts = np.zeros(n)
    for doc in docs:
        for idx in doc:
            counts[idx] += 1
    noise = counts**0.75
    noise /= noise.sum()

    total_pairs = max(
        1, sum(len(doc) for doc in docs) * config.epochs
    )
    seen = 0
    for _ in range(config.epochs):
        for doc in docs:
            for i, c in enumerate(doc):
                lr = config.learning_rate * max(0.0001, 1.0 - seen / total_pairs)
                seen += 1
                b = int(rng.integers(1, config.window + 1))
                lo, hi = max(0, i - b), min(len(doc), i + b + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    o = doc[j]
                    negs = rng.choice(n, size=config.negative, p=noise)
                    _, g_c, g_o, g_n = ns_loss_and_grad(
                        center_vecs[c], context_vecs[o], context_vecs[negs]
                    )
                    center_vecs[c] -= lr * g_c
                    context_vecs[o] -= lr * g_o
                    for k, neg_idx in enumerate(negs):
                        context_vecs[neg_idx] -= lr * g_n[k]
    return EmbeddingModel(vocabulary=vocabulary, vectors=center_vecs, config=config)
