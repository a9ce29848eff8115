"""Latent Dirichlet Allocation via collapsed Gibbs sampling, from scratch.

Seeded and single-threaded: the same corpus and seed give bit-identical count
matrices. Held-out documents are labeled by fold-in inference against frozen
topic-word counts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..models import SchemaError
from .preprocess import tokenize, tokenize_corpus

FORMAT_VERSION = "1"


@dataclass(frozen=True)
class LdaConfig:
    k: int = 10
    alpha: float | None = None  # defaults to 50/k
    beta: float = 0.01
    iterations: int = 1000
    infer_iterations: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise SchemaError("k", f"must be >= 1, got {self.k}")
        if self.alpha is not None and self.alpha <= 0:
            raise SchemaError("alpha", f"must be positive, got {self.alpha}")
        if self.beta <= 0:
            raise SchemaError("beta", f"must be positive, got {self.beta}")
        if self.iterations < 1 or self.infer_iterations < 1:
            raise SchemaError("iterations", "must be >= 1")

    @property
    def effective_alpha(self) -> float:
        return self.alpha if self.alpha is not None else 50.0 / self.k


class TopicModel:
    """Fitted LDA state: vocabulary, counts, hyperparameters."""

    def __init__(self, vocabulary, topic_word_counts, doc_topic_counts, config: LdaConfig):
        self.vocabulary = dict(vocabulary)
        self.words = [None] * len(vocabulary)
        for w, i in self.vocabulary.items():
            self.words[i] = w
        self.topic_word_counts = np.asarray(topic_word_counts, dtype=np.int64)
        self.doc_topic_counts = np.asarray(doc_topic_counts, dtype=np.int64)
        self.config = config
        if self.topic_word_counts.shape != (config.k, len(vocabulary)):
            raise SchemaError("topic_word_counts", f"expected shape {(config.k, len(vocabulary))}")

    def phi(self) -> np.ndarray:
        """Topic-word distributions, rows summing to 1."""
        beta = self.config.beta
        counts = self.topic_word_counts + beta
        return counts / counts.sum(axis=1, keepdims=True)

    def theta(self) -> np.ndarray:
        """Document-topic distributions for the training corpus."""
        alpha = self.config.effective_alpha
        counts = self.doc_topic_counts + alpha
        return counts / counts.sum(axis=1, keepdims=True)

    def top_words(self, topic: int, n: int = 20) -> list:
        row = self.phi()[topic]
        order = sorted(range(len(row)), key=lambda i: (-row[i], self.words[i]))
        return [self.words[i] for i in order[:n]]

    def save(self, path) -> None:
        payload = {
            "format_version": FORMAT_VERSION,
            "k": self.config.k,
            "alpha": self.config.effective_alpha,
            "beta": self.config.beta,
            "iterations": self.config.iterations,
            "infer_iterations": self.config.infer_iterations,
            "seed": self.config.seed,
            "vocabulary": self.words,
            "topic_word_counts": self.topic_word_counts.tolist(),
            "doc_topic_counts": self.doc_topic_counts.tolist(),
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "TopicModel":
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        config = LdaConfig(
            k=payload["k"],
            alpha=payload["alpha"],
            beta=payload["beta"],
            iterations=payload["iterations"],
            infer_iterations=payload.get("infer_iterations", 50),
            seed=payload["seed"],
        )
        vocabulary = {w: i for i, w in enumerate(payload["vocabulary"])}
        return cls(
            vocabulary=vocabulary,
            topic_word_counts=payload["topic_word_counts"],
            doc_topic_counts=payload["doc_topic_counts"],
            config=config,
        )


def _gibbs_pass(docs, assignments, n_dk, n_kw, n_k, alpha, beta, vocab_size, rng, update_kw):
    k_topics = n_kw.shape[0]
    for d, doc in enumerate(docs):
        for pos, w in enumerate(doc):
            z = assignments[d][pos]
            n_dk[d, z] -= 1
            if update_kw:
                n_kw[z, w] -= 1
                n_k[z] -= 1
            weights = (n_dk[d] + alpha) * (n_kw[:, w] + beta) / (n_k + beta * vocab_size)
            total = weights.sum()
            u = rng.random() * total
            acc = 0.0
            z_new = k_topics - 1
            for t in range(k_topics):
                acc += weights[t]
                if u < acc:
                    z_new = t
                    break
            assignments[d][pos] = z_new
            n_dk[d, z_new] += 1
            if update_kw:
                n_kw[z_new, w] += 1
                n_k[z_new] += 1


def train_lda(corpus, config: LdaConfig = LdaConfig()) -> TopicModel:
    """Fit LDA on raw documents (strings) with collapsed Gibbs sampling."""
    token_docs = tokenize_corpus(corpus)
    vocabulary: dict = {}
    for doc in token_docs:
        for t in doc:
            if t not in vocabulary:
                vocabulary[t] = len(vocabulary)
    if not vocabulary:
        raise SchemaError("corpus", "vocabulary empty after preprocessing")
    if config.k > len(vocabulary):
        raise SchemaError("k", f"{config.k} topics exceed vocabulary size {len(vocabulary)}")
    docs = [[vocabulary[t] for t in doc] for doc in token_docs]

    rng = np.random.default_rng(config.seed)
    alpha, beta = config.effective_alpha, config.beta
    v = len(vocabulary)
    n_dk = np.zeros((len(docs), config.k), dtype=np.int64)
    n_kw = np.zeros((config.k, v), dtype=np.int64)
    n_k = np.zeros(config.k, dtype=np.int64)
    assignments = []
    for d, doc in enumerate(docs):
        zs = rng.integers(0, config.k, size=len(doc))
        assignments.append(list(zs))
        for pos, w in enumerate(doc):
            z = zs[pos]
            n_dk[d, z] += 1
            n_kw[z, w] += 1
            n_k[z] += 1
    for _ in range(config.iterations):
        _gibbs_pass(docs, assignments, n_dk, n_kw, n_k, alpha, beta, v, rng, update_kw=True)
    return TopicModel(
        vocabulary=vocabulary,
        topic_word_counts=n_kw,
        doc_topic_counts=n_dk,
        config=config,
    )


def assign_topic(doc_text: str, model: TopicModel, threshold: float):
    """Fold-in inference; returns (topic_index, confidence) or None below threshold.

    Topic-word counts stay frozen; only the held-out document's topic counts
    move during the fixed number of inference sweeps.
    """
    tokens = [model.vocabulary[t] for t in tokenize(doc_text) if t in model.vocabulary]
    if not tokens:
        return None
    config = model.config
    rng = np.random.default_rng(config.seed)
    alpha, beta = config.effective_alpha, config.beta
    v = len(model.vocabulary)
    n_dk = np.zeros((1, config.k), dtype=np.int64)
    n_kw = model.topic_word_counts
    n_k = n_kw.sum(axis=1)
    zs = rng.integers(0, config.k, size=len(tokens))
    assignments = [list(zs)]
    for pos, _ in enumerate(tokens):
        n_dk[0, zs[pos]] += 1
    for _ in range(config.infer_iterations):
        _gibbs_pass([tokens], assignments, n_dk, n_kw, n_k, alpha, beta, v, rng, update_kw=False)
    theta = (n_dk[0] + alpha) / (n_dk[0].sum() + alpha * config.k)
    best = int(np.argmax(theta))
    confidence = float(theta[best])
    if confidence < threshold:
        return None
    return best, confidence
