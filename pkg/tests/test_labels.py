import math
import time

import numpy as np
import pytest

from figmine.labeling.embeddings import EmbeddingModel
from figmine.labeling.hierarchy import (
    abstract_labels,
    build_labels,
    caption_dropout_labels,
    name_topic,
)
from figmine.labeling.lda import LdaConfig, TopicModel


def _model(vectors_by_word):
    words = list(vectors_by_word)
    vocab = {w: i for i, w in enumerate(words)}
    vectors = np.array([vectors_by_word[w] for w in words], dtype=np.float64)
    return EmbeddingModel(vocab, vectors)


# ---------------------------------------------------------------------------
# Independent re-implementation of the dropout rule, for oracle comparison
# ---------------------------------------------------------------------------


def _cos(a, b):
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return sum(x * y for x, y in zip(a, b)) / (na * nb)


def _mean(rows):
    n = len(rows)
    return [sum(r[i] for r in rows) / n for i in range(len(rows[0]))]


def _oracle_dropout(words, vectors_by_word, target_k):
    group = sorted(set(words))
    while len(group) > target_k:
        centroid = _mean([vectors_by_word[w] for w in group])
        drop = None
        for w in sorted(group):  # ties drop the lexicographically first word
            d = 1.0 - _cos(vectors_by_word[w], centroid)
            if drop is None or d > drop[0]:
                drop = (d, w)
        group.remove(drop[1])
    if not group:
        return []
    centroid = _mean([vectors_by_word[w] for w in group])
    return sorted(group, key=lambda w: (1.0 - _cos(vectors_by_word[w], centroid), w))


def test_dropout_matches_oracle_on_random_groups():
    rng = np.random.default_rng(20260815)
    start = time.monotonic()
    dim = 8
    vocab_words = [f"w{chr(97 + i)}{chr(97 + j)}" for i in range(6) for j in range(6)]
    for _ in range(100):
        by_word = {w: rng.normal(size=dim).tolist() for w in vocab_words}
        model = _model(by_word)
        size = int(rng.integers(1, 15))
        group = list(rng.choice(vocab_words, size=size, replace=False))
        want = _oracle_dropout(group, by_word, 5)
        got = caption_dropout_labels(group, model, target_k=5)
        assert got == want
    assert time.monotonic() - start < 5.0


def test_group_at_or_below_target_is_kept_whole():
    by_word = {"aa": [1.0, 0.0], "bb": [0.8, 0.2], "cc": [0.0, 1.0]}
    model = _model(by_word)
    got = caption_dropout_labels(["cc", "aa", "bb"], model, target_k=3)
    assert set(got) == {"aa", "bb", "cc"}
    got2 = caption_dropout_labels(["aa", "bb"], model, target_k=5)
    assert set(got2) == {"aa", "bb"}


def test_two_dimensional_hand_example():
    # c is farthest from the group centroid and gets dropped first;
    # the survivors order most-central-first against their own centroid
    by_word = {"a": [1.0, 0.0], "b": [0.8, 0.2], "c": [0.0, 1.0]}
    model = _model(by_word)
    assert caption_dropout_labels(["a", "b", "c"], model, target_k=2) == ["a", "b"]


def test_distance_tie_drops_lexicographically_first():
    # centroid (0.5, 0.5) is equidistant from all four words: a pure tie
    by_word = {"aa": [0.0, 1.0], "bb": [0.0, 1.0], "cc": [1.0, 0.0], "dd": [1.0, 0.0]}
    model = _model(by_word)
    got = caption_dropout_labels(["aa", "bb", "cc", "dd"], model, target_k=3)
    assert "aa" not in got
    assert set(got) == {"bb", "cc", "dd"}


def test_words_missing_from_vocabulary_are_ignored():
    by_word = {"aa": [1.0, 0.0], "bb": [0.9, 0.1]}
    model = _model(by_word)
    assert set(caption_dropout_labels(["aa", "zz", "bb"], model, target_k=5)) == {"aa", "bb"}
    assert caption_dropout_labels(["zz"], model, target_k=5) == []


def test_target_k_must_be_positive():
    model = _model({"aa": [1.0, 0.0]})
    with pytest.raises(ValueError):
        caption_dropout_labels(["aa"], model, target_k=0)


# ---------------------------------------------------------------------------
# Abstract labels
# ---------------------------------------------------------------------------


def test_abstract_labels_exclude_caption_words():
    by_word = {
        "caption": [1.0, 0.0],
        "near": [0.95, 0.05],
        "close": [0.9, 0.1],
        "mid": [0.6, 0.4],
        "far": [0.0, 1.0],
    }
    model = _model(by_word)
    got = abstract_labels(["caption"], ["caption", "near", "close", "mid", "far"], model)
    # "far" drags the joint centroid toward the middle, so "mid" ranks first
    assert got == ["mid", "close", "near"]
    assert "caption" not in got


def test_abstract_labels_empty_inputs():
    model = _model({"aa": [1.0, 0.0]})
    assert abstract_labels([], [], model) == []
    assert abstract_labels(["zz"], ["yy"], model) == []


def test_abstract_labels_capped_at_n():
    by_word = {f"w{i}": [1.0, 0.01 * i] for i in range(10)}
    model = _model(by_word)
    got = abstract_labels([], list(by_word), model, n=3)
    assert len(got) == 3


# ---------------------------------------------------------------------------
# Topic naming and assembled labels
# ---------------------------------------------------------------------------

TOPIC_WORDS = ["lattice", "crystal", "grain", "voltage", "current"]


def _planted_topic_model():
    vocab = {w: i for i, w in enumerate(TOPIC_WORDS)}
    counts = np.array(
        [
            [90, 80, 70, 0, 0],  # structural topic
            [0, 0, 0, 90, 80],  # electrical topic
        ],
        dtype=np.int64,
    )
    config = LdaConfig(k=2, alpha=0.1, beta=0.01, iterations=1, infer_iterations=50, seed=3)
    return TopicModel(vocab, counts, np.zeros((1, 2), dtype=np.int64), config)


EMBED = {
    "lattice": [1.0, 0.0],
    "crystal": [0.97, 0.03],
    "grain": [0.9, 0.1],
    "voltage": [0.0, 1.0],
    "current": [0.05, 0.95],
    "sample": [0.7, 0.3],
}


def test_name_topic_picks_central_top_words():
    topics = _planted_topic_model()
    model = _model(EMBED)
    got = name_topic(0, topics, model, n=2)
    assert set(got) <= {"lattice", "crystal", "grain"}
    assert len(got) == 2


def test_name_topic_empty_when_no_overlap():
    topics = _planted_topic_model()
    model = _model({"unrelated": [1.0, 0.0]})
    assert name_topic(0, topics, model) == []


def test_build_labels_without_abstract():
    model = _model(EMBED)
    labels = build_labels("The lattice and crystal of the sample.", None, model, None, 0.8)
    assert set(labels.caption_labels) == {"lattice", "crystal", "sample"}
    assert labels.abstract_labels == ()
    assert labels.topic_label is None
    assert labels.topic_confidence == 0.0


def test_build_labels_with_topic_assignment():
    model = _model(EMBED)
    topics = _planted_topic_model()
    abstract = "The lattice crystal grain lattice crystal grain lattice crystal."
    labels = build_labels("A lattice image.", abstract, model, topics, 0.8)
    assert labels.topic_label is not None
    assert set(labels.topic_label.split()) <= {"lattice", "crystal", "grain"}
    assert labels.topic_confidence >= 0.8
    assert all(w not in {"lattice"} for w in labels.abstract_labels)  # caption word excluded


def test_build_labels_abstains_below_gate():
    model = _model(EMBED)
    topics = _planted_topic_model()
    mixed = "lattice voltage crystal current grain voltage lattice current"
    labels = build_labels("A lattice image.", mixed, model, topics, 0.95)
    assert labels.topic_label is None
    assert labels.topic_confidence == 0.0
