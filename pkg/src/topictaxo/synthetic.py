"""Synthetic corpus generators for benchmarks and tests.

Vocabulary entries are random letter-only words filtered to be fixed points
of the stemmer and absent from the stopword lists, so preprocessing leaves a
planted corpus exactly as generated (same V, same token streams).
"""

from __future__ import annotations

import numpy as np

from .corpus import DocumentRecord, default_stopwords
from .stem import stem_token

_CONSONANTS = "bcdfghjklmnpqrstvwxz"
_VOWELS = "aeiouy"


def synthetic_vocabulary(size: int, seed: int = 0) -> list:
    """Pronounceable, stem-stable, non-stopword tokens, unique."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 961748927]))
    stop = default_stopwords()
    words = []
    seen = set()
    while len(words) < size:
        n_syll = int(rng.integers(2, 4))
        parts = []
        for _ in range(n_syll):
            parts.append(_CONSONANTS[int(rng.integers(len(_CONSONANTS)))])
            parts.append(_VOWELS[int(rng.integers(len(_VOWELS)))])
        if rng.random() < 0.5:
            parts.append(_CONSONANTS[int(rng.integers(len(_CONSONANTS)))])
        word = "".join(parts)
        if word in seen or word in stop or len(word) < 3:
            continue
        if stem_token(word) != word:
            continue
        seen.add(word)
        words.append(word)
    return words


def planted_topics(n_topics: int, vocab_size: int, seed: int = 0,
                   zipf: float = 1.0) -> np.ndarray:
    """Block-disjoint term distributions: topic t owns an equal slice of the
    vocabulary with Zipf-decaying weights inside the slice."""
    if vocab_size % n_topics:
        raise ValueError("vocab_size must be divisible by n_topics")
    block = vocab_size // n_topics
    weights = 1.0 / np.arange(1, block + 1) ** zipf
    weights /= weights.sum()
    phi = np.zeros((n_topics, vocab_size))
    for t in range(n_topics):
        phi[t, t * block:(t + 1) * block] = weights
    return phi


def planted_corpus_records(phi_star: np.ndarray, vocab, n_docs: int,
                           doc_len: int = 60, doc_topic_alpha: float = 0.08,
                           seed: int = 0, sentence_len: int = 12) -> list:
    """Sample documents from a planted topic model.

    Each document draws a topic mixture from Dirichlet(doc_topic_alpha) and
    doc_len tokens; the abstract is the tokens joined into short sentences so
    the corpus builder's sentence index stays meaningful.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 323202633]))
    n_topics, vocab_size = phi_star.shape
    if len(vocab) != vocab_size:
        raise ValueError("vocab length must match phi_star width")
    records = []
    for d in range(n_docs):
        theta = rng.dirichlet(np.full(n_topics, doc_topic_alpha))
        topics = rng.choice(n_topics, size=doc_len, p=theta)
        tokens = [
            vocab[int(rng.choice(vocab_size, p=phi_star[t]))] for t in topics
        ]
        sentences = [
            " ".join(tokens[i:i + sentence_len]) + "."
            for i in range(0, len(tokens), sentence_len)
        ]
        records.append(DocumentRecord(
            id=f"doc{d:05d}",
            title=f"synthetic abstract {d}",
            abstract=" ".join(sentences),
        ))
    return records
