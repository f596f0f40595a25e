#!/usr/bin/env python3
"""Generate the bundled corpora under tests/data/.

Three fixtures, all deterministic (fixed seeds, stable iteration order):

* planted4.jsonl — 800 documents of ~60 tokens drawn from four disjoint
  50-word topic vocabularies (V = 200). Regular documents mix one dominant
  topic with a small cross-topic admixture; every tenth document is a
  "noise" document sampled uniformly from the tail words of all four
  vocabularies. The noise documents give any topic count above four a
  low-coherence attractor topic, so coherence peaks at the planted count
  instead of staying flat as topics split.
* mini.jsonl — 40 short documents over two 10-word topic vocabularies with
  verb-bearing sentences, small enough for fast pipeline and CLI tests
  while still producing a non-empty knowledge graph.
* reference.json — a reference taxonomy matching mini.jsonl's two topics,
  with inflected surface forms to exercise concept canonicalization.

Every generated token is chosen so the package's own preprocessing keeps
it intact: lowercase alphabetic, longer than the minimum length, not a
stopword, not resolvable as a relation verb, and a fixed point of the
stemmer (so the written text equals the token stream the models see).

Run from the repository root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import itertools
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from topictaxo.corpus import (PreprocessRules, build_doc_term_matrix,
                              default_stopwords, ingest_corpus, load_wordlist,
                              read_records)
from topictaxo.stem import stem_token

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"

N_TOPICS = 4
WORDS_PER_TOPIC = 50
N_DOCS = 800
DOC_LEN_LO, DOC_LEN_HI = 54, 67     # ~60 tokens per document
ADMIXTURE = 0.20                    # probability mass off the dominant topic
NOISE_EVERY = 10                    # every tenth document is a noise document
TAIL_FROM = 23                      # noise documents draw ranks >= this
ZIPF_SHIFT, ZIPF_EXP = 2.7, 0.85    # within-topic rank-frequency shape
SENTENCE_LEN = 9

MINI_DOCS = 40
MINI_WORDS_PER_TOPIC = 10
MINI_VERBS = ("drive", "support", "control", "enable", "shape", "limit")


def token_pool(n_words: int) -> list:
    """Deterministic supply of synthetic tokens that survive preprocessing.

    Candidates are consonant-vowel trigram pairs ("bakelo", "dafemu", ...);
    each must be its own stem, not a stopword, and not a lexicon verb, so
    preprocessing and concept canonicalization both map it to itself.
    """
    consonants = "bdfgklmnprstvz"
    vowels = "aeiou"
    stopwords = default_stopwords()
    verb_stems = {stem_token(v) for v in load_wordlist("verbs.txt")}
    syllables = [c + v for c, v in itertools.product(consonants, vowels)]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(613)))
    order = rng.permutation(len(syllables) ** 3)
    m = len(syllables)
    words = []
    seen = set()
    for code in order:
        a, rest = divmod(int(code), m * m)
        b, c = divmod(rest, m)
        word = syllables[a] + syllables[b] + syllables[c]
        if word in seen or word in stopwords:
            continue
        if stem_token(word) != word or word in verb_stems:
            continue
        seen.add(word)
        words.append(word)
        if len(words) == n_words:
            return words
    raise RuntimeError("token pool exhausted")


def as_sentences(tokens, length: int = SENTENCE_LEN) -> str:
    chunks = [tokens[i:i + length] for i in range(0, len(tokens), length)]
    return " ".join(" ".join(chunk) + "." for chunk in chunks)


def write_planted4(words, path: Path) -> None:
    topic_words = [
        np.array(words[t * WORDS_PER_TOPIC:(t + 1) * WORDS_PER_TOPIC])
        for t in range(N_TOPICS)
    ]
    ranks = np.arange(WORDS_PER_TOPIC, dtype=np.float64)
    weights = 1.0 / (ranks + ZIPF_SHIFT) ** ZIPF_EXP
    word_probs = weights / weights.sum()
    tail_words = np.array([topic_words[t][r] for t in range(N_TOPICS)
                           for r in range(TAIL_FROM, WORDS_PER_TOPIC)])

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(4613)))
    with open(path, "w", encoding="utf-8") as fh:
        for d in range(N_DOCS):
            length = int(rng.integers(DOC_LEN_LO, DOC_LEN_HI))
            if d % NOISE_EVERY == NOISE_EVERY - 1:
                tokens = [str(tail_words[i]) for i in
                          rng.integers(len(tail_words), size=length)]
            else:
                dominant = d % N_TOPICS
                mix = np.full(N_TOPICS, ADMIXTURE / (N_TOPICS - 1))
                mix[dominant] = 1.0 - ADMIXTURE
                topics = rng.choice(N_TOPICS, size=length, p=mix)
                picks = rng.choice(WORDS_PER_TOPIC, size=length,
                                   p=word_probs)
                tokens = [str(topic_words[t][w])
                          for t, w in zip(topics, picks)]
            record = {"id": f"doc{d:03d}", "title": "",
                      "abstract": as_sentences(tokens)}
            fh.write(json.dumps(record) + "\n")


def write_mini(words, path: Path, reference_path: Path) -> None:
    """Two clean topics with verb-bearing, partly cross-topic sentences."""
    side = [words[:MINI_WORDS_PER_TOPIC],
            words[MINI_WORDS_PER_TOPIC:2 * MINI_WORDS_PER_TOPIC]]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(2613)))
    with open(path, "w", encoding="utf-8") as fh:
        for d in range(MINI_DOCS):
            dominant = d % 2
            sentences = []
            for s in range(4):
                own = [side[dominant][int(i)]
                       for i in rng.choice(MINI_WORDS_PER_TOPIC, size=3,
                                           replace=False)]
                verb = MINI_VERBS[int(rng.integers(len(MINI_VERBS)))] + "s"
                if s == 1:  # one cross-topic relation sentence per document
                    other = side[1 - dominant][
                        int(rng.integers(MINI_WORDS_PER_TOPIC))]
                    sentences.append(
                        f"the {own[0]} {verb} the {other} near the {own[1]}.")
                else:
                    sentences.append(
                        f"the {own[0]} {verb} the {own[1]} and the {own[2]}.")
            record = {"id": f"m{d:02d}", "title": "",
                      "abstract": " ".join(sentences)}
            fh.write(json.dumps(record) + "\n")

    themes = []
    for name, vocab in (("alpha", side[0]), ("beta", side[1])):
        concepts = [w + "s" for w in vocab[:6]]        # inflected variants
        concepts.append(f"{name} studies")             # unmatched extra
        themes.append({"name": name, "concepts": concepts})
    with open(reference_path, "w", encoding="utf-8") as fh:
        json.dump({"themes": themes}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def check(path: Path, n_docs: int, vocab_size: int) -> None:
    records = read_records(path)
    staging = ingest_corpus(records, PreprocessRules())
    corpus = build_doc_term_matrix(staging, min_doc_freq=2)
    lengths = [len(list(staging.doc_stream(d))) for d in range(len(records))]
    assert corpus.n_docs == n_docs, corpus.n_docs
    assert len(corpus.vocabulary.tokens) == vocab_size, \
        len(corpus.vocabulary.tokens)
    print(f"{path.name}: {corpus.n_docs} docs, V={len(corpus.vocabulary.tokens)}, "
          f"mean length {sum(lengths) / len(lengths):.1f}")


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    words = token_pool(N_TOPICS * WORDS_PER_TOPIC + 2 * MINI_WORDS_PER_TOPIC)
    planted_words = words[:N_TOPICS * WORDS_PER_TOPIC]
    mini_words = words[N_TOPICS * WORDS_PER_TOPIC:]

    write_planted4(planted_words, DATA_DIR / "planted4.jsonl")
    check(DATA_DIR / "planted4.jsonl", N_DOCS, N_TOPICS * WORDS_PER_TOPIC)

    write_mini(mini_words, DATA_DIR / "mini.jsonl",
               DATA_DIR / "reference.json")
    check(DATA_DIR / "mini.jsonl", MINI_DOCS, 2 * MINI_WORDS_PER_TOPIC + 7)

    with open(DATA_DIR / "words_planted4.json", "w", encoding="utf-8") as fh:
        json.dump({"topics": [
            planted_words[t * WORDS_PER_TOPIC:(t + 1) * WORDS_PER_TOPIC]
            for t in range(N_TOPICS)]}, fh, indent=2)
        fh.write("\n")
    print("fixtures written to", DATA_DIR)


if __name__ == "__main__":
    main()
