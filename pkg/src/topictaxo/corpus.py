"""Corpus ingestion and preprocessing.

Pipeline: JSONL records -> staged token streams (per document, per sentence)
-> optional collocation merge -> `Corpus` with a sparse document-term matrix.

Guarantees the rest of the package relies on:

  * token ids are assigned in sorted token order, so a corpus built from the
    same records in any order has the identical vocabulary;
  * every document stream is the concatenation of its sentence streams;
  * preprocessing is idempotent on its own output (fixed-point stemming plus
    filters applied to both the surface token and the stem).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import sparse

from .errors import InputError
from .stem import stem_token

# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class DocumentRecord:
    """One bibliographic record; `abstract` is the analyzed text."""

    id: str
    title: str = ""
    abstract: str = ""


def read_records(path) -> list[DocumentRecord]:
    """Read a JSONL corpus file ({"id", "title", "abstract"} per line).

    Raises InputError naming the offending line number (1-based) for parse
    or schema problems, and the offending id for duplicates.
    """
    records = []
    seen = set()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read corpus file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(raw, dict) or "id" not in raw:
            raise InputError(f"line {lineno}: record must be an object with an 'id'")
        doc_id = str(raw["id"])
        if doc_id in seen:
            raise InputError(f"line {lineno}: duplicate document id '{doc_id}'")
        seen.add(doc_id)
        abstract = raw.get("abstract", "")
        title = raw.get("title", "")
        if abstract is None:
            abstract = ""
        if not isinstance(abstract, str) or not isinstance(title, str):
            raise InputError(f"line {lineno}: title/abstract must be strings")
        records.append(DocumentRecord(id=doc_id, title=title, abstract=abstract))
    return records


def write_records(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(
                {"id": rec.id, "title": rec.title, "abstract": rec.abstract},
                ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# wordlists / rules


@lru_cache(maxsize=None)
def load_wordlist(name: str) -> tuple[str, ...]:
    """Load a bundled data file (one token per line, '#' comments)."""
    text = resources.files("topictaxo.data").joinpath(name).read_text("utf-8")
    out = []
    for line in text.splitlines():
        word = line.split("#", 1)[0].strip().lower()
        if word:
            out.append(word)
    return tuple(out)


def default_stopwords(extra=()) -> frozenset:
    """General English stopwords plus publication-venue noise."""
    words = set(load_wordlist("stopwords_english.txt"))
    words.update(load_wordlist("stopwords_publication.txt"))
    words.update(w.lower() for w in extra)
    return frozenset(words)


@dataclass(frozen=True)
class PreprocessRules:
    """Token normalization policy.

    split_pattern is applied to lowercased text; everything it matches is a
    separator, so digits and punctuation vanish. Filters run on the surface
    token and again on the stem, which keeps preprocessing idempotent.
    """

    stopwords: frozenset = field(default_factory=default_stopwords)
    min_token_len: int = 3
    split_pattern: str = r"[^a-z]+"


_SENT_BOUNDARY = re.compile(r"[.!?]+(?=\s)")
_LETTER_RUN = re.compile(r"[A-Za-z]+$")


def split_sentences(text: str) -> list[str]:
    """Split on sentence-final punctuation followed by whitespace.

    A period right after a single letter (initials, "E.g.") does not end a
    sentence. Punctuation stays with its sentence; only the inter-sentence
    whitespace is consumed.
    """
    pieces = []
    start = 0
    for match in _SENT_BOUNDARY.finditer(text):
        if match.group(0) == ".":
            run = _LETTER_RUN.search(text, 0, match.start())
            if run is not None and len(run.group(0)) == 1:
                continue  # single-letter initial, not a boundary
        end = match.end()
        piece = text[start:end].strip()
        if piece:
            pieces.append(piece)
        start = end
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)
    return pieces


def preprocess_tokens(text: str, rules: PreprocessRules | None = None) -> list[str]:
    """Lowercase, split, filter stopwords/short tokens, stem survivors."""
    if rules is None:
        rules = PreprocessRules()
    out = []
    for token in re.split(rules.split_pattern, text.lower()):
        if len(token) < rules.min_token_len or token in rules.stopwords:
            continue
        stemmed = stem_token(token)
        if len(stemmed) < rules.min_token_len or stemmed in rules.stopwords:
            continue
        out.append(stemmed)
    return out


# ---------------------------------------------------------------------------
# staging


@dataclass(frozen=True)
class Staging:
    """Tokenized corpus before vocabulary filtering: per-document sentence
    streams of stemmed tokens."""

    doc_ids: tuple
    sentence_tokens: tuple  # doc -> tuple of sentences -> tuple of tokens

    def doc_stream(self, d: int) -> list[str]:
        return [t for sent in self.sentence_tokens[d] for t in sent]


def ingest_corpus(records, rules: PreprocessRules | None = None) -> Staging:
    """Tokenize records sentence-by-sentence into a Staging."""
    if rules is None:
        rules = PreprocessRules()
    ids = []
    docs = []
    for rec in records:
        ids.append(rec.id)
        sentences = []
        for sent in split_sentences(rec.abstract):
            tokens = preprocess_tokens(sent, rules)
            if tokens:
                sentences.append(tuple(tokens))
        docs.append(tuple(sentences))
    if len(set(ids)) != len(ids):
        raise InputError("duplicate document ids in records")
    return Staging(doc_ids=tuple(ids), sentence_tokens=tuple(docs))


@dataclass(frozen=True)
class BigramPolicy:
    """Collocation scoring: score(a, b) = (count(ab) - min_count) * N
    / (count(a) * count(b)), merged when score >= threshold.

    keep_parts=False replaces the pair with "a_b"; True keeps the parts and
    inserts the merged token after them.
    """

    min_count: int = 5
    threshold: float = 10.0
    keep_parts: bool = False


def score_bigrams(staging: Staging, policy: BigramPolicy | None = None) -> dict:
    """Score adjacent in-sentence token pairs; returns {(a, b): score} for
    pairs meeting the threshold."""
    if policy is None:
        policy = BigramPolicy()
    unigram: dict[str, int] = {}
    pair: dict[tuple, int] = {}
    total = 0
    for sentences in staging.sentence_tokens:
        for sent in sentences:
            total += len(sent)
            for tok in sent:
                unigram[tok] = unigram.get(tok, 0) + 1
            for a, b in zip(sent, sent[1:]):
                pair[(a, b)] = pair.get((a, b), 0) + 1
    accepted = {}
    for (a, b), n_ab in pair.items():
        score = (n_ab - policy.min_count) * total / (unigram[a] * unigram[b])
        if score >= policy.threshold:
            accepted[(a, b)] = score
    return accepted


def detect_bigrams(staging: Staging, policy: BigramPolicy | None = None) -> Staging:
    """Greedy left-to-right merge of accepted pairs within each sentence."""
    if policy is None:
        policy = BigramPolicy()
    accepted = score_bigrams(staging, policy)
    if not accepted:
        return staging
    new_docs = []
    for sentences in staging.sentence_tokens:
        new_sents = []
        for sent in sentences:
            merged = []
            i = 0
            while i < len(sent):
                if i + 1 < len(sent) and (sent[i], sent[i + 1]) in accepted:
                    joined = sent[i] + "_" + sent[i + 1]
                    if policy.keep_parts:
                        merged.extend((sent[i], sent[i + 1], joined))
                    else:
                        merged.append(joined)
                    i += 2
                else:
                    merged.append(sent[i])
                    i += 1
            new_sents.append(tuple(merged))
        new_docs.append(tuple(new_sents))
    return replace(staging, sentence_tokens=tuple(new_docs))


# ---------------------------------------------------------------------------
# corpus


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple  # id -> token, sorted
    index: dict    # token -> id

    @classmethod
    def from_tokens(cls, tokens) -> "Vocabulary":
        ordered = tuple(sorted(set(tokens)))
        return cls(tokens=ordered, index={t: i for i, t in enumerate(ordered)})

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token) -> bool:
        return token in self.index


@dataclass(frozen=True)
class Corpus:
    """Immutable preprocessed corpus.

    docs[d] is a tuple of token ids; sentences are (doc_index, token ids)
    pairs whose per-document concatenation equals docs[d]; doc_term is a
    csr_matrix of counts with row sums == document lengths.
    """

    doc_ids: tuple
    docs: tuple
    sentences: tuple
    vocabulary: Vocabulary
    doc_term: sparse.csr_matrix
    total_tokens: int

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    @property
    def n_terms(self) -> int:
        return len(self.vocabulary)

    def term_frequencies(self) -> np.ndarray:
        """Corpus-wide token counts (column sums of doc_term)."""
        return np.asarray(self.doc_term.sum(axis=0)).ravel()

    def doc_tokens(self, d: int) -> list[str]:
        return [self.vocabulary.tokens[i] for i in self.docs[d]]


def build_doc_term_matrix(staging: Staging, min_doc_freq: int = 2) -> Corpus:
    """Filter rare tokens, assign canonical ids, build the count matrix."""
    doc_sets = [set(staging.doc_stream(d)) for d in range(len(staging.doc_ids))]
    df: dict[str, int] = {}
    for toks in doc_sets:
        for tok in toks:
            df[tok] = df.get(tok, 0) + 1
    kept = [tok for tok, n in df.items() if n >= min_doc_freq]
    if not kept:
        raise InputError("corpus degenerate: empty vocabulary after filtering")
    vocab = Vocabulary.from_tokens(kept)

    docs = []
    sentences = []
    rows, cols, vals = [], [], []
    total = 0
    for d, sents in enumerate(staging.sentence_tokens):
        stream = []
        for sent in sents:
            ids = tuple(vocab.index[t] for t in sent if t in vocab.index)
            if ids:
                sentences.append((d, ids))
                stream.extend(ids)
        docs.append(tuple(stream))
        total += len(stream)
        counts: dict[int, int] = {}
        for i in stream:
            counts[i] = counts.get(i, 0) + 1
        for i, c in sorted(counts.items()):
            rows.append(d)
            cols.append(i)
            vals.append(c)
    matrix = sparse.csr_matrix(
        (vals, (rows, cols)),
        shape=(len(staging.doc_ids), len(vocab)),
        dtype=np.int64,
    )
    matrix.data.setflags(write=False)
    return Corpus(
        doc_ids=staging.doc_ids,
        docs=tuple(docs),
        sentences=tuple(sentences),
        vocabulary=vocab,
        doc_term=matrix,
        total_tokens=total,
    )


def subset_corpus(corpus: Corpus, doc_indices) -> Corpus:
    """Corpus restricted to the given document positions, in the given order.

    The vocabulary is kept as-is rather than re-filtered, so models trained
    on a subset stay comparable with the parent corpus and with held-out
    documents drawn from it. Terms whose support lies entirely outside the
    subset simply end up with zero counts.
    """
    idx = [int(d) for d in doc_indices]
    if not idx:
        raise InputError("document subset is empty")
    if len(set(idx)) != len(idx):
        raise InputError("document subset has duplicates")
    if min(idx) < 0 or max(idx) >= corpus.n_docs:
        raise InputError("document index out of range")
    remap = {old: new for new, old in enumerate(idx)}
    docs = tuple(corpus.docs[d] for d in idx)
    sentences = tuple(
        (remap[d], toks) for d, toks in corpus.sentences if d in remap)
    sentences = tuple(sorted(sentences, key=lambda pair: pair[0]))
    matrix = corpus.doc_term[idx].copy()
    matrix.data.setflags(write=False)
    return Corpus(
        doc_ids=tuple(corpus.doc_ids[d] for d in idx),
        docs=docs,
        sentences=sentences,
        vocabulary=corpus.vocabulary,
        doc_term=matrix,
        total_tokens=sum(len(doc) for doc in docs),
    )


def build_corpus(records, rules: PreprocessRules | None = None,
                 bigrams: BigramPolicy | None = None,
                 min_doc_freq: int = 2) -> Corpus:
    """Convenience composition: ingest -> (optional bigram merge) -> matrix."""
    staging = ingest_corpus(records, rules)
    if bigrams is not None:
        staging = detect_bigrams(staging, bigrams)
    return build_doc_term_matrix(staging, min_doc_freq=min_doc_freq)


def save_corpus(corpus: Corpus, path) -> None:
    payload = {
        "doc_ids": list(corpus.doc_ids),
        "vocab": list(corpus.vocabulary.tokens),
        "docs": [list(doc) for doc in corpus.docs],
        "sentences": [[d, list(ids)] for d, ids in corpus.sentences],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False)


def load_corpus(path) -> Corpus:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read corpus artifact {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"corpus artifact {path} is not valid JSON") from exc
    vocab = Vocabulary(
        tokens=tuple(payload["vocab"]),
        index={t: i for i, t in enumerate(payload["vocab"])},
    )
    docs = tuple(tuple(doc) for doc in payload["docs"])
    rows, cols, vals = [], [], []
    total = 0
    for d, doc in enumerate(docs):
        total += len(doc)
        counts: dict[int, int] = {}
        for i in doc:
            counts[i] = counts.get(i, 0) + 1
        for i, c in sorted(counts.items()):
            rows.append(d)
            cols.append(i)
            vals.append(c)
    matrix = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(len(docs), len(vocab)), dtype=np.int64)
    matrix.data.setflags(write=False)
    return Corpus(
        doc_ids=tuple(payload["doc_ids"]),
        docs=docs,
        sentences=tuple((d, tuple(ids)) for d, ids in payload["sentences"]),
        vocabulary=vocab,
        doc_term=matrix,
        total_tokens=total,
    )
