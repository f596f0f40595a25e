"""Topic coherence from boolean sliding-window co-occurrence.

A virtual window of fixed width slides over each document's token stream,
one position at a time; a document shorter than the window contributes a
single window holding the whole document. From the window/word incidence we
get marginal and joint probabilities, normalized pointwise mutual
information, and finally the coherence of a topic's top terms under
one-set segmentation: each top word's NPMI context vector is compared,
by cosine, against the vector summed over all top words, and the topic
score is the mean of those similarities.

Counting is done without materializing windows. The windows that contain a
token at position p form a contiguous index interval, so a word's window
count is the total length of a union of intervals and a pair's joint count
is the length of the intersection of two such unions. A brute-force window
enumerator in the test suite checks this bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import Corpus
from .errors import InputError
from .topicmodel import TopicModel, top_terms

NPMI_EPS = 1e-12
DEFAULT_WINDOW = 110
DEFAULT_TOP_N = 10


def _merged_intervals(positions, length: int, window: int):
    """Union of window-index intervals covering any of the positions.

    Window s covers token positions [s, s + window); the document has
    max(1, length - window + 1) windows. Positions must be sorted.
    """
    if length <= window:
        return [(0, 0)] if positions else []
    last_start = length - window
    merged = []
    for p in positions:
        lo = max(0, p - window + 1)
        hi = min(p, last_start)
        if merged and lo <= merged[-1][1] + 1:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


def _union_size(intervals) -> int:
    return sum(hi - lo + 1 for lo, hi in intervals)


def _intersection_size(a, b) -> int:
    i = j = total = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo <= hi:
            total += hi - lo + 1
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return total


@dataclass(frozen=True)
class WindowStats:
    """Window counts for a fixed word set over a reference corpus."""
    window: int
    n_windows: int
    counts: dict = field(default_factory=dict)
    pair_counts: dict = field(default_factory=dict)

    def probability(self, word: str) -> float:
        return self.counts.get(word, 0) / self.n_windows

    def joint_probability(self, a: str, b: str) -> float:
        key = (a, b) if a <= b else (b, a)
        return self.pair_counts.get(key, 0) / self.n_windows


def window_stats(corpus: Corpus, words, window: int = DEFAULT_WINDOW) -> WindowStats:
    if window < 1:
        raise InputError("window width must be >= 1")
    words = sorted(set(words))
    word_ids = {corpus.vocabulary.index[w]: w for w in words
                if w in corpus.vocabulary}
    n_windows = 0
    counts = {w: 0 for w in words}
    pair_counts: dict = {}
    for doc in corpus.docs:
        length = len(doc)
        if length == 0:
            continue
        n_windows += max(1, length - window + 1)
        positions: dict = {}
        for pos, tok in enumerate(doc):
            if tok in word_ids:
                positions.setdefault(word_ids[tok], []).append(pos)
        if not positions:
            continue
        present = sorted(positions)
        spans = {w: _merged_intervals(positions[w], length, window)
                 for w in present}
        for w in present:
            counts[w] += _union_size(spans[w])
        for i, a in enumerate(present):
            for b in present[i + 1:]:
                joint = _intersection_size(spans[a], spans[b])
                if joint:
                    key = (a, b)
                    pair_counts[key] = pair_counts.get(key, 0) + joint
    return WindowStats(window=window, n_windows=n_windows,
                       counts=counts, pair_counts=pair_counts)


def npmi(stats: WindowStats, a: str, b: str, eps: float = NPMI_EPS) -> float:
    """Normalized pointwise mutual information of two words, in about [-1, 1].

    Marginal probabilities must be positive; callers drop absent words first.
    The epsilon keeps zero joint counts finite, at the cost of letting the
    value stray from the ideal bounds by a vanishing amount.
    """
    p_a = stats.probability(a)
    p_b = stats.probability(b)
    if p_a <= 0 or p_b <= 0:
        raise InputError("npmi needs words with nonzero window counts")
    p_ab = stats.probability(a) if a == b else stats.joint_probability(a, b)
    pmi = math.log((p_ab + eps) / (p_a * p_b))
    return pmi / -math.log(p_ab + eps)


def _cosine(u, v) -> float:
    dot = math.fsum(x * y for x, y in zip(u, v))
    nu = math.sqrt(math.fsum(x * x for x in u))
    nv = math.sqrt(math.fsum(y * y for y in v))
    if nu == 0 or nv == 0:
        return 0.0
    return dot / (nu * nv)


@dataclass(frozen=True)
class CoherenceResult:
    mean: float
    per_topic: tuple
    flagged: tuple  # topic indices scored 0 for lack of usable top words


def coherence_cv(model: TopicModel, stats_corpus: Corpus,
                 top_n: int = DEFAULT_TOP_N,
                 window: int = DEFAULT_WINDOW) -> CoherenceResult:
    """Mean coherence over topics; degenerate topics score 0 and are flagged.

    A topic is degenerate here when fewer than two of its top terms occur in
    the reference corpus, which leaves nothing to segment. Those zeros stay
    in the mean rather than being dropped, so a model full of unusable
    topics scores low instead of being quietly excused.
    """
    tops = [[w for w, _ in top_terms(model, t, top_n)]
            for t in range(model.n_topics)]
    vocab_needed = sorted({w for ws in tops for w in ws})
    stats = window_stats(stats_corpus, vocab_needed, window=window)

    scores = []
    flagged = []
    for t, words in enumerate(tops):
        usable = [w for w in words if stats.counts.get(w, 0) > 0]
        if len(usable) < 2:
            scores.append(0.0)
            flagged.append(t)
            continue
        vectors = [[npmi(stats, wi, wj) for wj in usable] for wi in usable]
        summed = [math.fsum(col) for col in zip(*vectors)]
        sims = [_cosine(vec, summed) for vec in vectors]
        scores.append(math.fsum(sims) / len(sims))
    mean = math.fsum(scores) / len(scores) if scores else 0.0
    return CoherenceResult(mean=mean, per_topic=tuple(scores),
                           flagged=tuple(flagged))
