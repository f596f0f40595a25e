"""Term scoring, per-topic concept lists, and the 2-D topic map.

Two scores drive concept selection. Saliency is global: how often a term
occurs times how sharply it discriminates between topics (the KL divergence
of the topic distribution given the term from the overall topic mixture).
Relevance is per topic: a convex blend of the term's in-topic probability
and its lift over the empirical corpus probability, so small weights on
globally rare terms still surface when they are topic specific.

Each topic draws a candidate pool from its support ranked by saliency, then
keeps its best candidates by relevance. A term may appear in only one
topic's list: competing topics resolve by relevance, and the loser moves on
to its next candidate.

The topic map places topics in the plane by classical multidimensional
scaling of pairwise Jensen-Shannon distances between term distributions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .errors import InputError
from .topicmodel import TopicModel

DEFAULT_LAMBDA = 0.33
DEFAULT_N_CONCEPTS = 10
DEFAULT_POOL_SIZE = 30


def saliency_scores(phi: np.ndarray, topic_marginal: np.ndarray,
                    frequencies: np.ndarray) -> np.ndarray:
    """Per-term saliency: frequency(w) * KL(p(t|w) || p(t)), natural log."""
    phi = np.asarray(phi, dtype=np.float64)
    p_t = np.asarray(topic_marginal, dtype=np.float64)
    freq = np.asarray(frequencies, dtype=np.float64)
    joint = phi * p_t[:, None]            # proportional to p(t|w), K x V
    denom = joint.sum(axis=0)
    scores = np.zeros(phi.shape[1])
    for w in np.flatnonzero(denom > 0):
        p_tw = joint[:, w] / denom[w]
        mask = p_tw > 0
        kl = float(np.sum(p_tw[mask] * np.log(p_tw[mask] / p_t[mask])))
        scores[w] = freq[w] * kl
    return scores


def relevance_matrix(phi: np.ndarray, frequencies: np.ndarray,
                     lambda_: float = DEFAULT_LAMBDA,
                     use_log: bool = False) -> np.ndarray:
    """K x V relevance: lambda * p(w|t) + (1 - lambda) * p(w|t) / p(w).

    p(w) is the empirical corpus probability frequency(w) / total tokens.
    With use_log both terms are taken in log space, which is only finite on
    a topic's support; off-support entries become -inf there and 0 lift in
    the plain form.
    """
    if not 0.0 <= lambda_ <= 1.0:
        raise InputError("lambda must lie in [0, 1]")
    phi = np.asarray(phi, dtype=np.float64)
    freq = np.asarray(frequencies, dtype=np.float64)
    total = freq.sum()
    if total <= 0:
        raise InputError("term frequencies are all zero")
    p_w = freq / total
    lift = np.divide(phi, p_w[None, :],
                     out=np.zeros_like(phi), where=p_w[None, :] > 0)
    if use_log:
        # Zero-weight terms are skipped rather than multiplied so that a
        # pure endpoint (lambda 0 or 1) cannot produce 0 * -inf.
        with np.errstate(divide="ignore"):
            parts = []
            if lambda_ > 0.0:
                parts.append(lambda_ * np.log(phi))
            if lambda_ < 1.0:
                parts.append((1.0 - lambda_) * np.log(lift))
        return parts[0] if len(parts) == 1 else parts[0] + parts[1]
    return lambda_ * phi + (1.0 - lambda_) * lift


@dataclass(frozen=True)
class ConceptSelection:
    """Ordered concept lists per topic plus scores for reporting."""
    lambda_: float
    n_concepts: int
    topics: tuple          # tuple per topic of concept term strings
    scores: tuple          # matching tuple of (probability, relevance, saliency)
    flagged_short: tuple   # topic indices that ran out of candidates


def _check_vocab(model: TopicModel, corpus: Corpus) -> None:
    if tuple(model.vocab) != corpus.vocabulary.tokens:
        raise InputError("model vocabulary does not match corpus")


def select_topic_concepts(model: TopicModel, corpus: Corpus,
                          n_concepts: int = DEFAULT_N_CONCEPTS,
                          lambda_: float = DEFAULT_LAMBDA,
                          pool_size: int = DEFAULT_POOL_SIZE) -> ConceptSelection:
    """Pick each topic's concepts, keeping lists disjoint across topics.

    Pools are the `pool_size` most salient terms within each topic's
    support, consumed in relevance order. When two topics want the same
    term the higher relevance wins (first claimant on exact ties), and the
    losing topic continues down its own pool. Topics that exhaust their
    pool early are flagged.
    """
    _check_vocab(model, corpus)
    if n_concepts < 1 or pool_size < 1:
        raise InputError("n_concepts and pool_size must be >= 1")
    freq = corpus.term_frequencies()
    sal = saliency_scores(model.phi, model.topic_marginal, freq)
    rel = relevance_matrix(model.phi, freq, lambda_)
    vocab = model.vocab
    K = model.n_topics

    pools = []
    for t in range(K):
        support = np.flatnonzero(model.phi[t] > 0)
        by_saliency = sorted(support, key=lambda w: (-sal[w], vocab[w]))
        queue = sorted(by_saliency[:pool_size],
                       key=lambda w: (-rel[t, w], vocab[w]))
        pools.append(queue)

    owner: dict = {}
    held: list = [set() for _ in range(K)]
    cursor = [0] * K
    changed = True
    while changed:
        changed = False
        for t in range(K):
            while len(held[t]) < n_concepts and cursor[t] < len(pools[t]):
                w = pools[t][cursor[t]]
                cursor[t] += 1
                if w not in owner:
                    owner[w] = t
                    held[t].add(w)
                    changed = True
                elif rel[t, w] > rel[owner[w], w]:
                    held[owner[w]].discard(w)
                    owner[w] = t
                    held[t].add(w)
                    changed = True

    topics = []
    scores = []
    for t in range(K):
        ordered = sorted(held[t], key=lambda w: (-rel[t, w], vocab[w]))
        topics.append(tuple(vocab[w] for w in ordered))
        scores.append(tuple(
            (float(model.phi[t, w]), float(rel[t, w]), float(sal[w]))
            for w in ordered))
    flagged = tuple(t for t in range(K) if len(topics[t]) < n_concepts)
    return ConceptSelection(lambda_=lambda_, n_concepts=n_concepts,
                            topics=tuple(topics), scores=tuple(scores),
                            flagged_short=flagged)


def jensen_shannon(p, q) -> float:
    """Jensen-Shannon divergence, natural log, in [0, ln 2]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise InputError("distributions differ in length")
    m = 0.5 * (p + q)

    def _kl(a: np.ndarray) -> float:
        mask = a > 0
        return float(np.sum(a[mask] * np.log(a[mask] / m[mask])))

    return 0.5 * (_kl(p) + _kl(q))


def distance_matrix(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    K = phi.shape[0]
    out = np.zeros((K, K))
    for i in range(K):
        for j in range(i + 1, K):
            out[i, j] = out[j, i] = jensen_shannon(phi[i], phi[j])
    return out


def classical_mds(distances: np.ndarray) -> np.ndarray:
    """Embed a distance matrix in the plane by double centering.

    Coordinates use the top two nonnegative eigenpairs of the centered
    squared-distance matrix; deficient directions collapse to zero. Each
    axis is sign-fixed so the largest-magnitude coordinate is positive,
    which removes the reflection ambiguity.
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InputError("distance matrix must be square")
    if not np.allclose(d, d.T, atol=1e-12) or np.any(np.diag(d) != 0):
        raise InputError("distance matrix must be symmetric with zero diagonal")
    k = d.shape[0]
    center = np.eye(k) - np.full((k, k), 1.0 / k)
    b = -0.5 * center @ (d * d) @ center
    eigvals, eigvecs = np.linalg.eigh(b)
    coords = np.zeros((k, 2))
    for axis, i in enumerate(range(k - 1, max(k - 3, -1), -1)):
        lam = eigvals[i]
        if lam <= 0:
            continue
        col = eigvecs[:, i] * math.sqrt(lam)
        pivot = int(np.argmax(np.abs(col)))
        if col[pivot] < 0:
            col = -col
        coords[:, axis] = col
    return coords


@dataclass(frozen=True)
class TopicMap:
    coords: np.ndarray       # K x 2
    proportions: np.ndarray  # K, sums to 1
    distances: np.ndarray    # K x K Jensen-Shannon


def topic_map(model: TopicModel) -> TopicMap:
    d = distance_matrix(model.phi)
    return TopicMap(coords=classical_mds(d),
                    proportions=np.array(model.topic_marginal, copy=True),
                    distances=d)


def write_topics(selection: ConceptSelection, model: TopicModel, path) -> None:
    payload = {
        "lambda": selection.lambda_,
        "n_concepts": selection.n_concepts,
        "topics": [
            {
                "topic": t,
                "proportion": float(model.topic_marginal[t]),
                "flagged_short": t in selection.flagged_short,
                "concepts": [
                    {
                        "term": term,
                        "probability": prob,
                        "relevance": rel,
                        "saliency": sal,
                    }
                    for term, (prob, rel, sal) in zip(selection.topics[t],
                                                      selection.scores[t])
                ],
            }
            for t in range(len(selection.topics))
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_topics(path):
    """Concept term lists per topic, in stored order."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        topics = sorted(payload["topics"], key=lambda t: t["topic"])
        return [[c["term"] for c in t["concepts"]] for t in topics]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed topics file {path}: {exc}") from exc


def write_topic_map(tmap: TopicMap, path) -> None:
    payload = {
        "coords": [[float(x), float(y)] for x, y in tmap.coords],
        "proportions": [float(p) for p in tmap.proportions],
        "distances": [[float(v) for v in row] for row in tmap.distances],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_topic_map(path) -> TopicMap:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return TopicMap(
            coords=np.array(payload["coords"], dtype=np.float64),
            proportions=np.array(payload["proportions"], dtype=np.float64),
            distances=np.array(payload["distances"], dtype=np.float64),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed topic map file {path}: {exc}") from exc
