"""Latent topic training by collapsed Gibbs sampling.

The sampler keeps the classic count tables (topic-term, topic totals,
document-topic), removes a token's current assignment, samples a new topic
from the full conditional

    p(k | rest) ~ (n_kw + beta) / (n_k + V*beta) * (n_dk + alpha)

and reinserts it. Point estimates are posterior means averaged over
post-burn-in states visited every `sample_lag` sweeps.

Determinism contract: random draws come from per-document streams keyed by
(seed, canonical document rank), documents are swept in sorted-doc-id order,
and token ids are canonical (see corpus module). Identical corpus, config and
seed therefore reproduce phi and theta bit for bit, independent of document
order in the input records and of any outer parallelism.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .corpus import Corpus
from .errors import InputError
from .topicmodel import TopicModel


@dataclass(frozen=True)
class LdaConfig:
    n_topics: int
    alpha: float = 0.1
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    sample_lag: int = 10
    seed: int = 0

    def validate(self) -> None:
        if self.n_topics < 1:
            raise InputError("n_topics must be >= 1")
        if self.alpha <= 0 or self.beta <= 0:
            raise InputError("alpha and beta must be positive")
        if self.iterations <= self.burn_in:
            raise InputError("iterations must exceed burn_in")
        if self.burn_in < 0 or self.sample_lag < 1:
            raise InputError("burn_in must be >= 0 and sample_lag >= 1")
        if self.seed < 0:
            raise InputError("seed must be non-negative")


@njit(cache=True, nogil=True)
def _sweep(tokens, doc_of, z, nkw, nk, ndk, alpha, beta, uniforms, K, V):
    for i in range(tokens.shape[0]):
        w = tokens[i]
        d = doc_of[i]
        k = z[i]
        nkw[k, w] -= 1
        nk[k] -= 1
        ndk[d, k] -= 1
        total = 0.0
        for kk in range(K):
            total += (nkw[kk, w] + beta) / (nk[kk] + V * beta) * (ndk[d, kk] + alpha)
        r = uniforms[i] * total
        acc = 0.0
        knew = K - 1
        for kk in range(K):
            acc += (nkw[kk, w] + beta) / (nk[kk] + V * beta) * (ndk[d, kk] + alpha)
            if r < acc:
                knew = kk
                break
        z[i] = knew
        nkw[knew, w] += 1
        nk[knew] += 1
        ndk[d, knew] += 1


@njit(cache=True, nogil=True)
def _fold_in_sweep(tokens, z, ndk, phi_cols, alpha, uniforms, K):
    # phi is frozen: phi_cols[k, j] = phi[k, tokens[j]] precomputed per token
    for i in range(tokens.shape[0]):
        k = z[i]
        ndk[k] -= 1
        total = 0.0
        for kk in range(K):
            total += phi_cols[kk, i] * (ndk[kk] + alpha)
        r = uniforms[i] * total
        acc = 0.0
        knew = K - 1
        for kk in range(K):
            acc += phi_cols[kk, i] * (ndk[kk] + alpha)
            if r < acc:
                knew = kk
                break
        z[i] = knew
        ndk[knew] += 1


def _doc_generators(seed: int, n_docs: int) -> list:
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, rank])))
        for rank in range(n_docs)
    ]


def train_lda(corpus: Corpus, config: LdaConfig, kind: str = "lda") -> TopicModel:
    """Fit a topic model on the corpus; `kind` tags the result ("lda" or
    "bilda" for the collocation-merged variant)."""
    config.validate()
    if kind not in ("lda", "bilda"):
        raise InputError(f"train_lda cannot produce kind '{kind}'")
    K = config.n_topics
    V = corpus.n_terms
    D = corpus.n_docs
    if K > V:
        raise InputError("K exceeds vocabulary")

    order = sorted(range(D), key=lambda d: corpus.doc_ids[d])
    lengths = np.array([len(corpus.docs[d]) for d in order], dtype=np.int64)
    tokens = np.empty(int(lengths.sum()), dtype=np.int32)
    doc_of = np.empty_like(tokens)
    pos = 0
    for rank, d in enumerate(order):
        doc = corpus.docs[d]
        tokens[pos:pos + len(doc)] = doc
        doc_of[pos:pos + len(doc)] = rank
        pos += len(doc)

    gens = _doc_generators(config.seed, D)

    z = np.empty_like(tokens)
    pos = 0
    for rank in range(D):
        n = int(lengths[rank])
        if n:
            z[pos:pos + n] = np.floor(gens[rank].random(n) * K).astype(np.int32)
            pos += n
    np.clip(z, 0, K - 1, out=z)

    nkw = np.zeros((K, V), dtype=np.int64)
    nk = np.zeros(K, dtype=np.int64)
    ndk = np.zeros((D, K), dtype=np.int64)
    np.add.at(nkw, (z, tokens), 1)
    np.add.at(nk, z, 1)
    np.add.at(ndk, (doc_of, z), 1)

    phi_acc = np.zeros((K, V), dtype=np.float64)
    theta_acc = np.zeros((D, K), dtype=np.float64)
    n_samples = 0
    uniforms = np.empty(tokens.shape[0], dtype=np.float64)
    for it in range(config.iterations):
        pos = 0
        for rank in range(D):
            n = int(lengths[rank])
            if n:
                uniforms[pos:pos + n] = gens[rank].random(n)
                pos += n
        _sweep(tokens, doc_of, z, nkw, nk, ndk,
               config.alpha, config.beta, uniforms, K, V)
        if it >= config.burn_in and (it - config.burn_in) % config.sample_lag == 0:
            phi_acc += (nkw + config.beta) / (nk + V * config.beta)[:, None]
            theta_acc += (ndk + config.alpha) / (
                lengths + K * config.alpha)[:, None]
            n_samples += 1

    phi = phi_acc / n_samples
    theta_canonical = theta_acc / n_samples
    theta = np.empty((D, K), dtype=np.float64)
    for rank, d in enumerate(order):
        theta[d] = theta_canonical[rank]

    doc_lengths = np.array([len(doc) for doc in corpus.docs], dtype=np.float64)
    marginal = doc_lengths @ theta / doc_lengths.sum()

    return TopicModel(
        kind=kind,
        config=asdict(config),
        vocab=corpus.vocabulary.tokens,
        phi=phi,
        theta=theta,
        topic_marginal=marginal,
    )


def _content_key(ids: np.ndarray) -> int:
    digest = hashlib.sha256(ids.astype("<i8").tobytes()).digest()
    return int.from_bytes(digest[:8], "little")


def infer_doc_topics(model: TopicModel, tokens, iterations: int | None = None,
                     burn_in: int | None = None, sample_lag: int | None = None) -> np.ndarray:
    """Fold-in inference of a topic mixture for one document, phi frozen.

    `tokens` are strings; tokens outside the model vocabulary are skipped.
    The random stream is keyed by (model seed, document content), so results
    do not depend on the document's position in a batch.
    """
    if model.kind == "lsi":
        raise InputError("inference undefined for LSI models")
    K = model.n_topics
    cfg = model.config
    iterations = cfg.get("iterations", 1000) if iterations is None else iterations
    burn_in = cfg.get("burn_in", 200) if burn_in is None else burn_in
    sample_lag = cfg.get("sample_lag", 10) if sample_lag is None else sample_lag
    if iterations <= burn_in:
        raise InputError("iterations must exceed burn_in")
    alpha = float(cfg.get("alpha", 0.1))

    vocab_index = {t: i for i, t in enumerate(model.vocab)}
    ids = np.array([vocab_index[t] for t in tokens if t in vocab_index],
                   dtype=np.int64)
    if ids.size == 0:
        return np.full(K, 1.0 / K)

    seed = int(cfg.get("seed", 0))
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([seed, _content_key(ids)])))

    phi_cols = np.ascontiguousarray(model.phi[:, ids])
    n = ids.size
    z = np.floor(rng.random(n) * K).astype(np.int32)
    np.clip(z, 0, K - 1, out=z)
    ndk = np.zeros(K, dtype=np.int64)
    np.add.at(ndk, z, 1)

    acc = np.zeros(K, dtype=np.float64)
    n_samples = 0
    for it in range(iterations):
        _fold_in_sweep(ids.astype(np.int32), z, ndk, phi_cols, alpha,
                       rng.random(n), K)
        if it >= burn_in and (it - burn_in) % sample_lag == 0:
            acc += (ndk + alpha) / (n + K * alpha)
            n_samples += 1
    return acc / n_samples
