"""Latent semantic indexing: TF-IDF weighting plus truncated SVD.

The SVD uses the randomized range-finder scheme (Gaussian test matrix with
oversampling, then power iterations with QR re-orthonormalization). Whenever
oversampling reaches the smaller matrix dimension — always true at the corpus
sizes this package targets — the projection captures the full row space and
the factorization is exact to roundoff; the config knobs only matter beyond
that regime.

Components are signed, so topic-shaped outputs are derived from absolute
loadings normalized to probability form.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import sparse

from .corpus import Corpus
from .errors import InputError
from .topicmodel import TopicModel


@dataclass(frozen=True)
class LsiConfig:
    n_topics: int
    oversampling: int = 10
    power_iters: int = 7
    seed: int = 0

    def validate(self) -> None:
        if self.n_topics < 1:
            raise InputError("n_topics must be >= 1")
        if self.oversampling < 0 or self.power_iters < 0:
            raise InputError("oversampling and power_iters must be >= 0")
        if self.seed < 0:
            raise InputError("seed must be non-negative")


def tfidf_matrix(corpus: Corpus) -> sparse.csr_matrix:
    """Counts weighted by ln(D/df), rows L2-normalized (zero rows stay zero)."""
    counts = corpus.doc_term.astype(np.float64)
    df = np.asarray((corpus.doc_term > 0).sum(axis=0)).ravel()
    idf = np.log(corpus.n_docs / np.maximum(df, 1))
    weighted = counts.multiply(idf[None, :]).tocsr()
    norms = np.sqrt(np.asarray(weighted.multiply(weighted).sum(axis=1)).ravel())
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sparse.diags(scale).dot(weighted).tocsr()


def randomized_svd(matrix, k: int, oversampling: int = 10,
                   power_iters: int = 7, seed: int = 0):
    """Truncated SVD via a seeded randomized range finder.

    Returns (U, s, Vt) with U: D x k, s: k, Vt: k x V, s non-increasing.
    """
    n_rows, n_cols = matrix.shape
    if k > min(n_rows, n_cols):
        raise InputError("k exceeds min(matrix dimensions)")
    p = min(k + oversampling, min(n_rows, n_cols))
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([seed, 715225739])))
    omega = rng.standard_normal((n_cols, p))
    sample = matrix @ omega
    q, _ = np.linalg.qr(sample)
    for _ in range(power_iters):
        z, _ = np.linalg.qr(matrix.T @ q)
        q, _ = np.linalg.qr(matrix @ z)
    small = q.T @ matrix
    if sparse.issparse(small):
        small = small.toarray()
    u_small, s, vt = np.linalg.svd(np.asarray(small), full_matrices=False)
    u = q @ u_small
    return u[:, :k], s[:k], vt[:k]


def train_lsi(corpus: Corpus, config: LsiConfig) -> TopicModel:
    config.validate()
    K = config.n_topics
    if K > min(corpus.n_docs, corpus.n_terms):
        raise InputError("K exceeds min(documents, terms)")
    x = tfidf_matrix(corpus)
    u, s, vt = randomized_svd(
        x, K, oversampling=config.oversampling,
        power_iters=config.power_iters, seed=config.seed)

    if s[0] > 0:
        degenerate = [int(i) for i in np.flatnonzero(s <= s[0] * 1e-12)]
    else:
        degenerate = list(range(K))
    if degenerate:
        warnings.warn(
            f"K exceeds matrix rank: components {degenerate} have zero "
            "singular value", RuntimeWarning, stacklevel=2)

    loadings = np.abs(vt)
    phi = loadings / loadings.sum(axis=1, keepdims=True)

    doc_loadings = np.abs(u * s[None, :])
    row_sums = doc_loadings.sum(axis=1, keepdims=True)
    theta = np.where(row_sums > 0, doc_loadings / np.where(row_sums > 0, row_sums, 1.0),
                     1.0 / K)

    doc_lengths = np.array([len(doc) for doc in corpus.docs], dtype=np.float64)
    marginal = doc_lengths @ theta / doc_lengths.sum()

    return TopicModel(
        kind="lsi",
        config=asdict(config),
        vocab=corpus.vocabulary.tokens,
        phi=phi,
        theta=theta,
        topic_marginal=marginal,
        singular_values=s,
    )
