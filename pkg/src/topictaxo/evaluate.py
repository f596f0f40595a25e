"""Model evaluation and two-stage model selection.

Held-out perplexity folds each document into a trained model with the topic
mixture inferred while term-topic weights stay frozen, then exponentiates
the negative mean log-likelihood per scorable token. Coherence comes from
the sliding-window statistics in `coherence`.

Selection runs in two stages: every family is trained once at a pilot topic
count and the family with the highest coherence wins stage one; that family
alone is then swept across the topic-count range, and the count with the
highest coherence wins stage two, smaller counts breaking ties. Both stages
read only the coherence column; perplexity is reported for context.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .coherence import DEFAULT_TOP_N, DEFAULT_WINDOW, coherence_cv
from .corpus import Corpus, subset_corpus
from .errors import InputError
from .lda import LdaConfig, infer_doc_topics, train_lda
from .lsi import LsiConfig, train_lsi
from .topicmodel import TopicModel

log = logging.getLogger(__name__)

FAMILIES = ("lda", "bilda", "lsi")


def held_out_log_likelihood(model: TopicModel, docs) -> tuple[float, int]:
    """(total log-likelihood, scorable token count) over held-out documents.

    Each document is a sequence of token strings; tokens outside the model
    vocabulary are skipped both during fold-in and during scoring. Sums use
    exact accumulation, so the result does not depend on document order.
    """
    vocab_index = {t: i for i, t in enumerate(model.vocab)}
    parts = []
    n_tokens = 0
    for tokens in docs:
        ids = [vocab_index[t] for t in tokens if t in vocab_index]
        if not ids:
            continue
        theta = infer_doc_topics(model, tokens)
        word_probs = theta @ model.phi[:, ids]
        parts.extend(math.log(p) for p in word_probs)
        n_tokens += len(ids)
    return math.fsum(parts), n_tokens


def perplexity(model: TopicModel, docs) -> float:
    ll, n = held_out_log_likelihood(model, docs)
    if n == 0:
        raise InputError("zero scorable tokens in held-out documents")
    return math.exp(-ll / n)


@dataclass(frozen=True)
class EvalCell:
    """One evaluated (family, topic count) grid point.

    `implementation` distinguishes cells that share a family, as when the
    grid mixes results from more than one library or codebase; trained grids
    produced here leave it None.
    """
    algorithm: str
    k: int
    coherence: float | None = None
    perplexity: float | None = None
    log_likelihood_per_word: float | None = None
    implementation: str | None = None
    failed: bool = False
    error: str | None = None

    def label(self) -> str:
        if self.implementation:
            return f"{self.algorithm}/{self.implementation}"
        return self.algorithm


def _usable(cells):
    return [c for c in cells if not c.failed and c.coherence is not None]


def stage1_winner(cells) -> EvalCell:
    """Cell with the best coherence across the whole grid.

    Its algorithm names the winning family. Ties break toward the
    lexicographically smaller (algorithm, implementation, k) triple so the
    outcome never depends on input order.
    """
    usable = _usable(cells)
    if not usable:
        raise InputError("no usable cells for family selection")
    return min(usable, key=lambda c: (-c.coherence, c.algorithm,
                                      c.implementation or "", c.k))


def stage2_winner(cells, algorithm: str) -> EvalCell:
    """Best topic count within one family: highest coherence, then smaller k."""
    usable = [c for c in _usable(cells) if c.algorithm == algorithm]
    if not usable:
        raise InputError(f"no usable cells for family '{algorithm}'")
    return min(usable, key=lambda c: (-c.coherence, c.k,
                                      c.implementation or ""))


@dataclass(frozen=True)
class SelectionResult:
    cells: tuple            # every evaluated cell, sorted, failures included
    family: str
    k: int
    stage1: EvalCell
    stage2: EvalCell

    def family_curve(self):
        """(k, coherence) pairs for the winning family, k ascending."""
        return tuple((c.k, c.coherence) for c in self.cells
                     if c.algorithm == self.family and not c.failed)


def select_model(cells) -> SelectionResult:
    ordered = tuple(sorted(
        cells, key=lambda c: (c.algorithm, c.k, c.implementation or "")))
    first = stage1_winner(ordered)
    second = stage2_winner(ordered, first.algorithm)
    return SelectionResult(cells=ordered, family=first.algorithm,
                           k=second.k, stage1=first, stage2=second)


@dataclass(frozen=True)
class GridSpec:
    """What to train and how, for every cell of the selection grid.

    `k_pilot` is the topic count used for the stage-one family comparison;
    `k_values` is the stage-two sweep for the winning family. When `k_pilot`
    appears in `k_values` its cell is trained once and reused.
    """
    k_values: tuple = tuple(range(2, 16))
    k_pilot: int = 10
    families: tuple = FAMILIES
    lda: LdaConfig = LdaConfig(n_topics=1)
    lsi: LsiConfig = LsiConfig(n_topics=1)
    heldout_fraction: float = 0.1
    coherence_top_n: int = DEFAULT_TOP_N
    coherence_window: int = DEFAULT_WINDOW
    seed: int = 0

    def validate(self) -> None:
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise InputError("k_values must be positive")
        if len(set(self.k_values)) != len(self.k_values):
            raise InputError("k_values must be unique")
        if self.k_pilot < 1:
            raise InputError("k_pilot must be positive")
        if not self.families:
            raise InputError("at least one model family is required")
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise InputError(f"unknown families: {sorted(unknown)}")
        if not 0.0 < self.heldout_fraction < 1.0:
            raise InputError("heldout_fraction must lie in (0, 1)")


def heldout_split(n_docs: int, fraction: float, seed: int):
    """Deterministic (train_indices, heldout_indices) document split."""
    if n_docs < 2:
        raise InputError("need at least two documents to hold some out")
    n_held = max(1, int(round(n_docs * fraction)))
    if n_held >= n_docs:
        n_held = n_docs - 1
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([seed, 402653189])))
    order = rng.permutation(n_docs)
    held = sorted(int(d) for d in order[:n_held])
    train = sorted(int(d) for d in order[n_held:])
    return train, held


def _family_corpus(family: str, corpus: Corpus, bigram_corpus) -> Corpus:
    if family == "bilda":
        if bigram_corpus is None:
            raise InputError("bilda requires a bigram corpus")
        return bigram_corpus
    return corpus


def _evaluate_cell(family: str, k: int, spec: GridSpec, train_part: Corpus,
                   full: Corpus, heldout_docs) -> EvalCell:
    if family == "lsi":
        config = replace(spec.lsi, n_topics=k, seed=spec.seed)
        model = train_lsi(train_part, config)
    else:
        config = replace(spec.lda, n_topics=k, seed=spec.seed)
        model = train_lda(train_part, config, kind=family)
    score = coherence_cv(model, full, top_n=spec.coherence_top_n,
                         window=spec.coherence_window)
    if family == "lsi":
        ppl = None
        llw = None
    else:
        ll, n = held_out_log_likelihood(model, heldout_docs)
        if n == 0:
            raise InputError("zero scorable tokens in held-out documents")
        llw = ll / n
        ppl = math.exp(-llw)
    return EvalCell(algorithm=family, k=k, coherence=score.mean,
                    perplexity=ppl, log_likelihood_per_word=llw)


def run_selection_grid(corpus: Corpus, spec: GridSpec,
                       bigram_corpus: Corpus | None = None,
                       jobs: int = 1) -> SelectionResult:
    """Two-stage selection: pilot the families, then sweep the winner.

    Stage one trains every family at `spec.k_pilot` and keeps the family
    with the best coherence. Stage two trains that family at each entry of
    `spec.k_values` (reusing the pilot cell when its count is in the sweep)
    and picks the best topic count. The same seeded document split is used
    for every family; the bigram corpus, when present, must hold the same
    documents in the same order. Cells that fail to train are kept in the
    output as failed rows and excluded from selection. Results are
    deterministic for any `jobs`.
    """
    spec.validate()
    if bigram_corpus is not None and bigram_corpus.doc_ids != corpus.doc_ids:
        raise InputError("bigram corpus documents do not match corpus")
    train_idx, held_idx = heldout_split(corpus.n_docs,
                                        spec.heldout_fraction, spec.seed)
    parts = {}
    for family in spec.families:
        full = _family_corpus(family, corpus, bigram_corpus)
        parts[family] = (
            subset_corpus(full, train_idx),
            full,
            [full.doc_tokens(d) for d in held_idx],
        )

    def run(task):
        family, k = task
        train_part, full, heldout_docs = parts[family]
        try:
            return _evaluate_cell(family, k, spec, train_part, full,
                                  heldout_docs)
        except Exception as exc:  # noqa: BLE001 - cell isolation is the point
            log.warning("grid cell (%s, k=%d) failed: %s", family, k, exc)
            return EvalCell(algorithm=family, k=k, failed=True,
                            error=str(exc))

    def run_all(tasks):
        if jobs > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(run, tasks))
        return [run(t) for t in tasks]

    pilot_cells = run_all([(family, spec.k_pilot)
                           for family in spec.families])
    stage1 = stage1_winner(pilot_cells)
    family = stage1.algorithm

    sweep_cells = run_all([(family, k) for k in spec.k_values
                           if k != spec.k_pilot])
    stage2_pool = list(sweep_cells)
    if spec.k_pilot in spec.k_values:
        stage2_pool.append(stage1)
    stage2 = stage2_winner(stage2_pool, family)

    ordered = tuple(sorted(
        pilot_cells + sweep_cells,
        key=lambda c: (c.algorithm, c.k, c.implementation or "")))
    return SelectionResult(cells=ordered, family=family, k=stage2.k,
                           stage1=stage1, stage2=stage2)


EVAL_GRID_COLUMNS = ("algorithm", "k", "coherence", "perplexity",
                     "log_likelihood_per_word")


def write_eval_grid(cells, path) -> None:
    """Grid rows as CSV; missing metrics become empty fields."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVAL_GRID_COLUMNS)
        for c in sorted(cells, key=lambda c: (c.algorithm, c.k,
                                              c.implementation or "")):
            writer.writerow([
                c.label(),
                c.k,
                "" if c.coherence is None else repr(float(c.coherence)),
                "" if c.perplexity is None else repr(float(c.perplexity)),
                "" if c.log_likelihood_per_word is None
                else repr(float(c.log_likelihood_per_word)),
            ])


def read_eval_grid(path):
    cells = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                tuple(reader.fieldnames) != EVAL_GRID_COLUMNS:
            raise InputError(f"unexpected eval grid header in {path}")
        for row in reader:
            label = row["algorithm"]
            algorithm, _, implementation = label.partition("/")
            cells.append(EvalCell(
                algorithm=algorithm,
                implementation=implementation or None,
                k=int(row["k"]),
                coherence=float(row["coherence"]) if row["coherence"] else None,
                perplexity=float(row["perplexity"]) if row["perplexity"] else None,
                log_likelihood_per_word=(
                    float(row["log_likelihood_per_word"])
                    if row["log_likelihood_per_word"] else None),
                failed=not row["coherence"],
            ))
    return cells


def write_selection(result: SelectionResult, path) -> None:
    payload = {
        "family": result.family,
        "k": result.k,
        "stage1": {
            "winner": result.stage1.label(),
            "coherence": result.stage1.coherence,
            "k": result.stage1.k,
        },
        "stage2": {
            "k": result.stage2.k,
            "coherence": result.stage2.coherence,
            "curve": [
                {"k": k, "coherence": c} for k, c in result.family_curve()
            ],
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_selection(path) -> dict:
    """Selection payload as written by `write_selection`, validated."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read selection file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed selection file {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise InputError(f"selection file {path} must hold an object")
    for key in ("family", "k", "stage1", "stage2"):
        if key not in payload:
            raise InputError(f"selection file {path} is missing '{key}'")
    if payload["family"] not in FAMILIES:
        raise InputError(
            f"selection file {path} names unknown family "
            f"'{payload['family']}'")
    if not isinstance(payload["k"], int) or payload["k"] < 1:
        raise InputError(f"selection file {path} has invalid topic count")
    return payload
