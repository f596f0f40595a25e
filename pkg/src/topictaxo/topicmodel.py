"""Shared topic-model container and serialization.

A TopicModel is the common currency of the package: term distributions per
topic (phi), topic mixtures per document (theta), and the token-mass-weighted
topic marginal. LSI models additionally carry their singular values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError

KINDS = ("lda", "bilda", "lsi")


@dataclass
class TopicModel:
    kind: str
    config: dict
    vocab: tuple
    phi: np.ndarray            # K x V, row-stochastic
    theta: np.ndarray          # D x K, row-stochastic
    topic_marginal: np.ndarray  # K, sums to 1
    singular_values: np.ndarray | None = None

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    @property
    def n_terms(self) -> int:
        return self.phi.shape[1]

    @property
    def n_docs(self) -> int:
        return self.theta.shape[0]

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InputError(f"unknown model kind '{self.kind}'")
        if self.phi.shape[1] != len(self.vocab):
            raise InputError("phi width does not match vocabulary size")
        if self.theta.shape[1] != self.phi.shape[0]:
            raise InputError("theta width does not match topic count")
        if self.topic_marginal.shape != (self.phi.shape[0],):
            raise InputError("topic_marginal length does not match topic count")


def top_terms(model: TopicModel, topic: int, n: int = 10) -> list:
    """Top-n (term, probability) pairs for a topic, probability descending;
    ties broken lexicographically so output order is reproducible."""
    if not 0 <= topic < model.n_topics:
        raise InputError(f"topic {topic} out of range")
    row = model.phi[topic]
    order = sorted(range(len(row)), key=lambda i: (-row[i], model.vocab[i]))
    return [(model.vocab[i], float(row[i])) for i in order[:n]]


def save_model(model: TopicModel, path) -> None:
    """Write the model as one JSON document.

    Floats go through repr-style JSON encoding, which round-trips doubles
    exactly, so load_model reproduces arrays bit for bit.
    """
    payload = {
        "kind": model.kind,
        "config": model.config,
        "vocab": list(model.vocab),
        "phi": [[float(x) for x in row] for row in model.phi],
        "theta": [[float(x) for x in row] for row in model.theta],
        "topic_marginal": [float(x) for x in model.topic_marginal],
    }
    if model.singular_values is not None:
        payload["singular_values"] = [float(x) for x in model.singular_values]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path) -> TopicModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"model file {path} is not valid JSON") from exc
    try:
        model = TopicModel(
            kind=payload["kind"],
            config=dict(payload["config"]),
            vocab=tuple(payload["vocab"]),
            phi=np.array(payload["phi"], dtype=np.float64),
            theta=np.array(payload["theta"], dtype=np.float64),
            topic_marginal=np.array(payload["topic_marginal"], dtype=np.float64),
            singular_values=(
                np.array(payload["singular_values"], dtype=np.float64)
                if "singular_values" in payload else None
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"model file {path} has an invalid layout: {exc}") from exc
    model.validate()
    return model
