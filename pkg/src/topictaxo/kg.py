"""Concept-relation extraction and the reduced weighted concept graph.

Extraction scans every sentence for the concepts chosen per topic. When two
concepts from different topics share a sentence (same-topic pairs are
optional), the relation label is the first verb-like token strictly between
their first mentions, taken from a bundled verb lexicon matched on stems;
sentences that put the concepts together without such a token fall back to
the label "related_to". Each co-occurrence yields a directed triple per
focus concept, so a sentence relating A and B produces both (A, r, B) and
(B, r, A).

Reduction groups triples by unordered concept pair: the edge weight counts
the triples collapsed into it, the label and orientation come from the
first triple seen, and edge weights over a node sum to its shade (darker
nodes participate in more relations).
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

from .corpus import Corpus, load_wordlist
from .errors import InputError
from .stem import stem_token

VERB_SUFFIXES = ("ate", "ize", "ify", "ed", "s", "ing")
FALLBACK_RELATION = "related_to"


@lru_cache(maxsize=1)
def _verb_stems() -> frozenset:
    return frozenset(stem_token(v) for v in load_wordlist("verbs.txt"))


def is_verb_token(token: str) -> bool:
    """Whether a preprocessed (stemmed) token looks like a verb.

    The token is checked against the stemmed lexicon directly, then with
    common verbal endings stripped and the remainder re-stemmed, which
    catches inflections that survive stemming.
    """
    stems = _verb_stems()
    if token in stems:
        return True
    for suffix in VERB_SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= 2:
            if stem_token(token[: len(token) - len(suffix)]) in stems:
                return True
    return False


@dataclass(frozen=True)
class Triple:
    subject: str
    relation: str
    object: str
    subject_topic: int
    object_topic: int
    sentence_index: int


@dataclass(frozen=True)
class _ConceptRef:
    term: str
    topic: int
    position: int
    patterns: tuple  # token-id tuples that count as a mention


def _concept_refs(corpus: Corpus, concept_lists) -> list:
    index = corpus.vocabulary.index
    refs = []
    seen = set()
    for topic, terms in enumerate(concept_lists):
        for position, term in enumerate(terms):
            if term in seen:
                raise InputError(f"concept '{term}' appears in two lists")
            seen.add(term)
            patterns = []
            if term in index:
                patterns.append((index[term],))
            parts = term.split("_")
            if len(parts) > 1 and all(p in index for p in parts):
                patterns.append(tuple(index[p] for p in parts))
            refs.append(_ConceptRef(term=term, topic=topic,
                                    position=position,
                                    patterns=tuple(patterns)))
    return refs


def _first_mentions(sentence_ids, refs, starters) -> dict:
    """ref -> (first start, end) of the earliest pattern match, per sentence."""
    found: dict = {}
    for pos, tok in enumerate(sentence_ids):
        for ref, pattern in starters.get(tok, ()):
            if ref in found:
                continue
            if tuple(sentence_ids[pos:pos + len(pattern)]) == pattern:
                found[ref] = (pos, pos + len(pattern) - 1)
    return found


def _sentence_triples(sent_index, sentence_ids, refs, starters, verb_ids,
                      vocab_tokens, cross_topic_only) -> list:
    mentions = _first_mentions(sentence_ids, refs, starters)
    if len(mentions) < 2:
        return []
    present = sorted(mentions, key=lambda r: (r.topic, r.position))
    triples = []
    for focus in present:
        for other in present:
            if other is focus or focus.term == other.term:
                continue
            if cross_topic_only and focus.topic == other.topic:
                continue
            first = min(mentions[focus], mentions[other], key=lambda m: m[0])
            second = max(mentions[focus], mentions[other], key=lambda m: m[0])
            relation = FALLBACK_RELATION
            for p in range(first[1] + 1, second[0]):
                if sentence_ids[p] in verb_ids:
                    relation = vocab_tokens[sentence_ids[p]]
                    break
            triples.append(Triple(
                subject=focus.term, relation=relation, object=other.term,
                subject_topic=focus.topic, object_topic=other.topic,
                sentence_index=sent_index))
    return triples


def extract_relations(corpus: Corpus, concept_lists,
                      cross_topic_only: bool = True,
                      jobs: int = 1) -> tuple:
    """All concept-pair triples over the corpus sentences, in canonical order.

    Order is (sentence index, focus concept's list position, other concept's
    list position), where list position means (topic, index within topic).
    The result is identical for any `jobs`.
    """
    refs = _concept_refs(corpus, concept_lists)
    starters: dict = {}
    for ref in refs:
        for pattern in ref.patterns:
            starters.setdefault(pattern[0], []).append((ref, pattern))
    verb_ids = {i for i, tok in enumerate(corpus.vocabulary.tokens)
                if is_verb_token(tok)}
    vocab_tokens = corpus.vocabulary.tokens

    def scan(chunk):
        out = []
        for sent_index, (_, ids) in chunk:
            out.extend(_sentence_triples(sent_index, ids, refs, starters,
                                         verb_ids, vocab_tokens,
                                         cross_topic_only))
        return out

    indexed = list(enumerate(corpus.sentences))
    if jobs > 1 and len(indexed) > 1:
        size = (len(indexed) + jobs - 1) // jobs
        chunks = [indexed[i:i + size] for i in range(0, len(indexed), size)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(scan, chunks))
        triples = [t for part in parts for t in part]
    else:
        triples = scan(indexed)

    key = {ref.term: (ref.topic, ref.position) for ref in refs}
    triples.sort(key=lambda t: (t.sentence_index, key[t.subject],
                                key[t.object]))
    return tuple(triples)


@dataclass(frozen=True)
class GraphNode:
    term: str
    topic: int
    shade: float  # incident weight / max incident weight, in (0, 1]


@dataclass(frozen=True)
class WeightedEdge:
    source: str
    target: str
    relation: str
    weight: int


@dataclass(frozen=True)
class WeightedGraph:
    nodes: tuple  # GraphNode, ordered by (topic, concept-list position)
    edges: tuple  # WeightedEdge, in first-seen order

    def node_index(self) -> dict:
        return {n.term: i for i, n in enumerate(self.nodes)}


def reduce_graph(triples, concept_lists) -> WeightedGraph:
    """Collapse directed triples into one weighted edge per concept pair."""
    position = {}
    topic_of = {}
    for topic, terms in enumerate(concept_lists):
        for idx, term in enumerate(terms):
            position[term] = (topic, idx)
            topic_of[term] = topic
    order = []
    first: dict = {}
    weight: dict = {}
    for t in triples:
        if t.subject not in position or t.object not in position:
            raise InputError(f"triple endpoint missing from concept lists: "
                             f"{t.subject} -> {t.object}")
        pair = frozenset((t.subject, t.object))
        if pair not in first:
            first[pair] = t
            order.append(pair)
            weight[pair] = 0
        weight[pair] += 1

    edges = tuple(WeightedEdge(source=first[p].subject,
                               target=first[p].object,
                               relation=first[p].relation,
                               weight=weight[p]) for p in order)
    incident: dict = {}
    for e in edges:
        incident[e.source] = incident.get(e.source, 0) + e.weight
        incident[e.target] = incident.get(e.target, 0) + e.weight
    if incident:
        top = max(incident.values())
        nodes = tuple(GraphNode(term=term, topic=topic_of[term],
                                shade=incident[term] / top)
                      for term in sorted(incident, key=lambda w: position[w]))
    else:
        nodes = ()
    return WeightedGraph(nodes=nodes, edges=edges)


TRIPLE_COLUMNS = ("sentence_index", "subject", "relation", "object",
                  "subject_topic", "object_topic")


def write_triples(triples, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIPLE_COLUMNS)
        for t in triples:
            writer.writerow([t.sentence_index, t.subject, t.relation,
                             t.object, t.subject_topic, t.object_topic])


def read_triples(path) -> tuple:
    triples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                tuple(reader.fieldnames) != TRIPLE_COLUMNS:
            raise InputError(f"unexpected triple header in {path}")
        for row in reader:
            try:
                triples.append(Triple(
                    subject=row["subject"], relation=row["relation"],
                    object=row["object"],
                    subject_topic=int(row["subject_topic"]),
                    object_topic=int(row["object_topic"]),
                    sentence_index=int(row["sentence_index"])))
            except (TypeError, ValueError) as exc:
                raise InputError(f"malformed triple row in {path}: {exc}") \
                    from exc
    return tuple(triples)


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_graph_dot(graph: WeightedGraph, path) -> None:
    """Reduced graph in DOT form; node darkness encodes the shade."""
    lines = ["graph concepts {", "  node [style=filled];"]
    for n in graph.nodes:
        value = 1.0 - 0.7 * n.shade
        lines.append(
            f"  {_dot_quote(n.term)} [topic={n.topic}, shade={n.shade:.6f}, "
            f"fillcolor={_dot_quote(f'0.000 0.000 {value:.3f}')}];")
    for e in graph.edges:
        lines.append(
            f"  {_dot_quote(e.source)} -- {_dot_quote(e.target)} "
            f"[label={_dot_quote(e.relation)}, weight={e.weight}];")
    lines.append("}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_graph_json(graph: WeightedGraph, path) -> None:
    payload = {
        "nodes": [{"id": n.term, "topic": n.topic, "shade": n.shade}
                  for n in graph.nodes],
        "edges": [{"source": e.source, "target": e.target,
                   "relation": e.relation, "weight": e.weight}
                  for e in graph.edges],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_graph_json(path) -> WeightedGraph:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        nodes = tuple(GraphNode(term=n["id"], topic=int(n["topic"]),
                                shade=float(n["shade"]))
                      for n in payload["nodes"])
        edges = tuple(WeightedEdge(source=e["source"], target=e["target"],
                                   relation=e["relation"],
                                   weight=int(e["weight"]))
                      for e in payload["edges"])
        return WeightedGraph(nodes=nodes, edges=edges)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed graph file {path}: {exc}") from exc


def write_spring_layout(graph: WeightedGraph, coords, stress: float,
                        path) -> None:
    payload = {
        "positions": {n.term: [float(coords[i][0]), float(coords[i][1])]
                      for i, n in enumerate(graph.nodes)},
        "stress": float(stress),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_spring_layout(path):
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        positions = {term: (float(xy[0]), float(xy[1]))
                     for term, xy in payload["positions"].items()}
        return positions, float(payload["stress"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed layout file {path}: {exc}") from exc
