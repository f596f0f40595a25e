"""Relation extraction vs a naive per-sentence oracle, reduction invariants,
and the graph file formats."""

import re

import pytest

from topictaxo.corpus import DocumentRecord, BigramPolicy, build_corpus
from topictaxo.errors import InputError
from topictaxo.kg import (FALLBACK_RELATION, Triple, extract_relations,
                          is_verb_token, read_graph_json, read_spring_layout,
                          read_triples, reduce_graph, write_graph_dot,
                          write_graph_json, write_spring_layout,
                          write_triples)
from topictaxo.layout import layout_kamada_kawai
from topictaxo.stem import stem_token
from topictaxo.synthetic import synthetic_vocabulary

# Stem-stable concept names, disjoint from any English verb.
W = sorted(synthetic_vocabulary(8, seed=17))

ACCEL = stem_token("accelerates")
IMPROV = stem_token("improves")


def _corpus(abstracts, bigrams=None):
    records = [DocumentRecord(id=f"d{i:02d}", title="", abstract=text)
               for i, text in enumerate(abstracts)]
    return build_corpus(records, bigrams=bigrams, min_doc_freq=1)


def _oracle(corpus, lists, cross_topic_only=True):
    """Naive re-derivation: scan each sentence's token strings directly."""
    toks = corpus.vocabulary.tokens
    flat = [(t, i, term) for t, terms in enumerate(lists)
            for i, term in enumerate(terms)]
    out = []
    for s_idx, (_, ids) in enumerate(corpus.sentences):
        words = [toks[i] for i in ids]
        spans = {}
        for key in flat:
            term = key[2]
            parts = term.split("_")
            for p in range(len(words)):
                if words[p] == term:
                    spans[key] = (p, p)
                    break
                if len(parts) > 1 and words[p:p + len(parts)] == parts:
                    spans[key] = (p, p + len(parts) - 1)
                    break
        present = sorted(spans)
        for a in present:
            for b in present:
                if a == b or a[2] == b[2]:
                    continue
                if cross_topic_only and a[0] == b[0]:
                    continue
                (s1, e1), (s2, e2) = spans[a], spans[b]
                lo_end, hi_start = (e1, s2) if s1 <= s2 else (e2, s1)
                rel = FALLBACK_RELATION
                for p in range(lo_end + 1, hi_start):
                    if is_verb_token(words[p]):
                        rel = words[p]
                        break
                out.append(Triple(subject=a[2], relation=rel, object=b[2],
                                  subject_topic=a[0], object_topic=b[0],
                                  sentence_index=s_idx))
    return tuple(out)


def test_verb_lexicon_on_stemmed_tokens():
    assert is_verb_token(stem_token("accelerates"))
    assert is_verb_token(stem_token("improving"))
    assert is_verb_token(stem_token("use"))
    assert not is_verb_token(W[0])
    assert not is_verb_token("zzzz")


def test_verb_between_mentions_becomes_relation():
    corpus = _corpus([f"{W[0]} accelerates {W[1]}."])
    triples = extract_relations(corpus, [[W[0]], [W[1]]])
    assert triples == (
        Triple(W[0], ACCEL, W[1], 0, 1, 0),
        Triple(W[1], ACCEL, W[0], 1, 0, 0),
    )


def test_first_verb_wins():
    corpus = _corpus([f"{W[0]} accelerates and improves {W[1]}."])
    triples = extract_relations(corpus, [[W[0]], [W[1]]])
    assert triples[0].relation == ACCEL


def test_no_verb_between_falls_back():
    corpus = _corpus([f"accelerates {W[0]} {W[1]} improves."])
    triples = extract_relations(corpus, [[W[0]], [W[1]]])
    assert [t.relation for t in triples] == [FALLBACK_RELATION] * 2


def test_verb_window_uses_first_mentions_only():
    # Second mention of W[0] sits after a verb, but the window is fixed by
    # the first mentions, which are adjacent.
    corpus = _corpus([f"{W[0]} {W[1]} improves {W[0]}."])
    triples = extract_relations(corpus, [[W[0]], [W[1]]])
    assert [t.relation for t in triples] == [FALLBACK_RELATION] * 2


def test_same_topic_pairs_are_skipped_by_default():
    corpus = _corpus([f"{W[0]} accelerates {W[1]}."])
    assert extract_relations(corpus, [[W[0], W[1]]]) == ()
    both = extract_relations(corpus, [[W[0], W[1]]], cross_topic_only=False)
    assert len(both) == 2
    assert both[0].subject_topic == both[0].object_topic == 0


def test_multiword_concept_matches_contiguous_parts():
    text = f"{W[0]} {W[1]} accelerates {W[2]}."
    plain = _corpus([text])
    grams = [[f"{W[0]}_{W[1]}"], [W[2]]]
    triples = extract_relations(plain, grams)
    assert triples[0] == Triple(f"{W[0]}_{W[1]}", ACCEL, W[2], 0, 1, 0)
    # The merged corpus carries the joined token itself; same triples. Only
    # the concept pair repeats verbatim, so nothing else merges.
    merged = _corpus([text,
                      f"{W[0]} {W[1]} improves {W[2]}.",
                      f"{W[0]} {W[1]} accelerates {W[3]} {W[2]}."],
                     bigrams=BigramPolicy(min_count=2, threshold=0.1))
    assert f"{W[0]}_{W[1]}" in merged.vocabulary
    from_merged = extract_relations(merged, grams)
    assert from_merged[0].subject == f"{W[0]}_{W[1]}"
    assert from_merged[0].relation == ACCEL


def test_sentences_isolate_mentions():
    corpus = _corpus([f"{W[0]} accelerates. {W[1]} improves."])
    assert extract_relations(corpus, [[W[0]], [W[1]]]) == ()


def test_triple_ordering_is_sentence_then_list_position():
    corpus = _corpus([
        f"{W[2]} accelerates {W[1]}. {W[0]} {W[3]}.",
        f"{W[0]} improves {W[1]}.",
    ])
    lists = [[W[0], W[2]], [W[1], W[3]]]
    triples = extract_relations(corpus, lists)
    keys = [(t.sentence_index, t.subject, t.object) for t in triples]
    assert keys == [
        (0, W[2], W[1]), (0, W[1], W[2]),
        (1, W[0], W[3]), (1, W[3], W[0]),
        (2, W[0], W[1]), (2, W[1], W[0]),
    ]


def test_extraction_matches_oracle_on_random_corpus():
    import random
    rng = random.Random(29)
    verbs = ["accelerates", "improves", "uses", "simulates", "encodes"]
    fill = W[6:]
    concepts = [W[0], W[1], W[2], W[3], f"{W[4]}_{W[5]}"]
    pool = concepts[:4] + [W[4], W[5]] + verbs + fill
    abstracts = []
    for _ in range(40):
        sentences = []
        for _ in range(rng.randint(1, 4)):
            n = rng.randint(2, 9)
            sentences.append(" ".join(rng.choice(pool) for _ in range(n)))
        abstracts.append(". ".join(sentences) + ".")
    corpus = _corpus(abstracts)
    lists = [[W[0], W[1]], [W[2], f"{W[4]}_{W[5]}"], [W[3]]]
    got = extract_relations(corpus, lists)
    assert got == _oracle(corpus, lists)
    assert extract_relations(corpus, lists, jobs=3) == got
    loose = extract_relations(corpus, lists, cross_topic_only=False)
    assert loose == _oracle(corpus, lists, cross_topic_only=False)
    assert len(loose) >= len(got)


def test_duplicate_concept_across_topics_rejected():
    corpus = _corpus([f"{W[0]} {W[1]}."])
    with pytest.raises(InputError):
        extract_relations(corpus, [[W[0]], [W[0]]])


def test_reduction_groups_unordered_pairs():
    triples = (
        Triple(W[0], ACCEL, W[1], 0, 1, 0),
        Triple(W[1], ACCEL, W[0], 1, 0, 0),
        Triple(W[0], FALLBACK_RELATION, W[1], 0, 1, 3),
        Triple(W[0], IMPROV, W[2], 0, 1, 5),
    )
    graph = reduce_graph(triples, [[W[0]], [W[1], W[2]]])
    assert len(graph.edges) == 2
    first, second = graph.edges
    assert (first.source, first.target) == (W[0], W[1])
    assert first.relation == ACCEL          # first-seen label survives
    assert first.weight == 3
    assert second.weight == 1
    assert sum(e.weight for e in graph.edges) == len(triples)


def test_reduction_shades_scale_with_incident_weight():
    triples = (
        Triple(W[0], ACCEL, W[1], 0, 1, 0),
        Triple(W[1], ACCEL, W[0], 1, 0, 0),
        Triple(W[0], IMPROV, W[2], 0, 1, 1),
    )
    graph = reduce_graph(triples, [[W[0]], [W[1], W[2]]])
    shades = {n.term: n.shade for n in graph.nodes}
    assert shades[W[0]] == 1.0              # weight 2 + 1 incident
    assert shades[W[1]] == pytest.approx(2 / 3)
    assert shades[W[2]] == pytest.approx(1 / 3)
    assert [n.term for n in graph.nodes] == [W[0], W[1], W[2]]


def test_reduction_rejects_unknown_endpoints():
    with pytest.raises(InputError):
        reduce_graph((Triple(W[0], ACCEL, W[1], 0, 1, 0),), [[W[0]]])


def test_empty_triples_reduce_to_empty_graph():
    graph = reduce_graph((), [[W[0]]])
    assert graph.nodes == () and graph.edges == ()


def test_triples_csv_round_trip(tmp_path):
    corpus = _corpus([f"{W[0]} accelerates {W[1]}. {W[1]} {W[2]}."])
    triples = extract_relations(corpus, [[W[0], W[2]], [W[1]]])
    path = tmp_path / "kg_edges.csv"
    write_triples(triples, path)
    assert read_triples(path) == triples
    (tmp_path / "bad.csv").write_text("x,y\n1,2\n")
    with pytest.raises(InputError):
        read_triples(tmp_path / "bad.csv")


_DOT_NODE = re.compile(
    r'^  "(?P<id>(?:[^"\\]|\\.)*)" \[topic=\d+, shade=\d\.\d{6}, '
    r'fillcolor="0\.000 0\.000 \d\.\d{3}"\];$')
_DOT_EDGE = re.compile(
    r'^  "(?P<a>(?:[^"\\]|\\.)*)" -- "(?P<b>(?:[^"\\]|\\.)*)" '
    r'\[label="(?:[^"\\]|\\.)*", weight=(?P<w>\d+)\];$')


def _parse_dot(text):
    lines = text.splitlines()
    assert lines[0] == "graph concepts {"
    assert lines[1] == "  node [style=filled];"
    assert lines[-1] == "}"
    nodes, edges = [], []
    for line in lines[2:-1]:
        m = _DOT_NODE.match(line)
        if m:
            nodes.append(m.group("id"))
            continue
        m = _DOT_EDGE.match(line)
        assert m, f"unparseable DOT line: {line!r}"
        edges.append((m.group("a"), m.group("b"), int(m.group("w"))))
    return nodes, edges


def test_dot_export_is_well_formed(tmp_path):
    corpus = _corpus([f"{W[0]} accelerates {W[1]}."] * 2)
    triples = extract_relations(corpus, [[W[0]], [W[1]]])
    graph = reduce_graph(triples, [[W[0]], [W[1]]])
    path = tmp_path / "graph.dot"
    write_graph_dot(graph, path)
    nodes, edges = _parse_dot(path.read_text())
    assert nodes == [n.term for n in graph.nodes]
    assert edges == [(e.source, e.target, e.weight) for e in graph.edges]


def test_graph_json_round_trip(tmp_path):
    corpus = _corpus([f"{W[0]} accelerates {W[1]}. {W[2]} {W[1]}."])
    triples = extract_relations(corpus, [[W[0], W[2]], [W[1]]])
    graph = reduce_graph(triples, [[W[0], W[2]], [W[1]]])
    path = tmp_path / "graph.json"
    write_graph_json(graph, path)
    assert read_graph_json(path) == graph
    (tmp_path / "bad.json").write_text('{"nodes": "no"}')
    with pytest.raises(InputError):
        read_graph_json(tmp_path / "bad.json")


def test_spring_layout_file_round_trip(tmp_path):
    corpus = _corpus([f"{W[0]} accelerates {W[1]}. {W[2]} {W[1]}."])
    triples = extract_relations(corpus, [[W[0], W[2]], [W[1]]])
    graph = reduce_graph(triples, [[W[0], W[2]], [W[1]]])
    index = graph.node_index()
    layout = layout_kamada_kawai(
        len(graph.nodes),
        [(index[e.source], index[e.target], float(e.weight))
         for e in graph.edges])
    path = tmp_path / "kg_layout.json"
    write_spring_layout(graph, layout.coords, layout.stress, path)
    positions, stress = read_spring_layout(path)
    assert stress == layout.stress
    assert set(positions) == {n.term for n in graph.nodes}
    for i, n in enumerate(graph.nodes):
        assert positions[n.term] == (layout.coords[i][0], layout.coords[i][1])
