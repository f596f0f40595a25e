"""Report rendering: section availability, SVG contents, and byte-exact
regeneration."""

import json

import pytest

from topictaxo.errors import InputError
from topictaxo.kg import reduce_graph, write_graph_json, write_spring_layout
from topictaxo.pipeline import (COMPARISON_FILE, EVAL_GRID_FILE,
                                GRAPH_JSON_FILE, KG_LAYOUT_FILE, REPORT_FILE,
                                SELECTION_FILE, TOPIC_MAP_FILE, TOPICS_FILE)
from topictaxo.report import render_report

SECTION_TITLES = ("Model selection", "Topic map", "Topic concepts",
                  "Knowledge graph", "Taxonomy comparison")


def _section(html: str, title: str) -> str:
    """The HTML between this section's heading and the next one."""
    start = html.index(f"<h2>{title}</h2>") + len(f"<h2>{title}</h2>")
    rest = html[start:]
    end = rest.find("<h2>")
    return rest if end < 0 else rest[:end]


def test_full_report_has_every_section_filled(mini_run):
    html = (mini_run.out / REPORT_FILE).read_text(encoding="utf-8")
    assert html.startswith("<!DOCTYPE html>")
    assert html.endswith("</html>\n")
    for title in SECTION_TITLES:
        assert f"<h2>{title}</h2>" in html
    assert 'class="unavailable"' not in html
    assert "Selected model:" in html
    assert 'class="winner"' in html


def test_report_regenerates_byte_identically(mini_run):
    on_disk = (mini_run.out / REPORT_FILE).read_text(encoding="utf-8")
    assert render_report(mini_run.out) == on_disk
    assert render_report(mini_run.out) == on_disk


def test_empty_directory_renders_all_sections_unavailable(tmp_path):
    html = render_report(tmp_path)
    assert html.count('class="unavailable"') == 5
    for title in SECTION_TITLES:
        assert f"<h2>{title}</h2>" in html


def test_partial_artifacts_render_partial_report(tmp_path, mini_run):
    for name in (EVAL_GRID_FILE, SELECTION_FILE):
        (tmp_path / name).write_bytes((mini_run.out / name).read_bytes())
    html = render_report(tmp_path)
    assert html.count('class="unavailable"') == 4
    selection = _section(html, "Model selection")
    assert "Selected model:" in selection
    assert 'class="unavailable"' not in selection


def test_topic_map_section_draws_one_circle_per_topic(mini_run):
    tmap = json.loads((mini_run.out / TOPIC_MAP_FILE).read_text())
    k = len(tmap["coords"])
    section = _section(
        (mini_run.out / REPORT_FILE).read_text(encoding="utf-8"),
        "Topic map")
    assert section.count("<circle") == k
    for t in range(k):
        assert f">T{t}</text>" in section


def test_topics_section_lists_every_concept(mini_run):
    payload = json.loads((mini_run.out / TOPICS_FILE).read_text())
    section = _section(
        (mini_run.out / REPORT_FILE).read_text(encoding="utf-8"),
        "Topic concepts")
    for topic in payload["topics"]:
        for concept in topic["concepts"]:
            assert f"<td>{concept['term']}</td>" in section


def test_graph_section_matches_graph_file(mini_run):
    graph = json.loads((mini_run.out / GRAPH_JSON_FILE).read_text())
    n_nodes, n_edges = len(graph["nodes"]), len(graph["edges"])
    assert n_nodes > 0  # the mini corpus is built to yield relations
    total = sum(e["weight"] for e in graph["edges"])
    section = _section(
        (mini_run.out / REPORT_FILE).read_text(encoding="utf-8"),
        "Knowledge graph")
    assert (f"{n_nodes} concepts, {n_edges} relations; "
            f"total relation weight {total}.") in section
    # one circular and one force-directed drawing of the same graph
    assert section.count("<circle") == 2 * n_nodes
    assert section.count("<line") == 2 * n_edges


def test_comparison_section_names_reference_themes(mini_run):
    payload = json.loads((mini_run.out / COMPARISON_FILE).read_text())
    section = _section(
        (mini_run.out / REPORT_FILE).read_text(encoding="utf-8"),
        "Taxonomy comparison")
    for match in payload["matches"]:
        assert match["reference_name"] in section
    assert "Mean Jaccard similarity" in section


def test_layout_missing_positions_is_an_input_error(tmp_path, mini_run):
    (tmp_path / GRAPH_JSON_FILE).write_bytes(
        (mini_run.out / GRAPH_JSON_FILE).read_bytes())
    empty = reduce_graph((), [["placeholder"]])
    write_spring_layout(empty, [], 0.0, tmp_path / KG_LAYOUT_FILE)
    with pytest.raises(InputError, match="missing positions"):
        render_report(tmp_path)


def test_empty_graph_renders_a_note_not_an_error(tmp_path):
    empty = reduce_graph((), [["placeholder"]])
    write_graph_json(empty, tmp_path / GRAPH_JSON_FILE)
    write_spring_layout(empty, [], 0.0, tmp_path / KG_LAYOUT_FILE)
    html = render_report(tmp_path)
    assert "knowledge graph is empty" in _section(html, "Knowledge graph")
