"""Static HTML report assembled from the pipeline's artifact directory.

The report is one self-contained page (inline CSS and SVG, no external
assets) with five sections: model selection, topic map, per-topic concept
tables, knowledge graph, and taxonomy comparison. Each section reads only
its own artifact files; a missing artifact turns that section into an
"unavailable" note rather than an error, so a report can be produced after
any prefix of the pipeline. Rendering the same artifacts twice yields
byte-identical HTML: floats are formatted with fixed precision and nothing
time- or environment-dependent is emitted.
"""

from __future__ import annotations

import html
import json
import math
from pathlib import Path

from .errors import InputError
from .evaluate import read_eval_grid, read_selection
from .kg import read_graph_json, read_spring_layout
from .layout import layout_circular
from .terms import read_topic_map

_STYLE = """
body { font-family: Georgia, serif; margin: 2rem auto; max-width: 60rem;
       color: #222; line-height: 1.45; }
h1 { border-bottom: 2px solid #444; padding-bottom: 0.3rem; }
h2 { margin-top: 2.2rem; border-bottom: 1px solid #bbb;
     padding-bottom: 0.2rem; }
table { border-collapse: collapse; margin: 0.8rem 0; }
th, td { border: 1px solid #999; padding: 0.25rem 0.6rem;
         font-size: 0.9rem; text-align: left; }
th { background: #eee; }
td.num { text-align: right; font-variant-numeric: tabular-nums; }
p.unavailable { color: #777; font-style: italic; }
figure { margin: 1rem 0; }
figcaption { font-size: 0.85rem; color: #555; }
svg { background: #fafafa; border: 1px solid #ddd; }
.winner { background: #e8f0e0; }
"""


def _esc(text) -> str:
    return html.escape(str(text), quote=True)


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return "&#8212;"
    return f"{float(value):.{digits}f}"


def _unavailable(what: str) -> str:
    return (f'<p class="unavailable">{_esc(what)} artifacts are not '
            f"available; run the corresponding pipeline stage to fill in "
            f"this section.</p>")


def _load_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# SVG helpers
# ---------------------------------------------------------------------------


def _scale_points(points, width, height, pad):
    """Map arbitrary (x, y) pairs into pixel space, preserving aspect."""
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    span_x = max(xs) - min(xs)
    span_y = max(ys) - min(ys)
    span = max(span_x, span_y)
    if span <= 0.0:
        return [(width / 2.0, height / 2.0) for _ in points]
    scale = (min(width, height) - 2.0 * pad) / span
    cx = (max(xs) + min(xs)) / 2.0
    cy = (max(ys) + min(ys)) / 2.0
    return [(width / 2.0 + (x - cx) * scale,
             height / 2.0 - (y - cy) * scale) for x, y in points]


def _line_chart(points, y_label: str, width=460, height=260) -> str:
    """Simple line chart over (k, value) points, k ascending."""
    pad = 44.0
    ks = [p[0] for p in points]
    vs = [p[1] for p in points]
    k_lo, k_hi = min(ks), max(ks)
    v_lo, v_hi = min(vs), max(vs)
    if v_hi == v_lo:
        v_lo -= 0.5
        v_hi += 0.5

    def px(k):
        if k_hi == k_lo:
            return width / 2.0
        return pad + (k - k_lo) * (width - 2 * pad) / (k_hi - k_lo)

    def py(v):
        return height - pad - (v - v_lo) * (height - 2 * pad) / (v_hi - v_lo)

    parts = [f'<svg width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" role="img" '
             f'aria-label="{_esc(y_label)} by topic count">']
    parts.append(
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" '
        f'y2="{height - pad}" stroke="#444"/>')
    parts.append(
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" '
        f'stroke="#444"/>')
    for v in (v_lo, v_hi):
        y = py(v)
        parts.append(
            f'<text x="{pad - 6:.1f}" y="{y + 3:.1f}" text-anchor="end" '
            f'font-size="10">{_fmt(v, 3)}</text>')
    for k in ks:
        x = px(k)
        parts.append(
            f'<text x="{x:.1f}" y="{height - pad + 14:.1f}" '
            f'text-anchor="middle" font-size="10">{k}</text>')
    if len(points) > 1:
        path = " ".join(f"{px(k):.1f},{py(v):.1f}" for k, v in points)
        parts.append(f'<polyline points="{path}" fill="none" '
                     f'stroke="#2a6" stroke-width="1.6"/>')
    for k, v in points:
        parts.append(f'<circle cx="{px(k):.1f}" cy="{py(v):.1f}" r="3" '
                     f'fill="#2a6"><title>K={k}: {_fmt(v, 6)}</title>'
                     f'</circle>')
    parts.append(
        f'<text x="{width / 2:.1f}" y="{height - 8:.1f}" '
        f'text-anchor="middle" font-size="11">topic count K</text>')
    parts.append(
        f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" '
        f'font-size="11" transform="rotate(-90 14 {height / 2:.1f})">'
        f'{_esc(y_label)}</text>')
    parts.append("</svg>")
    return "".join(parts)


def _graph_svg(graph, positions, label: str, width=430, height=430) -> str:
    """Render a weighted graph at given per-term positions.

    Edge width grows with weight; node fill darkens with shade (relative
    incident weight).
    """
    pad = 58.0
    order = [n.term for n in graph.nodes]
    pts = _scale_points([positions[t] for t in order], width, height, pad)
    at = dict(zip(order, pts))
    max_w = max((e.weight for e in graph.edges), default=1)
    parts = [f'<svg width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" role="img" '
             f'aria-label="{_esc(label)}">']
    for e in graph.edges:
        (x1, y1), (x2, y2) = at[e.source], at[e.target]
        stroke = 0.8 + 2.6 * e.weight / max_w
        parts.append(
            f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" '
            f'y2="{y2:.1f}" stroke="#557" stroke-opacity="0.75" '
            f'stroke-width="{stroke:.2f}">'
            f"<title>{_esc(e.source)} &#8594; {_esc(e.relation)} &#8594; "
            f"{_esc(e.target)} (weight {e.weight})</title></line>")
    for node in graph.nodes:
        x, y = at[node.term]
        gray = round(255 * (1.0 - 0.7 * node.shade))
        fill = f"rgb({gray},{gray},{gray})"
        parts.append(
            f'<circle cx="{x:.1f}" cy="{y:.1f}" r="7" fill="{fill}" '
            f'stroke="#333"><title>{_esc(node.term)} (topic {node.topic}, '
            f"shade {_fmt(node.shade, 3)})</title></circle>")
        parts.append(
            f'<text x="{x:.1f}" y="{y - 11:.1f}" text-anchor="middle" '
            f'font-size="9">{_esc(node.term)}</text>')
    parts.append("</svg>")
    return "".join(parts)


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------


def _section_selection(out: Path) -> str:
    grid_path = out / "eval_grid.csv"
    sel_path = out / "selection.json"
    if not grid_path.exists() or not sel_path.exists():
        return _unavailable("Model selection")
    cells = read_eval_grid(grid_path)
    selection = read_selection(sel_path)
    family = selection["family"]
    best_k = selection["k"]
    parts = [
        "<p>Selected model: <strong>%s</strong> with "
        "<strong>K = %d</strong> topics (stage one winner: %s at "
        "coherence %s; stage two coherence %s).</p>"
        % (_esc(family), best_k, _esc(selection["stage1"]["winner"]),
           _fmt(selection["stage1"]["coherence"]),
           _fmt(selection["stage2"]["coherence"])),
        "<table><thead><tr><th>model</th><th>K</th><th>coherence</th>"
        "<th>perplexity</th><th>log-likelihood / word</th></tr></thead>"
        "<tbody>",
    ]
    for c in cells:
        cls = ' class="winner"' if (c.algorithm == family and
                                    c.k == best_k and not c.failed) else ""
        parts.append(
            f"<tr{cls}><td>{_esc(c.label())}</td><td class=\"num\">{c.k}"
            f"</td><td class=\"num\">{_fmt(c.coherence)}</td>"
            f"<td class=\"num\">{_fmt(c.perplexity, 2)}</td>"
            f"<td class=\"num\">{_fmt(c.log_likelihood_per_word)}</td>"
            f"</tr>")
    parts.append("</tbody></table>")

    curve = [(p["k"], p["coherence"])
             for p in selection["stage2"]["curve"]
             if p["coherence"] is not None]
    curve.sort()
    if curve:
        parts.append("<figure>%s<figcaption>Coherence across the "
                     "topic-count sweep for the %s family.</figcaption>"
                     "</figure>" % (_line_chart(curve, "coherence"),
                                    _esc(family)))
    ppl = sorted((c.k, c.perplexity) for c in cells
                 if c.algorithm == family and c.perplexity is not None)
    if ppl:
        parts.append("<figure>%s<figcaption>Held-out perplexity for the "
                     "%s family (lower is better).</figcaption></figure>"
                     % (_line_chart(ppl, "perplexity"), _esc(family)))
    else:
        parts.append("<p>Held-out perplexity is not defined for the "
                     "selected family.</p>")
    return "".join(parts)


def _section_topic_map(out: Path) -> str:
    path = out / "topic_map.json"
    if not path.exists():
        return _unavailable("Topic map")
    tmap = read_topic_map(path)
    width = height = 430
    pad = 70.0
    pts = _scale_points([(float(x), float(y)) for x, y in tmap.coords],
                        width, height, pad)
    p_max = max(float(p) for p in tmap.proportions)
    parts = [f'<svg width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" role="img" '
             f'aria-label="Inter-topic distance map">']
    order = sorted(range(len(pts)),
                   key=lambda t: -float(tmap.proportions[t]))
    for t in order:
        x, y = pts[t]
        p = float(tmap.proportions[t])
        radius = 42.0 * math.sqrt(p / p_max) if p_max > 0 else 10.0
        parts.append(
            f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{radius:.1f}" '
            f'fill="#7aa" fill-opacity="0.55" stroke="#366">'
            f"<title>topic {t}: proportion {_fmt(p)}</title></circle>")
        parts.append(
            f'<text x="{x:.1f}" y="{y + 4:.1f}" text-anchor="middle" '
            f'font-size="12">T{t}</text>')
    parts.append("</svg>")
    caption = ("Topics embedded so that distances approximate divergence "
               "between their term distributions; circle area is "
               "proportional to corpus share.")
    return (f"<figure>{''.join(parts)}<figcaption>{caption}"
            f"</figcaption></figure>")


def _section_topics(out: Path) -> str:
    path = out / "topics.json"
    if not path.exists():
        return _unavailable("Topic concept")
    payload = _load_json(path)
    parts = [
        "<p>Top concepts per topic at relevance weight &#955; = %s.</p>"
        % _fmt(payload["lambda"], 2)]
    for topic in sorted(payload["topics"], key=lambda t: t["topic"]):
        title = (f"Topic {topic['topic']} &#8212; proportion "
                 f"{_fmt(topic['proportion'])}")
        if topic.get("flagged_short"):
            title += " (fewer usable terms than requested)"
        parts.append(f"<h3>{title}</h3>")
        parts.append(
            "<table><thead><tr><th>#</th><th>concept</th>"
            "<th>probability</th><th>relevance</th><th>saliency</th>"
            "</tr></thead><tbody>")
        for rank, c in enumerate(topic["concepts"], start=1):
            parts.append(
                f"<tr><td class=\"num\">{rank}</td>"
                f"<td>{_esc(c['term'])}</td>"
                f"<td class=\"num\">{_fmt(c['probability'])}</td>"
                f"<td class=\"num\">{_fmt(c['relevance'])}</td>"
                f"<td class=\"num\">{_fmt(c['saliency'])}</td></tr>")
        parts.append("</tbody></table>")
    return "".join(parts)


def _section_kg(out: Path) -> str:
    graph_path = out / "graph.json"
    layout_path = out / "kg_layout.json"
    if not graph_path.exists() or not layout_path.exists():
        return _unavailable("Knowledge graph")
    graph = read_graph_json(graph_path)
    if not graph.nodes:
        return ("<p>No relations were extracted, so the knowledge graph "
                "is empty.</p>")
    circle = layout_circular(len(graph.nodes))
    circular_pos = {n.term: (float(circle[i][0]), float(circle[i][1]))
                    for i, n in enumerate(graph.nodes)}
    spring_pos, stress = read_spring_layout(layout_path)
    missing = [n.term for n in graph.nodes if n.term not in spring_pos]
    if missing:
        raise InputError(
            f"layout file {layout_path} is missing positions for "
            f"{missing[:3]}")
    parts = [
        "<p>%d concepts, %d relations; total relation weight %d.</p>"
        % (len(graph.nodes), len(graph.edges),
           sum(e.weight for e in graph.edges)),
        "<figure>%s<figcaption>Circular arrangement; line width is "
        "proportional to relation weight and darker nodes carry more "
        "relation weight.</figcaption></figure>"
        % _graph_svg(graph, circular_pos, "Knowledge graph, circular"),
        "<figure>%s<figcaption>Force-directed arrangement (stress %s); "
        "strongly related concepts sit closer together.</figcaption>"
        "</figure>"
        % (_graph_svg(graph, spring_pos, "Knowledge graph, spring"),
           _fmt(stress, 3)),
    ]
    return "".join(parts)


def _section_comparison(out: Path) -> str:
    path = out / "comparison.json"
    if not path.exists():
        return _unavailable("Taxonomy comparison")
    payload = _load_json(path)
    parts = [
        "<p>Mean Jaccard similarity against the reference taxonomy: "
        "<strong>%s</strong> (%s assignment).</p>"
        % (_fmt(payload["mean_jaccard"]),
           "optimal" if payload["exact_assignment"] else "greedy"),
        "<table><thead><tr><th>generated topic</th><th>reference theme</th>"
        "<th>Jaccard</th><th>shared concepts</th></tr></thead><tbody>",
    ]
    for m in payload["matches"]:
        shared = ", ".join(_esc(t) for t in m["shared"]) or "&#8212;"
        parts.append(
            f"<tr><td class=\"num\">{m['generated_topic']}</td>"
            f"<td>{_esc(m['reference_name'])}</td>"
            f"<td class=\"num\">{_fmt(m['jaccard'])}</td>"
            f"<td>{shared}</td></tr>")
    parts.append("</tbody></table>")
    if payload["unmatched_generated"]:
        parts.append("<p>Unmatched generated topics: %s.</p>" % ", ".join(
            str(t) for t in payload["unmatched_generated"]))
    if payload["unmatched_reference"]:
        parts.append("<p>Unmatched reference themes: %s.</p>" % ", ".join(
            _esc(n) for n in payload["unmatched_reference"]))
    return "".join(parts)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

_SECTIONS = (
    ("Model selection", _section_selection),
    ("Topic map", _section_topic_map),
    ("Topic concepts", _section_topics),
    ("Knowledge graph", _section_kg),
    ("Taxonomy comparison", _section_comparison),
)


def render_report(out_dir) -> str:
    """Build the report HTML from whatever artifacts `out_dir` holds."""
    out = Path(out_dir)
    body = []
    for title, build in _SECTIONS:
        body.append(f"<h2>{_esc(title)}</h2>")
        body.append(build(out))
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en"><head><meta charset="utf-8">\n'
        "<title>Topic modeling report</title>\n"
        f"<style>{_STYLE}</style>\n"
        "</head><body>\n"
        "<h1>Topic modeling report</h1>\n"
        + "\n".join(body)
        + "\n</body></html>\n"
    )
