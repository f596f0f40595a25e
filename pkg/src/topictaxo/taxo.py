"""Taxonomy comparison: canonical concept forms, Jaccard, and theme matching.

Concept lists from two taxonomies (for example a generated one and a
hand-curated reference) rarely agree on surface forms, so both sides are
canonicalized (lowercase, split on non-alphanumerics, each part stemmed to a
fixed point, joined with underscores) before comparing.  Themes are paired
one-to-one so that the total Jaccard similarity is maximal; the mean is taken
over ``max(len(generated), len(reference))`` so unmatched themes on either
side drag the score down instead of being ignored.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError
from .stem import stem_token

__all__ = [
    "ThemeMatch",
    "TaxonomyComparison",
    "canonicalize_concept",
    "canonical_concept_set",
    "compare_taxonomies",
    "greedy_assignment",
    "jaccard",
    "optimal_assignment",
    "read_taxonomy",
    "write_comparison",
    "write_taxonomy",
]

_SPLIT = re.compile(r"[^a-z0-9]+")

# Largest theme count on the SMALLER side for which the exact bitmask-DP
# assignment runs (the mask ranges over the smaller side, so cost is
# larger_side * 2^smaller_side * smaller_side).
EXACT_ASSIGNMENT_LIMIT = 12


def canonicalize_concept(text: str) -> str:
    """Return the canonical form of a concept phrase.

    Lowercase, split on any run of non-alphanumeric characters, stem each
    part, and join with underscores: ``"Cognitive Informatics"`` becomes
    ``"cognit_informat"``.  Returns ``""`` when nothing alphanumeric remains.
    """

    parts = [stem_token(part) for part in _SPLIT.split(text.lower()) if part]
    return "_".join(part for part in parts if part)


def canonical_concept_set(concepts: Iterable[str]) -> frozenset[str]:
    """Canonicalize every concept and drop empties and duplicates."""

    forms = {canonicalize_concept(concept) for concept in concepts}
    forms.discard("")
    return frozenset(forms)


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """Jaccard similarity of two sets; 0.0 when both are empty."""

    sa, sb = set(a), set(b)
    union = len(sa | sb)
    if union == 0:
        return 0.0
    return len(sa & sb) / union


# ---------------------------------------------------------------------------
# assignment solvers
# ---------------------------------------------------------------------------


def greedy_assignment(score: Sequence[Sequence[float]]) -> tuple[tuple[int, int], ...]:
    """Pair rows with columns greedily by descending score.

    Only strictly positive scores produce pairs.  Ties break on the smaller
    row index, then the smaller column index, so the result is deterministic.
    """

    candidates = sorted(
        (-score[i][j], i, j)
        for i in range(len(score))
        for j in range(len(score[i]))
        if score[i][j] > 0.0
    )
    used_rows: set[int] = set()
    used_cols: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for neg, i, j in candidates:
        if i in used_rows or j in used_cols:
            continue
        used_rows.add(i)
        used_cols.add(j)
        pairs.append((i, j))
    return tuple(sorted(pairs))


def optimal_assignment(
    score: Sequence[Sequence[float]],
) -> tuple[tuple[tuple[int, int], ...], bool]:
    """Best one-to-one row/column pairing maximizing the summed score.

    Solves exactly with a bitmask dynamic program whenever the smaller
    dimension is at most ``EXACT_ASSIGNMENT_LIMIT`` (the mask ranges over
    that side); beyond that it falls back to :func:`greedy_assignment`.
    Returns ``(pairs, exact)`` where ``exact`` says which solver produced
    the pairs.  Pairs whose score is zero are never included (skipping them
    costs nothing and keeps the matching meaningful).
    """

    n = len(score)
    m = len(score[0]) if n else 0
    if n == 0 or m == 0:
        return (), True
    if min(n, m) > EXACT_ASSIGNMENT_LIMIT:
        return greedy_assignment(score), False
    if m > EXACT_ASSIGNMENT_LIMIT:
        # mask must range over the smaller side: solve the transpose
        transposed = [[score[i][j] for i in range(n)] for j in range(m)]
        pairs, exact = optimal_assignment(transposed)
        return tuple(sorted((i, j) for j, i in pairs)), exact

    size = 1 << m
    neg_inf = float("-inf")
    dp = [[neg_inf] * size for _ in range(n + 1)]
    # -2 = unreachable, -1 = row skipped, >= 0 = column taken for this row
    choice = [[-2] * size for _ in range(n + 1)]
    dp[0][0] = 0.0
    choice[0][0] = -1
    for r in range(n):
        row_dp = dp[r]
        next_dp = dp[r + 1]
        next_choice = choice[r + 1]
        row_score = score[r]
        for mask in range(size):
            cur = row_dp[mask]
            if cur == neg_inf:
                continue
            if cur > next_dp[mask]:
                next_dp[mask] = cur
                next_choice[mask] = -1
            for j in range(m):
                bit = 1 << j
                if mask & bit:
                    continue
                val = cur + row_score[j]
                target = mask | bit
                if val > next_dp[target]:
                    next_dp[target] = val
                    next_choice[target] = j
    final = dp[n]
    best_mask = 0
    best_val = final[0]
    for mask in range(1, size):
        if final[mask] > best_val:
            best_val = final[mask]
            best_mask = mask
    pairs: list[tuple[int, int]] = []
    mask = best_mask
    for r in range(n, 0, -1):
        taken = choice[r][mask]
        if taken >= 0:
            pairs.append((r - 1, taken))
            mask ^= 1 << taken
    pairs.reverse()
    return tuple(pairs), True


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThemeMatch:
    """One matched (generated topic, reference theme) pair."""

    generated_index: int
    reference_index: int
    reference_name: str
    score: float
    shared: tuple[str, ...]
    generated_only: tuple[str, ...]
    reference_only: tuple[str, ...]


@dataclass(frozen=True)
class TaxonomyComparison:
    """Result of matching a generated taxonomy against a reference."""

    mean_jaccard: float
    matches: tuple[ThemeMatch, ...]
    unmatched_generated: tuple[int, ...]
    unmatched_reference: tuple[str, ...]
    exact: bool


def compare_taxonomies(
    generated: Sequence[Iterable[str]],
    reference: Sequence[tuple[str, Iterable[str]]],
) -> TaxonomyComparison:
    """Match generated concept lists against named reference themes.

    Both sides are canonicalized, every pairwise Jaccard similarity is
    computed, and themes are paired one-to-one to maximize the total.  The
    mean divides by the larger side's theme count, so a taxonomy that is
    missing themes (or has spurious extras) scores lower.
    """

    if not generated:
        raise InputError("generated taxonomy has no topics")
    if not reference:
        raise InputError("reference taxonomy has no themes")
    gen_sets: list[frozenset[str]] = []
    for idx, concepts in enumerate(generated):
        forms = canonical_concept_set(concepts)
        if not forms:
            raise InputError(f"generated topic {idx} has no usable concepts")
        gen_sets.append(forms)
    ref_names: list[str] = []
    ref_sets: list[frozenset[str]] = []
    for name, concepts in reference:
        forms = canonical_concept_set(concepts)
        if not forms:
            raise InputError(f"reference theme {name!r} has no usable concepts")
        ref_names.append(name)
        ref_sets.append(forms)

    score = [[jaccard(g, r) for r in ref_sets] for g in gen_sets]
    pairs, exact = optimal_assignment(score)

    matches = []
    for i, j in pairs:
        g, r = gen_sets[i], ref_sets[j]
        matches.append(
            ThemeMatch(
                generated_index=i,
                reference_index=j,
                reference_name=ref_names[j],
                score=score[i][j],
                shared=tuple(sorted(g & r)),
                generated_only=tuple(sorted(g - r)),
                reference_only=tuple(sorted(r - g)),
            )
        )
    matches.sort(key=lambda match: match.generated_index)

    total = sum(score[i][j] for i, j in pairs)
    mean = total / max(len(gen_sets), len(ref_sets))
    matched_gen = {i for i, _ in pairs}
    matched_ref = {j for _, j in pairs}
    unmatched_generated = tuple(
        i for i in range(len(gen_sets)) if i not in matched_gen
    )
    unmatched_reference = tuple(
        ref_names[j] for j in range(len(ref_sets)) if j not in matched_ref
    )
    return TaxonomyComparison(
        mean_jaccard=mean,
        matches=tuple(matches),
        unmatched_generated=unmatched_generated,
        unmatched_reference=unmatched_reference,
        exact=exact,
    )


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def write_taxonomy(
    themes: Sequence[tuple[str, Iterable[str]]], path: str | Path
) -> None:
    """Write a taxonomy as ``{"themes": [{"name", "concepts"}, ...]}``."""

    payload = {
        "themes": [
            {"name": name, "concepts": list(concepts)} for name, concepts in themes
        ]
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def read_taxonomy(path: str | Path) -> tuple[tuple[str, tuple[str, ...]], ...]:
    """Read a taxonomy file written by :func:`write_taxonomy`."""

    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"taxonomy file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("themes"), list):
        raise InputError(f"taxonomy file {path} must contain a 'themes' list")
    themes: list[tuple[str, tuple[str, ...]]] = []
    for entry in payload["themes"]:
        if (
            not isinstance(entry, dict)
            or not isinstance(entry.get("name"), str)
            or not isinstance(entry.get("concepts"), list)
            or not entry["concepts"]
            or not all(isinstance(c, str) for c in entry["concepts"])
        ):
            raise InputError(
                f"taxonomy file {path}: each theme needs a string 'name' and a "
                "non-empty list of string 'concepts'"
            )
        themes.append((entry["name"], tuple(entry["concepts"])))
    if not themes:
        raise InputError(f"taxonomy file {path} lists no themes")
    return tuple(themes)


def write_comparison(comparison: TaxonomyComparison, path: str | Path) -> None:
    """Write a comparison result as stable, human-readable JSON."""

    payload = {
        "mean_jaccard": comparison.mean_jaccard,
        "exact_assignment": comparison.exact,
        "matches": [
            {
                "generated_topic": match.generated_index,
                "reference_name": match.reference_name,
                "jaccard": match.score,
                "shared": list(match.shared),
                "generated_only": list(match.generated_only),
                "reference_only": list(match.reference_only),
            }
            for match in comparison.matches
        ],
        "unmatched_generated": list(comparison.unmatched_generated),
        "unmatched_reference": list(comparison.unmatched_reference),
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")
