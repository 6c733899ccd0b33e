"""Guidance: rank series + relation + lag extensions for a focus timebox.

Candidates come from the precomputed relation indexes of the focus series.
Each (candidate, kind) cell is evaluated at every lag in range against the
focus box's matched fragments; a cell's confidence is its share of
threshold-passing evaluations among all evaluations kept in the matrix.
Only similarity, correlation, and causality are recommended.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import FocusUnresolved
from .matcher import FragmentNode, execute_query, filter_nodes
from .preprocess import ArtifactSet
from .querymodel import QueryGraph
from .relations import (
    DOMAINS,
    RelationKind,
    granger_strength,
    pearson_strength,
    similarity_strength,
)

RECOMMENDED_KINDS = (
    RelationKind.SIMILARITY,
    RelationKind.CORRELATION,
    RelationKind.CAUSALITY,
)

MAX_ROWS = 20

# Strength levels an evaluation must reach to count toward confidence.
PASSING_THRESHOLDS = {
    RelationKind.SIMILARITY: 0.8,
    RelationKind.CORRELATION: 0.8,  # on |strength|
    RelationKind.CAUSALITY: 0.95,
}

THRESHOLD_MARGIN = 0.05


@dataclass(frozen=True)
class Recommendation:
    series: str
    kind: RelationKind
    best_lag: int  # original samples
    mean_strength: float
    confidence: float
    passing: int  # evaluations over the kind's passing threshold


@dataclass
class GuidanceMatrix:
    focus: str
    kinds: tuple[RelationKind, ...]
    rows: list[str]  # series, ranked by best cell confidence
    cells: dict[tuple[str, RelationKind], Recommendation]

    def cell(self, series: str, kind: RelationKind) -> Recommendation | None:
        return self.cells.get((series, kind))

    def sorted_rows(self, kind: RelationKind) -> list[str]:
        """Rows reordered, non-increasing in the kind's confidence (stable)."""
        def conf(series: str) -> float:
            rec = self.cells.get((series, kind))
            return rec.confidence if rec is not None else -1.0

        return sorted(self.rows, key=lambda s: -conf(s))


def _cell_strength(
    kind: RelationKind,
    focus: FragmentNode,
    candidate: str,
    start: int,
    artifacts: ArtifactSet,
    max_lag: int,
) -> float:
    window = artifacts.params.window_symbols
    f = artifacts.series[focus.series]
    c = artifacts.series[candidate]
    if kind == RelationKind.SIMILARITY:
        return similarity_strength(
            f.compressed_minmax[focus.start : focus.start + window],
            c.compressed_minmax[start : start + window],
        )
    if kind == RelationKind.CORRELATION:
        return pearson_strength(
            f.compressed_raw[focus.start : focus.start + window],
            c.compressed_raw[start : start + window],
        )
    return granger_strength(
        f.compressed_raw[focus.start : focus.start + window],
        c.compressed_raw[start : start + window],
        max_lag,
    )


def _focus_fragments(
    box, query: QueryGraph, artifacts: ArtifactSet
) -> list[FragmentNode]:
    outcome = execute_query(query, artifacts)
    if outcome.results:
        seen: dict[tuple[str, int], FragmentNode] = {}
        for r in outcome.results:
            node = r.assignment[box.id]
            seen.setdefault(node.key, node)
        return [seen[k] for k in sorted(seen)]
    if box.is_default:
        raise FocusUnresolved(
            f"default timebox {box.id!r} has no matched results to recommend from"
        )
    return filter_nodes(box, artifacts, query)


def recommend(
    focus: str,
    query: QueryGraph,
    artifacts: ArtifactSet,
    lag_range: range | None = None,
) -> GuidanceMatrix:
    """Build the guidance matrix for one focus timebox.

    ``lag_range`` is in compressed steps and defaults to 0..window_symbols.
    """
    box = query.timebox(focus)
    if box is None:
        raise FocusUnresolved(f"no timebox with id {focus!r}")

    window = artifacts.params.window_symbols
    sampling = artifacts.params.sampling_length
    if lag_range is None:
        lag_range = range(0, window + 1)

    fragments = _focus_fragments(box, query, artifacts)
    if not fragments:
        raise FocusUnresolved(f"timebox {focus!r} has no valid fragments")

    focus_series = sorted({f.series for f in fragments})
    candidates: set[str] = set()
    for name in focus_series:
        for kind in RECOMMENDED_KINDS:
            index = artifacts.require(kind)
            candidates.update(other for other, _ in index.top(name, MAX_ROWS))
    candidates -= set(focus_series)

    causality_feasible = window >= 3 * query.max_lag + 2

    cells: dict[tuple[str, RelationKind], Recommendation] = {}
    for candidate in sorted(candidates):
        clen = artifacts.series[candidate].compressed_length
        for kind in RECOMMENDED_KINDS:
            if kind == RelationKind.CAUSALITY and not causality_feasible:
                continue
            by_lag: dict[int, list[float]] = {}
            for fragment in fragments:
                for lag in lag_range:
                    start = fragment.start + lag
                    if start + window > clen:
                        continue
                    s = _cell_strength(
                        kind, fragment, candidate, start, artifacts, query.max_lag
                    )
                    by_lag.setdefault(lag, []).append(s)
            if not by_lag:
                continue
            best_lag = max(
                by_lag,
                key=lambda lag: (
                    math.fsum(abs(v) for v in by_lag[lag]) / len(by_lag[lag]),
                    -lag,
                ),
            )
            mean_strength = math.fsum(by_lag[best_lag]) / len(by_lag[best_lag])
            threshold = PASSING_THRESHOLDS[kind]
            passing = sum(
                1
                for values in by_lag.values()
                for v in values
                if abs(v) >= threshold
            )
            cells[(candidate, kind)] = Recommendation(
                series=candidate,
                kind=kind,
                best_lag=best_lag * sampling,
                mean_strength=mean_strength,
                confidence=0.0,  # filled once the kept set is known
                passing=passing,
            )

    def best_passing(series: str) -> int:
        return max(
            (cells[(series, k)].passing for k in RECOMMENDED_KINDS if (series, k) in cells),
            default=0,
        )

    ranked = sorted(
        {series for series, _ in cells},
        key=lambda s: (-best_passing(s), s),
    )[:MAX_ROWS]

    kept = {
        key: rec for key, rec in cells.items() if key[0] in ranked
    }
    denominator = sum(rec.passing for rec in kept.values())
    final: dict[tuple[str, RelationKind], Recommendation] = {}
    for key, rec in kept.items():
        confidence = rec.passing / denominator if denominator > 0 else 0.0
        final[key] = Recommendation(
            series=rec.series,
            kind=rec.kind,
            best_lag=rec.best_lag,
            mean_strength=rec.mean_strength,
            confidence=confidence,
            passing=rec.passing,
        )

    return GuidanceMatrix(
        focus=focus, kinds=RECOMMENDED_KINDS, rows=ranked, cells=final
    )


def _query_delta(matrix: GuidanceMatrix, rec: Recommendation, query: QueryGraph) -> dict:
    """A ready-to-apply extension: one new timebox plus one relalink whose
    threshold starts just under the observed mean strength.
    """
    focus_box = query.timebox(matrix.focus)
    existing_boxes = {b.id for b in query.timeboxes}
    existing_links = {l.id for l in query.relalinks}
    i = 1
    while f"rec{i}" in existing_boxes or f"rec{i}-link" in existing_links:
        i += 1
    dom_lo, dom_hi = DOMAINS[rec.kind]
    lo = max(dom_lo, rec.mean_strength - THRESHOLD_MARGIN)
    return {
        "timebox": {
            "id": f"rec{i}",
            "name": rec.series,
            "offset": focus_box.offset + rec.best_lag,
        },
        "relalink": {
            "id": f"rec{i}-link",
            "kind": rec.kind.value,
            "source": matrix.focus,
            "target": f"rec{i}",
            "threshold": [lo, dom_hi],
        },
    }


def matrix_to_dict(matrix: GuidanceMatrix, query: QueryGraph) -> dict:
    """Wire format: rows ranked by confidence, one optional cell per kind,
    each cell carrying its applicable query delta.
    """
    rows = []
    for series in matrix.rows:
        row_cells: dict[str, dict | None] = {}
        for kind in matrix.kinds:
            rec = matrix.cell(series, kind)
            if rec is None:
                row_cells[kind.value] = None
            else:
                row_cells[kind.value] = {
                    "best_lag": rec.best_lag,
                    "mean_strength": rec.mean_strength,
                    "confidence": rec.confidence,
                    "delta": _query_delta(matrix, rec, query),
                }
        rows.append({"series": series, "cells": row_cells})
    return {
        "focus": matrix.focus,
        "kinds": [k.value for k in matrix.kinds],
        "rows": rows,
    }
