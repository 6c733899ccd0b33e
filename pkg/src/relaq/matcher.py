"""Query execution: filter fragments per timebox, link compliant pairs per
relalink, then depth-first-search the dataset graph for complete matches.

A result assigns one fragment per timebox and realizes every relalink; its
score is the sum of trend-match degrees plus the absolute strengths of the
satisfied links. Strict mode requires every link satisfied; fuzzy mode
tolerates one unsatisfied link (scored 0) and relaxes trends to shape-only
and lags to one compressed step.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSketch,
    LengthMismatch,
    QueryCancelled,
    RelaqError,
    WindowTooLong,
)
from .preprocess import ArtifactSet, SeriesArtifacts, z_normalize
from .querymodel import FUZZY, STRICT, QueryGraph, Relalink, Timebox, temporal_order
from .relations import (
    DOMAINS,
    INDEXED_KINDS,
    RelationKind,
    arithmetic_strength,
    granger_strength,
    meta_strength,
    pearson_strength,
    similarity_strength,
)

TREND_DEGREE_THRESHOLD = 0.7
DEFAULT_RESULT_CAP = 10_000
DEFAULT_BOX_TOP_K = 20
HISTOGRAM_BINS = 10


@dataclass(frozen=True)
class FragmentNode:
    """One sliding-window fragment of one series.

    ``start`` is a compressed-sample index; ``length`` is the covered span in
    original samples; ``degree`` is the trend-match degree (1.0 without a
    sketch).
    """

    series: str
    start: int
    length: int
    degree: float

    @property
    def key(self) -> tuple[str, int]:
        return (self.series, self.start)


@dataclass(frozen=True)
class RelationLinkInstance:
    link_id: str
    kind: RelationKind
    strength: float
    lag: int  # realized, original samples
    satisfied: bool


@dataclass(frozen=True)
class ResultGraph:
    assignment: dict[str, FragmentNode]  # timebox id -> fragment
    links: tuple[RelationLinkInstance, ...]
    score: float


@dataclass
class DatasetGraph:
    """Step-1/2 output: candidate nodes per timebox, satisfied links per
    relalink keyed by (source fragment key, target fragment key).
    """

    nodes: dict[str, list[FragmentNode]]
    links: dict[str, dict[tuple[tuple[str, int], tuple[str, int]], RelationLinkInstance]]


@dataclass
class QueryOutcome:
    results: list[ResultGraph]
    summary: dict
    truncated: bool
    timed_out: bool = False


class _DeadlineReached(Exception):
    pass


class QueryValidationError(RelaqError):
    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


def enumerate_fragments(
    series: SeriesArtifacts, window_symbols: int, sampling_length: int
) -> list[FragmentNode]:
    """One candidate per start in [0, compressed_len - window], step one
    compressed sample, degree 1.
    """
    last = series.compressed_length - window_symbols
    if last < 0:
        raise WindowTooLong(
            f"window of {window_symbols} exceeds series {series.name!r}"
        )
    length = window_symbols * sampling_length
    return [
        FragmentNode(series=series.name, start=s, length=length, degree=1.0)
        for s in range(last + 1)
    ]


def rasterize_sketch(sketch, window_symbols: int, box_length: float) -> np.ndarray:
    """Sample a polyline at ``window_symbols`` equally spaced x positions
    spanning [0, box_length]; y values stay in box coordinates.
    """
    xs = np.array([p.x for p in sketch], dtype=float)
    ys = np.array([p.y for p in sketch], dtype=float)
    if len(xs) < 2 or xs[-1] <= xs[0]:
        raise DegenerateSketch("sketch must span a positive x range")
    if window_symbols == 1:
        positions = np.array([0.0])
    else:
        positions = np.linspace(0.0, float(box_length), window_symbols)
    # np.interp holds the edge values outside the sketched span.
    return np.interp(positions, xs, ys)


def trend_match_degree(fragment_values, raster, mode: str) -> float:
    """Distance-based agreement in [0, 1].

    Strict compares the inputs as given (both already in a common [0, 1]
    value space): d = max(0, 1 - ED/sqrt(L)). Fuzzy z-normalizes both sides
    so only the shape matters: d = max(0, 1 - ED/(2 sqrt(L))).
    """
    a = np.asarray(fragment_values, dtype=float)
    b = np.asarray(raster, dtype=float)
    if len(a) != len(b):
        raise LengthMismatch(f"fragment length {len(a)} != raster length {len(b)}")
    n = len(a)
    if mode == FUZZY:
        ed = float(np.linalg.norm(z_normalize(a) - z_normalize(b)))
        return max(0.0, 1.0 - ed / (2.0 * math.sqrt(n)))
    ed = float(np.linalg.norm(a - b))
    return max(0.0, 1.0 - ed / math.sqrt(n))


def _reverse_causality_top(index, target_series: str, k: int) -> list[str]:
    # index is keyed by cause; rank causes of target_series.
    ranked = []
    for cause, entries in index.order.items():
        for other, s in entries:
            if other == target_series:
                ranked.append((cause, s))
                break
    ranked.sort(key=lambda it: (-it[1], it[0]))
    return [name for name, _ in ranked[:k]]


def default_box_candidates(
    box: Timebox, query: QueryGraph, artifacts: ArtifactSet, k: int = DEFAULT_BOX_TOP_K
) -> list[str]:
    """Candidate series for a default timebox.

    Seeded from the relation index of the link joining the box to a named
    neighbor (smallest link id on ties); boxes reachable only through other
    default boxes use the union of the nearest named boxes' top lists; a
    query with no named box at all falls back to the first k series by name.
    """
    indexable = [
        link
        for link in sorted(query.links_of(box.id), key=lambda l: l.id)
        if link.kind in INDEXED_KINDS
    ]
    for link in indexable:
        other_id = link.target if link.source == box.id else link.source
        other = query.timebox(other_id)
        if other is None or other.is_default:
            continue
        index = artifacts.require(link.kind)
        if link.kind == RelationKind.CAUSALITY and link.target == other_id:
            # The default box is the cause; rank series by how strongly they
            # drive the named series.
            return _reverse_causality_top(index, other.name, k)
        return [name for name, _ in index.top(other.name, k)]

    # No directly linked named box: breadth-first through the link graph.
    nearest_named: list[Timebox] = []
    seen = {box.id}
    frontier = [box.id]
    while frontier and not nearest_named:
        nxt: list[str] = []
        for bid in frontier:
            for link in query.links_of(bid):
                other_id = link.target if link.source == bid else link.source
                if other_id in seen:
                    continue
                seen.add(other_id)
                other = query.timebox(other_id)
                if other is None:
                    continue
                if not other.is_default:
                    nearest_named.append(other)
                else:
                    nxt.append(other_id)
        frontier = nxt
    if nearest_named:
        union: set[str] = set()
        for named in nearest_named:
            for kind in INDEXED_KINDS:
                index = artifacts.require(kind)
                union.update(name for name, _ in index.top(named.name, k))
        return sorted(union)
    return artifacts.names()[:k]


def _strict_raster_for_series(
    raster_box: np.ndarray, box: Timebox, series: SeriesArtifacts
) -> np.ndarray:
    # Box y coordinates map onto the value bounds (the series' own range by
    # default), then through the series' min-max map so the comparison space
    # matches the min-max-normalized fragments.
    if box.value_bounds is not None:
        lo, hi = box.value_bounds
    else:
        lo, hi = series.vmin, series.vmax
    scaled = lo + raster_box * (hi - lo)
    return series.series_norm(scaled)


def filter_nodes(
    box: Timebox, artifacts: ArtifactSet, query: QueryGraph
) -> list[FragmentNode]:
    """Step 1: valid fragments for one timebox (the node set X_i)."""
    params = artifacts.params
    window = params.window_symbols
    if box.is_default:
        names = default_box_candidates(box, query, artifacts)
    else:
        names = [box.name]

    raster_box = None
    if box.sketch is not None:
        raster_box = rasterize_sketch(box.sketch, window, params.box_length)

    out: list[FragmentNode] = []
    for name in names:
        series = artifacts.series[name]
        strict_raster = None
        fuzzy_raster = None
        if raster_box is not None:
            if query.mode == FUZZY:
                fuzzy_raster = raster_box
            else:
                strict_raster = _strict_raster_for_series(raster_box, box, series)
        for node in enumerate_fragments(series, window, params.sampling_length):
            s = node.start
            if box.value_bounds is not None:
                frag_raw = series.compressed_raw[s : s + window]
                lo, hi = box.value_bounds
                if frag_raw.min() < lo or frag_raw.max() > hi:
                    continue
            degree = 1.0
            if raster_box is not None:
                if query.mode == FUZZY:
                    frag = series.compressed_raw[s : s + window]
                    degree = trend_match_degree(frag, fuzzy_raster, FUZZY)
                else:
                    frag = series.compressed_minmax[s : s + window]
                    degree = trend_match_degree(frag, strict_raster, STRICT)
                if degree < TREND_DEGREE_THRESHOLD:
                    continue
            out.append(
                FragmentNode(
                    series=name, start=s, length=node.length, degree=degree
                )
            )
    return out


class LinkEvaluator:
    """Computes (and caches) the relation instance for a concrete oriented
    fragment pair of one relalink.
    """

    def __init__(self, query: QueryGraph, artifacts: ArtifactSet):
        self.query = query
        self.artifacts = artifacts
        self.window = artifacts.params.window_symbols
        self.sampling = artifacts.params.sampling_length
        self._cache: dict[tuple, RelationLinkInstance] = {}

    def _fragment(self, node: FragmentNode, kind: RelationKind) -> np.ndarray:
        series = self.artifacts.series[node.series]
        s = node.start
        if kind == RelationKind.SIMILARITY:
            return series.compressed_minmax[s : s + self.window]
        return series.compressed_raw[s : s + self.window]

    def strength(self, link: Relalink, source: FragmentNode, target: FragmentNode) -> float:
        kind = link.kind
        if kind == RelationKind.CORRELATION:
            return pearson_strength(
                self._fragment(source, kind), self._fragment(target, kind)
            )
        if kind == RelationKind.SIMILARITY:
            return similarity_strength(
                self._fragment(source, kind), self._fragment(target, kind)
            )
        if kind == RelationKind.CAUSALITY:
            return granger_strength(
                self._fragment(source, kind),
                self._fragment(target, kind),
                self.query.max_lag,
            )
        if kind == RelationKind.META:
            return meta_strength(
                self.artifacts.labels, source.series, target.series, link.meta_key
            )
        return arithmetic_strength(
            self._fragment(source, kind), self._fragment(target, kind), link.arithmetic
        )

    def lag_satisfied(self, link: Relalink, source: FragmentNode, target: FragmentNode) -> bool:
        realized = (target.start - source.start) * self.sampling
        required = self.query.required_lag(link)
        if self.query.mode == FUZZY:
            return abs(realized - required) <= self.sampling
        return realized == required

    def instance(
        self, link: Relalink, source: FragmentNode, target: FragmentNode
    ) -> RelationLinkInstance:
        key = (link.id, source.key, target.key)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        strength = self.strength(link, source, target)
        lo, hi = link.threshold
        satisfied = self.lag_satisfied(link, source, target) and lo <= strength <= hi
        inst = RelationLinkInstance(
            link_id=link.id,
            kind=link.kind,
            strength=strength,
            lag=(target.start - source.start) * self.sampling,
            satisfied=satisfied,
        )
        self._cache[key] = inst
        return inst


def build_links(
    link: Relalink,
    nodes_src: list[FragmentNode],
    nodes_tgt: list[FragmentNode],
    evaluator: LinkEvaluator,
) -> dict[tuple[tuple[str, int], tuple[str, int]], RelationLinkInstance]:
    """Step 2: satisfied link instances (the link set Y_k).

    Only fragment pairs whose realized lag is admissible can satisfy the
    link, so candidates are looked up by start instead of scanning the full
    product.
    """
    sampling = evaluator.sampling
    required = evaluator.query.required_lag(link)
    if evaluator.query.mode == FUZZY:
        lo_delta = math.ceil((required - sampling) / sampling)
        hi_delta = math.floor((required + sampling) / sampling)
        deltas = range(lo_delta, hi_delta + 1)
    else:
        if required % sampling != 0:
            return {}
        deltas = [required // sampling]

    by_start: dict[int, list[FragmentNode]] = {}
    for node in nodes_tgt:
        by_start.setdefault(node.start, []).append(node)

    out: dict[tuple[tuple[str, int], tuple[str, int]], RelationLinkInstance] = {}
    for src in nodes_src:
        for delta in deltas:
            for tgt in by_start.get(src.start + delta, ()):
                inst = evaluator.instance(link, src, tgt)
                if inst.satisfied:
                    out[(src.key, tgt.key)] = inst
    return out


def score(result: ResultGraph) -> float:
    """Sum of fragment degrees plus absolute strengths of satisfied links."""
    return math.fsum(
        [node.degree for node in result.assignment.values()]
        + [abs(inst.strength) for inst in result.links if inst.satisfied]
    )


def _score_parts(assignment: dict[str, FragmentNode], links) -> float:
    return math.fsum(
        [node.degree for node in assignment.values()]
        + [abs(inst.strength) for inst in links if inst.satisfied]
    )


def search(
    query: QueryGraph,
    graph: DatasetGraph,
    evaluator: LinkEvaluator,
    cap: int = DEFAULT_RESULT_CAP,
    memoize: bool = True,
    cancel: threading.Event | None = None,
    deadline: float | None = None,
) -> tuple[list[ResultGraph], bool, bool]:
    """Step 3: enumerate complete assignments in temporal order.

    Returns (results, truncated, timed_out): results ranked score descending
    (ties by fragment starts then series names in temporal order) and capped
    at ``cap``; on a deadline the results found so far are returned with
    both flags set.
    """
    order = temporal_order(query)
    pos_of = {box_id: i for i, box_id in enumerate(order)}
    fuzzy = query.mode == FUZZY

    # Links resolve at the later endpoint's position; the earliest box never
    # has any.
    resolved_at: list[list[Relalink]] = [[] for _ in order]
    for link in query.relalinks:
        resolved_at[max(pos_of[link.source], pos_of[link.target])].append(link)

    # Memo keys carry only the earlier boxes that still constrain the suffix.
    frontier: list[tuple[str, ...]] = []
    for pos in range(len(order)):
        needed = set()
        for later in range(pos, len(order)):
            for link in resolved_at[later]:
                for endpoint in (link.source, link.target):
                    if pos_of[endpoint] < pos:
                        needed.add(endpoint)
        frontier.append(tuple(sorted(needed)))

    memo: dict[tuple, list] = {}
    nodes_by_key = {
        box_id: {node.key: node for node in nodes}
        for box_id, nodes in graph.nodes.items()
    }
    # Per relalink, partner keys of each endpoint's satisfied pairs, so a
    # constrained position iterates partners instead of scanning every node.
    partners_of_src: dict[str, dict] = {}
    partners_of_tgt: dict[str, dict] = {}
    for link_id, pairs in graph.links.items():
        by_src: dict[tuple, set] = {}
        by_tgt: dict[tuple, set] = {}
        for src_key, tgt_key in pairs:
            by_src.setdefault(src_key, set()).add(tgt_key)
            by_tgt.setdefault(tgt_key, set()).add(src_key)
        partners_of_src[link_id] = by_src
        partners_of_tgt[link_id] = by_tgt

    def candidate_nodes(pos: int, assignment: dict[str, FragmentNode], unsat: int):
        box_id = order[pos]
        links_here = resolved_at[pos]
        # With spare fuzzy budget any node may carry the one unsatisfied
        # link, so only the exhausted-budget (or strict) case can narrow.
        if not links_here or (fuzzy and unsat == 0):
            return graph.nodes[box_id]
        allowed: set | None = None
        for link in links_here:
            if link.source == box_id:
                keys = partners_of_tgt[link.id].get(assignment[link.target].key, set())
            else:
                keys = partners_of_src[link.id].get(assignment[link.source].key, set())
            allowed = set(keys) if allowed is None else allowed & keys
            if not allowed:
                return []
        lookup = nodes_by_key[box_id]
        return [lookup[k] for k in sorted(allowed)]

    def extend(pos: int, assignment: dict[str, FragmentNode], unsat: int):
        if cancel is not None and cancel.is_set():
            raise QueryCancelled("query cancelled")
        if deadline is not None and time.monotonic() > deadline:
            raise _DeadlineReached()
        if pos == len(order):
            return [((), (), 0)]
        key = None
        if memoize:
            key = (
                pos,
                tuple(assignment[b].key for b in frontier[pos]),
                unsat if fuzzy else 0,
            )
            hit = memo.get(key)
            if hit is not None:
                return hit
        box_id = order[pos]
        completions = []
        for node in candidate_nodes(pos, assignment, unsat):
            insts: list[RelationLinkInstance] = []
            added_unsat = 0
            ok = True
            for link in resolved_at[pos]:
                src_id, tgt_id = link.source, link.target
                src_node = node if src_id == box_id else assignment[src_id]
                tgt_node = node if tgt_id == box_id else assignment[tgt_id]
                inst = graph.links[link.id].get((src_node.key, tgt_node.key))
                if inst is None:
                    if not fuzzy or unsat + added_unsat >= 1:
                        ok = False
                        break
                    inst = evaluator.instance(link, src_node, tgt_node)
                    added_unsat += 1
                insts.append(inst)
            if not ok:
                continue
            assignment[box_id] = node
            for tail_assign, tail_links, tail_unsat in extend(
                pos + 1, assignment, unsat + added_unsat
            ):
                completions.append(
                    (
                        ((box_id, node), *tail_assign),
                        (*insts, *tail_links),
                        added_unsat + tail_unsat,
                    )
                )
            del assignment[box_id]
        if memoize:
            memo[key] = completions
        return completions

    results: list[ResultGraph] = []
    seen: set[tuple] = set()
    timed_out = False
    first = order[0]
    try:
        for node in graph.nodes[first]:
            for tail_assign, links, _ in extend(1, {first: node}, 0):
                assignment = dict((((first, node),) + tail_assign))
                dedupe_key = tuple(assignment[b].key for b in order)
                if dedupe_key in seen:
                    continue
                seen.add(dedupe_key)
                results.append(
                    ResultGraph(
                        assignment=assignment,
                        links=tuple(links),
                        score=_score_parts(assignment, links),
                    )
                )
    except _DeadlineReached:
        timed_out = True

    results.sort(
        key=lambda r: (
            -r.score,
            tuple(r.assignment[b].start for b in order),
            tuple(r.assignment[b].series for b in order),
        )
    )
    truncated = len(results) > cap or timed_out
    return results[:cap], truncated, timed_out


def _histogram(values: list[float], lo: float, hi: float) -> dict:
    counts, edges = np.histogram(values, bins=HISTOGRAM_BINS, range=(lo, hi))
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def _column_stats(values: list[float], domain: tuple[float, float]) -> dict:
    if not values:
        return {
            "min": None,
            "max": None,
            "mean": None,
            "histogram": _histogram([], domain[0], domain[1]),
        }
    return {
        "min": min(values),
        "max": max(values),
        "mean": math.fsum(values) / len(values),
        "histogram": _histogram(values, domain[0], domain[1]),
    }


def summarize(
    query: QueryGraph, results: list[ResultGraph], artifacts: ArtifactSet
) -> dict:
    """Aggregates feeding the result views: per-column distributions, a
    per-timestep occurrence count, completion alternatives per default box,
    and strength/lag statistics per relalink.
    """
    order = temporal_order(query)
    m = artifacts.dataset.length
    sampling = artifacts.params.sampling_length

    columns = []
    for box_id in order:
        degrees = [r.assignment[box_id].degree for r in results]
        columns.append(
            {"id": box_id, "column_type": "fragment", "stats": _column_stats(degrees, (0.0, 1.0))}
        )
    for link in query.relalinks:
        strengths = [
            inst.strength
            for r in results
            for inst in r.links
            if inst.link_id == link.id
        ]
        columns.append(
            {
                "id": link.id,
                "column_type": "relation",
                "stats": _column_stats(strengths, DOMAINS[link.kind]),
            }
        )

    # Count results covering each original timestep via an interval diff array.
    diff = np.zeros(m + 1, dtype=np.int64)
    for r in results:
        spans = sorted(
            (node.start * sampling, min(node.start * sampling + node.length, m))
            for node in r.assignment.values()
        )
        merged: list[list[int]] = []
        for lo, hi in spans:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        for lo, hi in merged:
            diff[lo] += 1
            diff[hi] -= 1
    occurrence = [int(v) for v in np.cumsum(diff[:m])]

    alternatives: dict[str, list[dict]] = {}
    for box in query.timeboxes:
        if not box.is_default:
            continue
        per_series: dict[str, list[float]] = {}
        for r in results:
            per_series.setdefault(r.assignment[box.id].series, []).append(r.score)
        rows = [
            {"series": name, "mean_score": math.fsum(scores) / len(scores)}
            for name, scores in per_series.items()
        ]
        rows.sort(key=lambda row: (-row["mean_score"], row["series"]))
        top = rows[0]["mean_score"] if rows else 0.0
        for row in rows:
            row["opacity"] = row["mean_score"] / top if top > 0 else 0.0
        alternatives[box.id] = rows

    link_stats: dict[str, dict] = {}
    for link in query.relalinks:
        insts = [
            inst
            for r in results
            for inst in r.links
            if inst.link_id == link.id and inst.satisfied
        ]
        lags: dict[str, int] = {}
        for inst in insts:
            lags[str(inst.lag)] = lags.get(str(inst.lag), 0) + 1
        link_stats[link.id] = {
            "mean_strength": (
                math.fsum(i.strength for i in insts) / len(insts) if insts else None
            ),
            "lags": lags,
        }

    return {
        "columns": columns,
        "occurrence": occurrence,
        "alternatives": alternatives,
        "linkStats": link_stats,
    }


def execute_query(
    query: QueryGraph,
    artifacts: ArtifactSet,
    cap: int = DEFAULT_RESULT_CAP,
    memoize: bool = True,
    cancel: threading.Event | None = None,
    timeout: float | None = None,
) -> QueryOutcome:
    """Run the full three-step pipeline and aggregate the summary.

    Touching a default timebox promotes its seeding relation index to the
    front of the build queue (blocking only on that index).
    """
    from .querymodel import validate_query

    diagnostics = [d for d in validate_query(query, artifacts) if d.is_error]
    if diagnostics:
        raise QueryValidationError(diagnostics)
    deadline = None if timeout is None else time.monotonic() + timeout

    evaluator = LinkEvaluator(query, artifacts)
    nodes = {box.id: filter_nodes(box, artifacts, query) for box in query.timeboxes}
    links = {}
    for link in query.relalinks:
        links[link.id] = build_links(
            link, nodes[link.source], nodes[link.target], evaluator
        )
    graph = DatasetGraph(nodes=nodes, links=links)
    results, truncated, timed_out = search(
        query, graph, evaluator, cap=cap, memoize=memoize, cancel=cancel,
        deadline=deadline,
    )
    summary = summarize(query, results, artifacts)
    return QueryOutcome(
        results=results, summary=summary, truncated=truncated, timed_out=timed_out
    )


# -- wire format ---------------------------------------------------------------


def fragment_to_dict(node: FragmentNode, artifacts: ArtifactSet) -> dict:
    sampling = artifacts.params.sampling_length
    timestamps = artifacts.dataset.timestamps
    start = node.start * sampling
    end = min(start + node.length, len(timestamps)) - 1
    return {
        "series": node.series,
        "start": start,
        "length": node.length,
        "degree": node.degree,
        "start_time": timestamps[start],
        "end_time": timestamps[end],
    }


def outcome_to_dict(outcome: QueryOutcome, query: QueryGraph, artifacts: ArtifactSet) -> dict:
    return {
        "results": [
            {
                "score": r.score,
                "fragments": {
                    box_id: fragment_to_dict(node, artifacts)
                    for box_id, node in r.assignment.items()
                },
                "links": [
                    {
                        "id": inst.link_id,
                        "kind": inst.kind.value,
                        "strength": inst.strength,
                        "lag": inst.lag,
                        "satisfied": inst.satisfied,
                    }
                    for inst in r.links
                ],
            }
            for r in outcome.results
        ],
        "summary": outcome.summary,
        "truncated": outcome.truncated,
        "timed_out": outcome.timed_out,
    }
