"""Query graphs: timeboxes (nodes) linked by typed relation constraints.

A timebox constrains one time series fragment (name, sketched trend, value
bounds, temporal offset); a relalink constrains a pair of fragments with a
relation kind and a strength threshold interval. Queries run in strict mode
unless fuzzy is requested.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .datamodel import PreprocessParams
from .errors import Diagnostic, SchemaViolation
from .relations import (
    ARITHMETIC_COMPARATORS,
    ARITHMETIC_OPERATORS,
    DEFAULT_GRANGER_MAX_LAG,
    DOMAINS,
    ArithmeticSpec,
    RelationKind,
)

STRICT = "strict"
FUZZY = "fuzzy"


@dataclass(frozen=True)
class SketchPoint:
    x: float
    y: float


@dataclass(frozen=True)
class Timebox:
    id: str
    name: str | None = None  # None = default timebox: engine enumerates series
    offset: int = 0  # original samples, relative to the earliest timebox
    sketch: tuple[SketchPoint, ...] | None = None  # x in [0, box_length], y in [0, 1]
    value_bounds: tuple[float, float] | None = None  # original units

    @property
    def is_default(self) -> bool:
        return self.name is None


@dataclass(frozen=True)
class Relalink:
    id: str
    kind: RelationKind
    source: str  # timebox id; cause for causality
    target: str
    threshold: tuple[float, float]
    meta_key: str | None = None
    arithmetic: ArithmeticSpec | None = None


@dataclass(frozen=True)
class QueryGraph:
    timeboxes: tuple[Timebox, ...]
    relalinks: tuple[Relalink, ...] = ()
    mode: str = STRICT
    params: PreprocessParams | None = None
    max_lag: int = DEFAULT_GRANGER_MAX_LAG  # causality regression depth

    def timebox(self, box_id: str) -> Timebox | None:
        for box in self.timeboxes:
            if box.id == box_id:
                return box
        return None

    def links_of(self, box_id: str) -> list[Relalink]:
        return [l for l in self.relalinks if box_id in (l.source, l.target)]

    def required_lag(self, link: Relalink) -> int:
        """Required fragment-start difference in original samples."""
        src = self.timebox(link.source)
        tgt = self.timebox(link.target)
        return tgt.offset - src.offset


def temporal_order(query: QueryGraph) -> list[str]:
    """Timebox ids ascending by offset, ties broken by id."""
    return [b.id for b in sorted(query.timeboxes, key=lambda b: (b.offset, b.id))]


def _connected(query: QueryGraph) -> bool:
    if not query.timeboxes:
        return False
    adjacency: dict[str, set[str]] = {b.id: set() for b in query.timeboxes}
    for link in query.relalinks:
        if link.source in adjacency and link.target in adjacency:
            adjacency[link.source].add(link.target)
            adjacency[link.target].add(link.source)
    seen = {query.timeboxes[0].id}
    stack = [query.timeboxes[0].id]
    while stack:
        for nxt in adjacency[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(query.timeboxes)


def validate_query(query: QueryGraph, artifacts) -> list[Diagnostic]:
    """Structural and semantic checks; an empty list means the query can be
    executed. ``artifacts`` is a preprocess.ArtifactSet.
    """
    out: list[Diagnostic] = []
    params = query.params or artifacts.params
    window = params.window_symbols

    if not query.timeboxes:
        out.append(Diagnostic("EmptyQuery", "a query needs at least one timebox"))
        return out
    if query.params is not None and (
        query.params.sampling_length != artifacts.params.sampling_length
        or query.params.box_length != artifacts.params.box_length
    ):
        out.append(
            Diagnostic(
                "ParamsMismatch",
                f"query params {query.params.sampling_length}/{query.params.box_length} "
                f"differ from the artifacts' {artifacts.params.sampling_length}/"
                f"{artifacts.params.box_length}",
            )
        )
    ids = [b.id for b in query.timeboxes]
    if len(set(ids)) != len(ids):
        out.append(Diagnostic("DuplicateTimeboxId", "timebox ids must be unique"))
    if len({l.id for l in query.relalinks}) != len(query.relalinks):
        out.append(Diagnostic("DuplicateRelalinkId", "relalink ids must be unique"))

    for box in query.timeboxes:
        if box.name is not None and box.name not in artifacts.series:
            out.append(
                Diagnostic("UnknownSeries", f"timebox {box.id!r} names {box.name!r}")
            )
        if box.offset < 0:
            out.append(
                Diagnostic("NegativeOffset", f"timebox {box.id!r} offset < 0")
            )
        if box.value_bounds is not None and box.value_bounds[0] > box.value_bounds[1]:
            out.append(
                Diagnostic("InvalidValueBounds", f"timebox {box.id!r} has lo > hi")
            )
        if box.sketch is not None:
            xs = [p.x for p in box.sketch]
            if len(xs) < 2:
                out.append(
                    Diagnostic(
                        "DegenerateSketch", f"timebox {box.id!r} sketch needs 2 points"
                    )
                )
            elif any(b <= a for a, b in zip(xs, xs[1:])):
                out.append(
                    Diagnostic(
                        "SketchNotMonotone",
                        f"timebox {box.id!r} sketch x must strictly increase",
                    )
                )

    id_set = set(ids)
    for link in query.relalinks:
        if link.source not in id_set or link.target not in id_set:
            out.append(
                Diagnostic("DanglingEndpoint", f"relalink {link.id!r} endpoint missing")
            )
            continue
        if link.source == link.target:
            out.append(
                Diagnostic("SelfLink", f"relalink {link.id!r} endpoints must differ")
            )
        lo, hi = link.threshold
        dom_lo, dom_hi = DOMAINS[link.kind]
        if lo > hi or lo < dom_lo or hi > dom_hi:
            out.append(
                Diagnostic(
                    "ThresholdOutOfDomain",
                    f"relalink {link.id!r} threshold [{lo}, {hi}] outside "
                    f"[{dom_lo}, {dom_hi}]",
                )
            )
        if link.kind == RelationKind.META:
            if link.meta_key is None:
                out.append(
                    Diagnostic("MissingMetaKey", f"relalink {link.id!r} needs meta_key")
                )
            elif link.meta_key not in artifacts.labels.keys:
                out.append(
                    Diagnostic(
                        "UnknownKey",
                        f"relalink {link.id!r} meta_key {link.meta_key!r} not in config",
                    )
                )
        if link.kind == RelationKind.ARITHMETIC and link.arithmetic is None:
            out.append(
                Diagnostic(
                    "MissingArithmeticSpec", f"relalink {link.id!r} needs arithmetic"
                )
            )
        if link.kind == RelationKind.CORRELATION and window < 2:
            out.append(
                Diagnostic(
                    "WindowTooShort",
                    f"correlation relalink {link.id!r} needs a window of >= 2 "
                    f"compressed samples (got {window})",
                )
            )
        if link.kind == RelationKind.CAUSALITY and window < 3 * query.max_lag + 2:
            out.append(
                Diagnostic(
                    "WindowTooShort",
                    f"causality relalink {link.id!r} needs a window of >= "
                    f"{3 * query.max_lag + 2} compressed samples (got {window})",
                )
            )
        required = None
        src = query.timebox(link.source)
        tgt = query.timebox(link.target)
        if src is not None and tgt is not None:
            required = tgt.offset - src.offset
        if required is not None and required % params.sampling_length != 0:
            out.append(
                Diagnostic(
                    "LagNotRepresentable",
                    f"relalink {link.id!r} lag {required} is not a multiple of the "
                    f"sampling length {params.sampling_length}",
                    severity="warning",
                )
            )

    if not _connected(query):
        out.append(
            Diagnostic("DisconnectedQuery", "all timeboxes must be link-connected")
        )

    shortest = min(s.compressed_length for s in artifacts.series.values())
    if window > shortest:
        out.append(
            Diagnostic(
                "WindowTooLong",
                f"window of {window} compressed samples exceeds the shortest series",
            )
        )
    return out


# -- JSON round trip ---------------------------------------------------------

_KINDS = {k.value: k for k in RelationKind if k != RelationKind.LAG}


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaViolation(f"{path}/{key}", "missing required field")
    return obj[key]


def _as_id(value, path: str) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise SchemaViolation(path, "id must be a string or integer")
    return str(value)


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(path, "expected a number")
    return float(value)


def parse_query(text: str | bytes | dict) -> QueryGraph:
    """Parse the published query JSON schema into a QueryGraph."""
    if isinstance(text, dict):
        doc = text
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaViolation("", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaViolation("", "query must be a JSON object")

    mode = doc.get("mode", STRICT)
    if mode not in (STRICT, FUZZY):
        raise SchemaViolation("/mode", f"unknown mode {mode!r}")

    params = None
    if "sampling_length" in doc or "box_length" in doc:
        try:
            params = PreprocessParams(
                sampling_length=int(_require(doc, "sampling_length", "")),
                box_length=int(_require(doc, "box_length", "")),
            )
        except ValueError as exc:
            raise SchemaViolation("/sampling_length", str(exc)) from exc

    raw_boxes = _require(doc, "timeboxes", "")
    if not isinstance(raw_boxes, list) or not raw_boxes:
        raise SchemaViolation("/timeboxes", "expected a non-empty array")
    boxes: list[Timebox] = []
    for i, rb in enumerate(raw_boxes):
        path = f"/timeboxes/{i}"
        if not isinstance(rb, dict):
            raise SchemaViolation(path, "expected an object")
        sketch = None
        if rb.get("sketch") is not None:
            pts = rb["sketch"]
            if not isinstance(pts, list):
                raise SchemaViolation(f"{path}/sketch", "expected an array of points")
            sketch = tuple(
                SketchPoint(
                    x=_as_number(_require(p, "x", f"{path}/sketch/{j}"), f"{path}/sketch/{j}/x"),
                    y=_as_number(_require(p, "y", f"{path}/sketch/{j}"), f"{path}/sketch/{j}/y"),
                )
                for j, p in enumerate(pts)
            )
        bounds = None
        if rb.get("value_bounds") is not None:
            vb = rb["value_bounds"]
            if not isinstance(vb, list) or len(vb) != 2:
                raise SchemaViolation(f"{path}/value_bounds", "expected [lo, hi]")
            bounds = (
                _as_number(vb[0], f"{path}/value_bounds/0"),
                _as_number(vb[1], f"{path}/value_bounds/1"),
            )
        offset = rb.get("offset", 0)
        if isinstance(offset, bool) or not isinstance(offset, int):
            raise SchemaViolation(f"{path}/offset", "offset must be an integer")
        name = rb.get("name")
        if name is not None and not isinstance(name, str):
            raise SchemaViolation(f"{path}/name", "name must be a string")
        boxes.append(
            Timebox(
                id=_as_id(_require(rb, "id", path), f"{path}/id"),
                name=name,
                offset=offset,
                sketch=sketch,
                value_bounds=bounds,
            )
        )

    links: list[Relalink] = []
    for i, rl in enumerate(doc.get("relalinks", [])):
        path = f"/relalinks/{i}"
        if not isinstance(rl, dict):
            raise SchemaViolation(path, "expected an object")
        kind_name = _require(rl, "kind", path)
        kind = _KINDS.get(kind_name)
        if kind is None:
            raise SchemaViolation(f"{path}/kind", f"unknown kind {kind_name!r}")
        threshold = _require(rl, "threshold", path)
        if not isinstance(threshold, list) or len(threshold) != 2:
            raise SchemaViolation(f"{path}/threshold", "expected [lo, hi]")
        arithmetic = None
        if rl.get("arithmetic") is not None:
            ar = rl["arithmetic"]
            op = _require(ar, "op", f"{path}/arithmetic")
            cmp_ = _require(ar, "cmp", f"{path}/arithmetic")
            if op not in ARITHMETIC_OPERATORS:
                raise SchemaViolation(f"{path}/arithmetic/op", f"unknown operator {op!r}")
            if cmp_ not in ARITHMETIC_COMPARATORS:
                raise SchemaViolation(
                    f"{path}/arithmetic/cmp", f"unknown comparator {cmp_!r}"
                )
            arithmetic = ArithmeticSpec(operator=op, comparator=cmp_)
        meta_key = rl.get("meta_key")
        if meta_key is not None and not isinstance(meta_key, str):
            raise SchemaViolation(f"{path}/meta_key", "meta_key must be a string")
        links.append(
            Relalink(
                id=_as_id(_require(rl, "id", path), f"{path}/id"),
                kind=kind,
                source=_as_id(_require(rl, "source", path), f"{path}/source"),
                target=_as_id(_require(rl, "target", path), f"{path}/target"),
                threshold=(
                    _as_number(threshold[0], f"{path}/threshold/0"),
                    _as_number(threshold[1], f"{path}/threshold/1"),
                ),
                meta_key=meta_key,
                arithmetic=arithmetic,
            )
        )

    max_lag = doc.get("max_lag", DEFAULT_GRANGER_MAX_LAG)
    if isinstance(max_lag, bool) or not isinstance(max_lag, int) or max_lag < 1:
        raise SchemaViolation("/max_lag", "max_lag must be a positive integer")

    return QueryGraph(
        timeboxes=tuple(boxes),
        relalinks=tuple(links),
        mode=mode,
        params=params,
        max_lag=max_lag,
    )


def query_to_dict(query: QueryGraph) -> dict:
    doc: dict = {"mode": query.mode}
    if query.params is not None:
        doc["sampling_length"] = query.params.sampling_length
        doc["box_length"] = query.params.box_length
    if query.max_lag != DEFAULT_GRANGER_MAX_LAG:
        doc["max_lag"] = query.max_lag
    doc["timeboxes"] = []
    for box in query.timeboxes:
        rb: dict = {"id": box.id, "offset": box.offset}
        if box.name is not None:
            rb["name"] = box.name
        if box.sketch is not None:
            rb["sketch"] = [{"x": p.x, "y": p.y} for p in box.sketch]
        if box.value_bounds is not None:
            rb["value_bounds"] = list(box.value_bounds)
        doc["timeboxes"].append(rb)
    doc["relalinks"] = []
    for link in query.relalinks:
        rl: dict = {
            "id": link.id,
            "kind": link.kind.value,
            "source": link.source,
            "target": link.target,
            "threshold": list(link.threshold),
        }
        if link.meta_key is not None:
            rl["meta_key"] = link.meta_key
        if link.arithmetic is not None:
            rl["arithmetic"] = {
                "op": link.arithmetic.operator,
                "cmp": link.arithmetic.comparator,
            }
        doc["relalinks"].append(rl)
    return doc


def serialize_query(query: QueryGraph) -> str:
    return json.dumps(query_to_dict(query), indent=2)


def with_mode(query: QueryGraph, mode: str) -> QueryGraph:
    return replace(query, mode=mode)
