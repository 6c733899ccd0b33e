"""Command-line front door: ingest, query, recommend, serve, bench.

Exit codes: 0 success, 1 usage, 2 data error, 3 query error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import datamodel, matcher, preprocess, querymodel, recommender, storage
from .errors import RelaqError, SchemaViolation
from .matcher import QueryValidationError
from .relations import RelationKind
from .service import canonical_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_QUERY = 3


def _fail(code: int, message: str) -> int:
    print(f"relaq: {message}", file=sys.stderr)
    return code


def _artifact_dir(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    env = os.environ.get("RELAQ_DATA_DIR")
    if env:
        return Path(env)
    raise SystemExit(_fail(EXIT_USAGE, "no artifact directory (set RELAQ_DATA_DIR)"))


def cmd_ingest(args) -> int:
    try:
        data_text = Path(args.data).read_text(encoding="utf-8")
        config_text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(EXIT_DATA, str(exc))
    try:
        params = datamodel.PreprocessParams(
            sampling_length=args.sampling, box_length=args.box
        )
        dataset = datamodel.parse_dataset(data_text, step_unit=args.unit)
        labels = datamodel.parse_config(config_text)
    except (RelaqError, ValueError) as exc:
        return _fail(EXIT_DATA, str(exc))
    diagnostics = datamodel.validate(dataset, labels)
    for d in diagnostics:
        print(f"relaq: {d}", file=sys.stderr)
    if any(d.is_error for d in diagnostics):
        return EXIT_DATA
    try:
        artifacts = preprocess.preprocess(dataset, labels, params)
        out_dir = storage.save_artifacts(artifacts, _artifact_dir(args.out))
    except (RelaqError, ValueError) as exc:
        return _fail(EXIT_DATA, str(exc))
    print(out_dir)
    return EXIT_OK


def _load(args) -> preprocess.ArtifactSet:
    return storage.load_artifacts(_artifact_dir(args.dir))


def _results_csv(payload: dict) -> str:
    # One row per (result, fragment); the score repeats for easy triage.
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["result", "score", "timebox", "series", "start", "length", "degree"]
    )
    for i, result in enumerate(payload["results"]):
        for box_id in sorted(result["fragments"]):
            frag = result["fragments"][box_id]
            writer.writerow(
                [
                    i,
                    result["score"],
                    box_id,
                    frag["series"],
                    frag["start"],
                    frag["length"],
                    frag["degree"],
                ]
            )
    return out.getvalue()


def cmd_query(args) -> int:
    try:
        artifacts = _load(args)
    except (RelaqError, OSError) as exc:
        return _fail(EXIT_DATA, str(exc))
    try:
        query = querymodel.parse_query(Path(args.query).read_text(encoding="utf-8"))
        if args.fuzzy:
            query = querymodel.with_mode(query, querymodel.FUZZY)
        outcome = matcher.execute_query(query, artifacts)
    except SchemaViolation as exc:
        return _fail(EXIT_QUERY, str(exc))
    except (QueryValidationError, RelaqError) as exc:
        return _fail(EXIT_QUERY, str(exc))
    except OSError as exc:
        return _fail(EXIT_USAGE, str(exc))
    payload = matcher.outcome_to_dict(outcome, query, artifacts)
    # JSON output is byte-identical to the HTTP query endpoint body.
    text = _results_csv(payload) if args.format == "csv" else canonical_json(payload)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_recommend(args) -> int:
    try:
        artifacts = _load(args)
    except (RelaqError, OSError) as exc:
        return _fail(EXIT_DATA, str(exc))
    try:
        query = querymodel.parse_query(Path(args.query).read_text(encoding="utf-8"))
        matrix = recommender.recommend(args.focus, query, artifacts)
    except SchemaViolation as exc:
        return _fail(EXIT_QUERY, str(exc))
    except (QueryValidationError, RelaqError) as exc:
        return _fail(EXIT_QUERY, str(exc))
    except OSError as exc:
        return _fail(EXIT_USAGE, str(exc))
    print(canonical_json(recommender.matrix_to_dict(matrix, query)))
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        artifacts = _load(args)
    except (RelaqError, OSError) as exc:
        return _fail(EXIT_DATA, str(exc))
    import uvicorn

    from .service import DatasetEntry, create_app

    app = create_app()
    entry_id = args.id or "local"
    app.state.registry[entry_id] = DatasetEntry(
        id=entry_id, artifacts=artifacts, params=artifacts.params
    )
    print(f"serving dataset {entry_id!r} on port {args.port}")
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _bench_dataset(n_series: int, length: int, seed: int = 7) -> datamodel.Dataset:
    rng = np.random.default_rng(seed)
    base = np.cumsum(rng.normal(size=length))
    series = {}
    for i in range(n_series):
        noise = np.cumsum(rng.normal(size=length))
        series[f"s{i:03d}"] = tuple(float(v) for v in (base * 0.5 + noise))
    return datamodel.Dataset(
        timestamps=tuple(float(t) for t in range(length)), series=series
    )


def cmd_bench(args) -> int:
    """Latency table over dataset sizes and relation counts."""
    sizes_n = [max(2, args.series // 4), max(2, args.series // 2), args.series]
    sizes_m = [max(50, args.length // 4), max(50, args.length // 2), args.length]
    print(f"{'N':>6} {'M':>8} {'k':>3} {'preprocess_s':>13} {'query_s':>9} {'results':>8}")
    for n in sizes_n:
        for m in sizes_m:
            dataset = _bench_dataset(n, m)
            sampling = max(1, m // 500)
            box = sampling * 10
            params = datamodel.PreprocessParams(
                sampling_length=sampling, box_length=box
            )
            t0 = time.perf_counter()
            artifacts = preprocess.preprocess(
                dataset, datamodel.MetaLabels(), params, budget_seconds=0.0
            )
            artifacts.require(RelationKind.CORRELATION)
            t_pre = time.perf_counter() - t0
            for k in (1, 2):
                boxes = [
                    {"id": "A", "name": "s000", "offset": 0},
                    {"id": "B", "offset": 0},
                ]
                links = [
                    {
                        "id": "r1",
                        "kind": "correlation",
                        "source": "A",
                        "target": "B",
                        "threshold": [0.8, 1.0],
                    }
                ]
                if k == 2:
                    boxes.append({"id": "C", "name": "s001", "offset": 0})
                    links.append(
                        {
                            "id": "r2",
                            "kind": "similarity",
                            "source": "B",
                            "target": "C",
                            "threshold": [0.5, 1.0],
                        }
                    )
                    artifacts.require(RelationKind.SIMILARITY)
                query = querymodel.parse_query(
                    {"mode": "strict", "timeboxes": boxes, "relalinks": links}
                )
                t0 = time.perf_counter()
                outcome = matcher.execute_query(query, artifacts)
                t_query = time.perf_counter() - t0
                print(
                    f"{n:>6} {m:>8} {k:>3} {t_pre:>13.3f} {t_query:>9.3f} "
                    f"{len(outcome.results):>8}"
                )
            artifacts.cancel()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaq", description="relation-driven multiple time series queries"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, preprocess, and persist a dataset")
    p.add_argument("data", help="dataset CSV (timestamp + one column per series)")
    p.add_argument("config", help="label config CSV (name + label columns)")
    p.add_argument("--sampling", type=int, required=True, help="samples per segment")
    p.add_argument("--box", type=int, required=True, help="samples per query window")
    p.add_argument("--unit", default="sample", help="time step unit, display only")
    p.add_argument("--out", help="artifact directory (default RELAQ_DATA_DIR)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", help="run a query JSON against an artifact dir")
    p.add_argument("dir", help="artifact directory")
    p.add_argument("query", help="query JSON file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--fuzzy", action="store_true", help="force fuzzy mode")
    p.add_argument("--out", help="write output to a file instead of stdout")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("recommend", help="guidance matrix for a focus timebox")
    p.add_argument("dir", help="artifact directory")
    p.add_argument("query", help="query JSON file")
    p.add_argument("--focus", required=True, help="focus timebox id")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("serve", help="serve an artifact dir over HTTP")
    p.add_argument("dir", help="artifact directory")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--id", help="dataset id to register (default 'local')")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="synthetic scaling report")
    p.add_argument("dir", nargs="?", help="unused, kept for symmetry")
    p.add_argument("--series", type=int, default=64)
    p.add_argument("--length", type=int, default=2000)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
