"""Artifact persistence: one directory per dataset.

Layout::

    <dir>/manifest.json        params, step_unit, labels, file checksums
    <dir>/series.npz           timestamps + per-series columnar arrays
    <dir>/relation_<kind>.json descending (other, strength) lists per series

The manifest's checksums detect stale or corrupted artifact files; the trend
trie is cheap to rebuild and is reconstructed on load.
"""

from __future__ import annotations

import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .datamodel import Dataset, MetaLabels, PreprocessParams
from .errors import RelaqError
from .preprocess import (
    ArtifactSet,
    RelationIndex,
    SeriesArtifacts,
    build_trend_trie,
)
from .relations import INDEXED_KINDS

FORMAT_VERSION = 1

_ARRAY_FIELDS = ("raw", "compressed_raw", "compressed_minmax", "compressed_z")


class StaleArtifacts(RelaqError):
    pass


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def save_artifacts(artifacts: ArtifactSet, directory: str | Path) -> Path:
    """Persist a fully built ArtifactSet; blocks until all indexes are ready."""
    artifacts.wait_all()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    arrays: dict[str, np.ndarray] = {
        "timestamps": np.asarray(artifacts.dataset.timestamps, dtype=float)
    }
    symbols: dict[str, str] = {}
    for name, s in artifacts.series.items():
        for field in _ARRAY_FIELDS:
            arrays[f"{field}::{name}"] = getattr(s, field)
        symbols[name] = s.symbols
    series_path = directory / "series.npz"
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    series_path.write_bytes(buf.getvalue())

    files = {"series.npz": _sha256(series_path)}
    for kind in INDEXED_KINDS:
        index = artifacts.require(kind)
        payload = {
            name: [[other, strength] for other, strength in entries]
            for name, entries in index.order.items()
        }
        path = directory / f"relation_{kind.value}.json"
        path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        files[path.name] = _sha256(path)

    manifest = {
        "format_version": FORMAT_VERSION,
        "params": {
            "sampling_length": artifacts.params.sampling_length,
            "box_length": artifacts.params.box_length,
            "alphabet_size": artifacts.params.alphabet_size,
        },
        "step_unit": artifacts.dataset.step_unit,
        "series": list(artifacts.dataset.names),
        "length": artifacts.dataset.length,
        "labels": artifacts.labels.labels,
        "label_keys": list(artifacts.labels.keys),
        "symbols": symbols,
        "checksums": files,
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return directory


def load_artifacts(directory: str | Path) -> ArtifactSet:
    """Load a persisted artifact directory, verifying checksums."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise RelaqError(f"no artifact manifest in {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format_version") != FORMAT_VERSION:
        raise StaleArtifacts(
            f"unsupported artifact format {manifest.get('format_version')!r}"
        )
    for filename, expected in manifest["checksums"].items():
        path = directory / filename
        if not path.exists() or _sha256(path) != expected:
            raise StaleArtifacts(f"checksum mismatch for {filename}")

    params = PreprocessParams(
        sampling_length=manifest["params"]["sampling_length"],
        box_length=manifest["params"]["box_length"],
        alphabet_size=manifest["params"]["alphabet_size"],
    )
    with np.load(directory / "series.npz") as npz:
        timestamps = tuple(float(t) for t in npz["timestamps"])
        series: dict[str, SeriesArtifacts] = {}
        raw_series: dict[str, tuple[float, ...]] = {}
        for name in manifest["series"]:
            raw = npz[f"raw::{name}"]
            series[name] = SeriesArtifacts(
                name=name,
                raw=raw,
                compressed_raw=npz[f"compressed_raw::{name}"],
                compressed_minmax=npz[f"compressed_minmax::{name}"],
                compressed_z=npz[f"compressed_z::{name}"],
                symbols=manifest["symbols"][name],
                vmin=float(raw.min()),
                vmax=float(raw.max()),
            )
            raw_series[name] = tuple(float(v) for v in raw)

    dataset = Dataset(
        timestamps=timestamps, series=raw_series, step_unit=manifest["step_unit"]
    )
    labels = MetaLabels(
        labels={k: dict(v) for k, v in manifest["labels"].items()},
        keys=tuple(manifest["label_keys"]),
    )
    trie = build_trend_trie(
        {n: s.symbols for n, s in series.items()}, params.window_symbols
    )
    artifacts = ArtifactSet(dataset, labels, params, series, trie)
    for kind in INDEXED_KINDS:
        payload = json.loads(
            (directory / f"relation_{kind.value}.json").read_text(encoding="utf-8")
        )
        order = {
            name: tuple((other, float(s)) for other, s in entries)
            for name, entries in payload.items()
        }
        artifacts.set_index(RelationIndex(kind=kind, order=order))
    return artifacts
