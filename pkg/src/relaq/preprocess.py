"""Derived artifacts: compressed series, symbolic sequences, trend trie, and
pairwise relation indexes, with background/priority build semantics.

Per series the pipeline keeps three compressed forms, all produced by
segment-mean compression (block averages) of the full-length series:

* ``compressed_raw``    - original units; correlation/causality/arithmetic
* ``compressed_minmax`` - min-max-normalized first; similarity and trends
* ``compressed_z``      - z-normalized first; symbolized for the trend trie
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import stats as _scipy_stats

from .datamodel import Dataset, MetaLabels, PreprocessParams
from .errors import IndexUnavailable, WindowTooLong
from .relations import (
    INDEXED_KINDS,
    RelationKind,
    granger_strength,
    pearson_strength,
    similarity_strength,
)

ALPHABET = "abcd"

# Gaussian quantile breakpoints for a 4-letter alphabet: equal-probability
# bands under N(0, 1).
SAX_BREAKPOINTS = tuple(float(v) for v in _scipy_stats.norm.ppf([0.25, 0.5, 0.75]))

DEFAULT_BUDGET_SECONDS = 120.0


def minmax_normalize(values) -> np.ndarray:
    """Map to [0, 1] via (x - min)/(max - min); constant input maps to 0.5."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("cannot normalize an empty sequence")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return np.full_like(x, 0.5)
    return (x - lo) / (hi - lo)


def z_normalize(values) -> np.ndarray:
    """Map to mean 0, population stdev 1; constant input maps to all zeros.

    Centering runs twice so the output mean stays below 1e-9 even when the
    input mean dwarfs its spread.
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("cannot normalize an empty sequence")
    std = float(x.std())
    if std == 0.0:
        return np.zeros_like(x)
    centered = x - x.mean()
    centered -= centered.mean()
    return centered / std


def paa_compress(values, sampling_length: int) -> np.ndarray:
    """Average consecutive blocks of ``sampling_length`` samples.

    A partial tail block is averaged over its actual length, so the output
    length is ceil(len(values) / sampling_length).
    """
    if sampling_length < 1:
        raise ValueError("sampling_length must be >= 1")
    x = np.asarray(values, dtype=float)
    if sampling_length == 1:
        return x.copy()
    n = len(x)
    out = np.empty(math.ceil(n / sampling_length))
    for i in range(len(out)):
        out[i] = x[i * sampling_length : (i + 1) * sampling_length].mean()
    return out


def sax_symbolize(z_values) -> str:
    """Discretize z-normalized values into the 4-letter alphabet.

    Bands: (-inf, b0) -> a, [b0, 0) -> b, [0, b1) -> c, [b1, inf) -> d,
    with b0/b1 the 25%/75% Gaussian quantiles.
    """
    x = np.asarray(z_values, dtype=float)
    idx = np.searchsorted(SAX_BREAKPOINTS, x, side="right")
    return "".join(ALPHABET[i] for i in idx)


class TrieNode:
    __slots__ = ("children", "count", "ratio", "occurrences")

    def __init__(self):
        self.children: dict[str, TrieNode] = {}
        self.count = 0
        self.ratio = 1.0
        self.occurrences: list[tuple[str, int]] = []


@dataclass
class TrendTrie:
    """Prefix tree over sliding symbol windows.

    Each node records how often each next symbol followed the node's prefix
    (``ratio`` = child count / parent count); leaves list every
    (series, start) window they terminate, with starts in compressed-sample
    units.
    """

    root: TrieNode
    depth: int

    def walk(self, prefix: Iterable[str]) -> TrieNode | None:
        node = self.root
        for symbol in prefix:
            node = node.children.get(symbol)
            if node is None:
                return None
        return node

    def lookup(self, window: str) -> list[tuple[str, int]]:
        """Occurrences of an exact depth-length window; [] when absent."""
        node = self.walk(window)
        return list(node.occurrences) if node is not None else []


def build_trend_trie(symbol_seqs: dict[str, str], window_symbols: int) -> TrendTrie:
    """Insert every length-``window_symbols`` window of every sequence,
    sliding by one symbol.
    """
    if window_symbols < 1:
        raise ValueError("window_symbols must be >= 1")
    for name, seq in symbol_seqs.items():
        if window_symbols > len(seq):
            raise WindowTooLong(
                f"window of {window_symbols} symbols exceeds series {name!r} "
                f"({len(seq)} symbols)"
            )
    root = TrieNode()
    for name, seq in symbol_seqs.items():
        for start in range(len(seq) - window_symbols + 1):
            node = root
            node.count += 1
            for symbol in seq[start : start + window_symbols]:
                child = node.children.get(symbol)
                if child is None:
                    child = TrieNode()
                    node.children[symbol] = child
                child.count += 1
                node = child
            node.occurrences.append((name, start))

    def _set_ratios(node: TrieNode):
        for child in node.children.values():
            child.ratio = child.count / node.count
            _set_ratios(child)

    _set_ratios(root)
    return TrendTrie(root=root, depth=window_symbols)


def suggest_next_symbols(trie: TrendTrie, prefix: Iterable[str]) -> list[tuple[str, float]]:
    """Next-symbol continuations of ``prefix``, descending by occurrence
    ratio (ties alphabetical); [] for unknown prefixes.
    """
    node = trie.walk(prefix)
    if node is None:
        return []
    items = [(symbol, child.ratio) for symbol, child in node.children.items()]
    items.sort(key=lambda it: (-it[1], it[0]))
    return items


@dataclass(frozen=True)
class SeriesArtifacts:
    """All per-series derived forms consumed by matching."""

    name: str
    raw: np.ndarray
    compressed_raw: np.ndarray
    compressed_minmax: np.ndarray
    compressed_z: np.ndarray
    symbols: str
    vmin: float
    vmax: float

    @property
    def compressed_length(self) -> int:
        return len(self.compressed_raw)

    def series_norm(self, values) -> np.ndarray:
        """Apply this series' own min-max map to arbitrary original-unit
        values (constant series pin to 0.5, matching minmax_normalize).
        """
        x = np.asarray(values, dtype=float)
        if self.vmax == self.vmin:
            return np.full_like(x, 0.5)
        return (x - self.vmin) / (self.vmax - self.vmin)


def build_series_artifacts(name: str, values, sampling_length: int) -> SeriesArtifacts:
    raw = np.asarray(values, dtype=float)
    return SeriesArtifacts(
        name=name,
        raw=raw,
        compressed_raw=paa_compress(raw, sampling_length),
        compressed_minmax=paa_compress(minmax_normalize(raw), sampling_length),
        compressed_z=paa_compress(z_normalize(raw), sampling_length),
        symbols=sax_symbolize(paa_compress(z_normalize(raw), sampling_length)),
        vmin=float(raw.min()),
        vmax=float(raw.max()),
    )


@dataclass(frozen=True)
class RelationIndex:
    """Per-series ranking of all other series by whole-length strength.

    For causality the key is the cause: order[A] ranks how strongly A
    drives each other series.
    """

    kind: RelationKind
    order: dict[str, tuple[tuple[str, float], ...]]

    def top(self, name: str, k: int = 20) -> list[tuple[str, float]]:
        return list(self.order.get(name, ())[:k])

    def strength_between(self, a: str, b: str) -> float:
        for other, s in self.order.get(a, ()):
            if other == b:
                return s
        raise KeyError(f"no entry for pair ({a!r}, {b!r})")


def _whole_length_strength(
    kind: RelationKind, a: SeriesArtifacts, b: SeriesArtifacts
) -> float:
    if kind == RelationKind.CORRELATION:
        return pearson_strength(a.compressed_raw, b.compressed_raw)
    if kind == RelationKind.SIMILARITY:
        return similarity_strength(a.compressed_minmax, b.compressed_minmax)
    if kind == RelationKind.CAUSALITY:
        # Clamp the lag depth so the F-test stays feasible on short series.
        length = a.compressed_length
        max_lag = min(4, (length - 2) // 3)
        if max_lag < 1:
            return 0.0
        return granger_strength(a.compressed_raw, b.compressed_raw, max_lag)
    raise ValueError(f"no whole-length index for kind {kind}")


def build_relation_index(
    series: dict[str, SeriesArtifacts], kind: RelationKind
) -> RelationIndex:
    """Pairwise whole-length strengths, per-series descending lists.

    Strength ties break alphabetically so rebuilds are byte-identical.
    """
    names = sorted(series)
    order: dict[str, list[tuple[str, float]]] = {name: [] for name in names}
    if kind == RelationKind.CAUSALITY:
        for cause in names:
            for effect in names:
                if cause == effect:
                    continue
                s = _whole_length_strength(kind, series[cause], series[effect])
                order[cause].append((effect, s))
    else:
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                s = _whole_length_strength(kind, series[a], series[b])
                order[a].append((b, s))
                order[b].append((a, s))
    for name in names:
        order[name].sort(key=lambda it: (-it[1], it[0]))
    return RelationIndex(kind=kind, order={n: tuple(v) for n, v in order.items()})


@dataclass(frozen=True)
class ArtifactStatus:
    state: str  # "pending" | "building" | "ready"
    elapsed: float


class ArtifactSet:
    """Everything a query consumes, plus the relation-index build queue.

    Compressed series and the trend trie are built synchronously by
    :func:`preprocess`. Relation indexes build in-budget synchronously and
    move to a single background worker once the budget is spent; ``require``
    promotes an index to the front of the queue and blocks only on it.
    """

    def __init__(
        self,
        dataset: Dataset,
        labels: MetaLabels,
        params: PreprocessParams,
        series: dict[str, SeriesArtifacts],
        trie: TrendTrie,
        clock: Callable[[], float] = time.monotonic,
        build_delay: Callable[[RelationKind], None] | None = None,
    ):
        self.dataset = dataset
        self.labels = labels
        self.params = params
        self.series = series
        self.trie = trie
        self._clock = clock
        self._build_delay = build_delay
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._queue: list[RelationKind] = []
        self._states: dict[RelationKind, str] = {k: "pending" for k in INDEXED_KINDS}
        self._elapsed: dict[RelationKind, float] = {k: 0.0 for k in INDEXED_KINDS}
        self._started: dict[RelationKind, float] = {}
        self._indexes: dict[RelationKind, RelationIndex] = {}
        self._errors: dict[RelationKind, Exception] = {}
        self._worker: threading.Thread | None = None
        self._cancelled = False
        self.build_order: list[RelationKind] = []  # completion order, for tests
        self.preprocess_elapsed = 0.0

    @property
    def window_symbols(self) -> int:
        return self.params.window_symbols

    def names(self) -> list[str]:
        return sorted(self.series)

    # -- index building ----------------------------------------------------

    def _build_one(self, kind: RelationKind):
        with self._lock:
            if self._cancelled or self._states[kind] != "pending":
                return
            self._states[kind] = "building"
            self._started[kind] = self._clock()
            self._cond.notify_all()
        try:
            if self._build_delay is not None:
                self._build_delay(kind)
            index = build_relation_index(self.series, kind)
        except Exception as exc:  # surfaced via require()
            with self._lock:
                self._errors[kind] = exc
                self._states[kind] = "pending"
                if kind in self._queue:
                    self._queue.remove(kind)
                self._cond.notify_all()
            return
        with self._lock:
            self._indexes[kind] = index
            self._states[kind] = "ready"
            self._elapsed[kind] = self._clock() - self._started[kind]
            self.build_order.append(kind)
            self._cond.notify_all()

    def _worker_loop(self):
        while True:
            with self._lock:
                while self._queue and self._states[self._queue[0]] != "pending":
                    self._queue.pop(0)
                if self._cancelled or not self._queue:
                    return
                kind = self._queue[0]
            self._build_one(kind)

    def enqueue_background(self, kinds: list[RelationKind]):
        with self._lock:
            self._queue.extend(k for k in kinds if k not in self._queue)
            if self._worker is None or not self._worker.is_alive():
                self._worker = threading.Thread(
                    target=self._worker_loop, name="relaq-index-builder", daemon=True
                )
                self._worker.start()

    def build_synchronously(self, kind: RelationKind):
        self._build_one(kind)
        if kind in self._errors:
            raise self._errors[kind]

    def require(self, kind: RelationKind, timeout: float | None = None) -> RelationIndex:
        """Return the index for ``kind``, promoting its build and blocking
        until it is ready.
        """
        if kind not in self._states:
            raise IndexUnavailable(f"no relation index for kind {kind}")
        with self._lock:
            if self._states[kind] == "pending" and kind in self._queue:
                self._queue.remove(kind)
                self._queue.insert(0, kind)
        if self._worker is None or not self._worker.is_alive():
            # No background worker: build inline.
            self._build_one(kind)
        with self._lock:
            self._cond.wait_for(
                lambda: self._states[kind] == "ready"
                or kind in self._errors
                or self._cancelled,
                timeout=timeout,
            )
            if self._states[kind] == "ready":
                return self._indexes[kind]
            if kind in self._errors:
                raise IndexUnavailable(
                    f"building the {kind.value} index failed"
                ) from self._errors[kind]
            raise IndexUnavailable(
                f"the {kind.value} index build was cancelled"
                if self._cancelled
                else f"timed out waiting for the {kind.value} index"
            )

    def peek(self, kind: RelationKind) -> RelationIndex | None:
        with self._lock:
            return self._indexes.get(kind)

    def set_index(self, index: RelationIndex):
        """Install a prebuilt index (artifact loading)."""
        with self._lock:
            self._indexes[index.kind] = index
            self._states[index.kind] = "ready"

    def wait_all(self, timeout: float | None = None):
        for kind in INDEXED_KINDS:
            self.require(kind, timeout=timeout)

    def cancel(self):
        with self._lock:
            self._cancelled = True
            self._queue.clear()
            self._cond.notify_all()

    def status(self) -> dict[str, ArtifactStatus]:
        """Snapshot of every artifact's build state."""
        now = self._clock()
        out = {
            "compression": ArtifactStatus("ready", self.preprocess_elapsed),
            "trend_trie": ArtifactStatus("ready", self.preprocess_elapsed),
        }
        with self._lock:
            for kind in INDEXED_KINDS:
                state = self._states[kind]
                if state == "ready":
                    elapsed = self._elapsed[kind]
                elif state == "building":
                    elapsed = now - self._started[kind]
                else:
                    elapsed = 0.0
                out[kind.value] = ArtifactStatus(state, elapsed)
        return out


def preprocess(
    dataset: Dataset,
    labels: MetaLabels,
    params: PreprocessParams,
    budget_seconds: float = DEFAULT_BUDGET_SECONDS,
    clock: Callable[[], float] = time.monotonic,
    build_delay: Callable[[RelationKind], None] | None = None,
) -> ArtifactSet:
    """Build all derived artifacts for a validated dataset.

    Compression and the trend trie always complete before returning.
    Relation indexes are built inline while the elapsed time stays under
    ``budget_seconds``; the rest continue on a background worker.
    """
    start = clock()
    series = {
        name: build_series_artifacts(name, values, params.sampling_length)
        for name, values in dataset.series.items()
    }
    window = params.window_symbols
    shortest = min(s.compressed_length for s in series.values())
    if shortest < 2:
        raise ValueError("sampling_length leaves fewer than 2 compressed samples")
    if window > shortest:
        raise WindowTooLong(
            f"window of {window} compressed samples exceeds the shortest "
            f"series ({shortest} samples)"
        )
    trie = build_trend_trie({n: s.symbols for n, s in series.items()}, window)

    artifacts = ArtifactSet(
        dataset, labels, params, series, trie, clock=clock, build_delay=build_delay
    )
    remaining = list(INDEXED_KINDS)
    while remaining and clock() - start < budget_seconds:
        artifacts.build_synchronously(remaining.pop(0))
    if remaining:
        artifacts.enqueue_background(remaining)
    artifacts.preprocess_elapsed = clock() - start
    return artifacts
