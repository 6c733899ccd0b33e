import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaq.datamodel import Dataset, MetaLabels, PreprocessParams
from relaq.errors import WindowTooLong
from relaq.preprocess import (
    build_relation_index,
    build_series_artifacts,
    build_trend_trie,
    minmax_normalize,
    paa_compress,
    preprocess,
    sax_symbolize,
    suggest_next_symbols,
    z_normalize,
)
from relaq.relations import (
    INDEXED_KINDS,
    RelationKind,
    granger_strength,
    pearson_strength,
    similarity_strength,
)
from relaq.storage import StaleArtifacts, load_artifacts, save_artifacts

value_lists = st.lists(
    st.floats(min_value=-1e5, max_value=1e5, allow_nan=False), min_size=1, max_size=50
)


class TestNormalize:
    def test_minmax_linear(self):
        assert list(minmax_normalize([2, 4, 6])) == [0.0, 0.5, 1.0]

    def test_minmax_constant_mid(self):
        assert list(minmax_normalize([5, 5, 5])) == [0.5, 0.5, 0.5]

    def test_minmax_range_hits_bounds(self):
        out = minmax_normalize(np.random.default_rng(0).normal(size=100))
        assert out.min() == 0.0 and out.max() == 1.0

    def test_z_closed_form(self):
        out = z_normalize([1, 2, 3])
        expected = math.sqrt(3.0 / 2.0)  # 1/stdev with stdev = sqrt(2/3)
        assert out[0] == pytest.approx(-expected, abs=1e-4)
        assert out[1] == pytest.approx(0.0, abs=1e-12)
        assert out[2] == pytest.approx(expected, abs=1e-4)
        assert abs(out[0] + 1.2247) < 1e-4

    def test_z_constant(self):
        assert list(z_normalize([7, 7])) == [0.0, 0.0]

    @given(value_lists)
    @settings(max_examples=60, deadline=None)
    def test_z_mean_zero(self, values):
        out = z_normalize(values)
        assert abs(out.mean()) < 1e-9


class TestPaa:
    def test_block_average(self):
        assert list(paa_compress([1, 3, 2, 4], 2)) == [2.0, 3.0]

    def test_identity(self):
        vals = [0.5, 1.5, -2.0]
        assert list(paa_compress(vals, 1)) == vals

    def test_partial_tail(self):
        assert list(paa_compress([1, 2, 3, 4, 5], 2)) == [1.5, 3.5, 5.0]

    def test_constant_stays_constant(self):
        out = paa_compress([3.0] * 10, 4)
        assert all(v == 3.0 for v in out)

    @given(value_lists, st.integers(min_value=1, max_value=8))
    @settings(max_examples=60, deadline=None)
    def test_mean_preserved_when_divisible(self, values, k):
        if len(values) % k != 0:
            values = values[: len(values) - len(values) % k]
        if not values:
            return
        out = paa_compress(values, k)
        assert abs(np.mean(values) - np.mean(out)) < 1e-9


class TestSax:
    def test_one_symbol_per_band(self):
        assert sax_symbolize([-1.0, -0.3, 0.3, 1.0]) == "abcd"

    def test_zeros_map_to_c(self):
        assert sax_symbolize([0.0, 0.0, 0.0]) == "ccc"

    def test_boundaries(self):
        from relaq.preprocess import SAX_BREAKPOINTS

        lo, mid, hi = SAX_BREAKPOINTS
        assert sax_symbolize([lo]) == "b"  # inclusive lower bound of band b
        assert sax_symbolize([mid]) == "c"
        assert sax_symbolize([hi]) == "d"

    def test_monotone(self):
        rng = np.random.default_rng(2)
        values = np.sort(rng.normal(size=200))
        symbols = sax_symbolize(values)
        assert list(symbols) == sorted(symbols)

    def test_equiprobable_on_gaussian(self):
        rng = np.random.default_rng(123)
        symbols = sax_symbolize(rng.standard_normal(1_000_000))
        for letter in "abcd":
            freq = symbols.count(letter) / len(symbols)
            assert abs(freq - 0.25) < 0.02


class TestTrendTrie:
    def test_hand_counted_ratios(self):
        trie = build_trend_trie({"s": "abab"}, 2)
        root = trie.root
        assert root.count == 3  # windows ab, ba, ab
        assert root.children["a"].ratio == pytest.approx(2 / 3)
        assert root.children["b"].ratio == pytest.approx(1 / 3)
        assert trie.lookup("ab") == [("s", 0), ("s", 2)]
        assert trie.lookup("ba") == [("s", 1)]

    def test_window_rule_example(self):
        params = PreprocessParams(sampling_length=4, box_length=8)
        assert params.window_symbols == 2

    def test_suggestions(self):
        trie = build_trend_trie({"s": "abab"}, 2)
        assert suggest_next_symbols(trie, "") == [("a", pytest.approx(2 / 3)), ("b", pytest.approx(1 / 3))]
        assert suggest_next_symbols(trie, "a") == [("b", 1.0)]
        assert suggest_next_symbols(trie, "d") == []

    def test_suggestion_ties_alphabetical(self):
        trie = build_trend_trie({"s1": "ab", "s2": "ba"}, 1)
        assert suggest_next_symbols(trie, "") == [("a", 0.5), ("b", 0.5)]

    def test_window_too_long(self):
        with pytest.raises(WindowTooLong):
            build_trend_trie({"s": "ab"}, 3)

    def test_occurrence_count_oracle(self):
        rng = np.random.default_rng(3)
        seqs = {
            f"s{i}": "".join(rng.choice(list("abcd"), size=rng.integers(10, 40)))
            for i in range(5)
        }
        window = 4
        trie = build_trend_trie(seqs, window)

        def leaf_occurrences(node, depth):
            if depth == window:
                return len(node.occurrences)
            return sum(leaf_occurrences(c, depth + 1) for c in node.children.values())

        expected = sum(len(s) - window + 1 for s in seqs.values())
        assert leaf_occurrences(trie.root, 0) == expected
        # every inserted window is retrievable, exactly once per position
        positions = set()
        for name, seq in seqs.items():
            for start in range(len(seq) - window + 1):
                occ = trie.lookup(seq[start : start + window])
                assert (name, start) in occ
                positions.update((name, s) for s in range(len(seq) - window + 1))
        all_leaf = []

        def collect(node, depth):
            if depth == window:
                all_leaf.extend(node.occurrences)
                return
            for c in node.children.values():
                collect(c, depth + 1)

        collect(trie.root, 0)
        assert len(all_leaf) == expected
        assert set(all_leaf) == positions

    def test_ratios_sum_to_one(self):
        rng = np.random.default_rng(4)
        seqs = {"x": "".join(rng.choice(list("abcd"), size=60))}
        trie = build_trend_trie(seqs, 3)

        def check(node):
            if node.children:
                assert abs(sum(c.ratio for c in node.children.values()) - 1.0) < 1e-9
            for c in node.children.values():
                check(c)

        check(trie.root)


class TestRelationIndex:
    def _series(self, data: dict):
        return {
            name: build_series_artifacts(name, values, 1)
            for name, values in data.items()
        }

    def test_two_series_single_entry(self):
        rng = np.random.default_rng(5)
        series = self._series(
            {"a": rng.normal(size=30), "b": rng.normal(size=30)}
        )
        index = build_relation_index(series, RelationKind.CORRELATION)
        assert len(index.order["a"]) == 1
        assert index.order["a"][0][0] == "b"

    def test_ordering_matches_brute_force(self):
        rng = np.random.default_rng(6)
        data = {f"s{i}": rng.normal(size=40).cumsum() for i in range(5)}
        series = self._series(data)
        for kind, kernel in (
            (RelationKind.CORRELATION, lambda a, b: pearson_strength(
                series[a].compressed_raw, series[b].compressed_raw)),
            (RelationKind.SIMILARITY, lambda a, b: similarity_strength(
                series[a].compressed_minmax, series[b].compressed_minmax)),
            (RelationKind.CAUSALITY, lambda a, b: granger_strength(
                series[a].compressed_raw, series[b].compressed_raw, 4)),
        ):
            index = build_relation_index(series, kind)
            for name in data:
                expected = sorted(
                    ((other, kernel(name, other)) for other in data if other != name),
                    key=lambda t: (-t[1], t[0]),
                )
                assert list(index.order[name]) == expected

    def test_descending_and_permutation(self):
        rng = np.random.default_rng(7)
        data = {f"s{i}": rng.normal(size=25) for i in range(4)}
        index = build_relation_index(self._series(data), RelationKind.SIMILARITY)
        for name, entries in index.order.items():
            strengths = [s for _, s in entries]
            assert strengths == sorted(strengths, reverse=True)
            assert sorted(n for n, _ in entries) == sorted(o for o in data if o != name)

    def test_constructed_first_two(self, three_city):
        index = three_city["artifacts"].require(RelationKind.CORRELATION)
        assert [n for n, _ in index.top("SF", 2)] == ["LA", "SD"]


def _tiny_dataset(n=3, m=60, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(
        timestamps=tuple(float(t) for t in range(m)),
        series={
            f"s{i}": tuple(float(v) for v in rng.normal(size=m).cumsum())
            for i in range(n)
        },
    )


class TestPreprocessOrchestration:
    def test_small_dataset_all_ready(self):
        artifacts = preprocess(
            _tiny_dataset(), MetaLabels(), PreprocessParams(sampling_length=2, box_length=8)
        )
        status = artifacts.status()
        for kind in INDEXED_KINDS:
            assert status[kind.value].state == "ready"

    def test_status_transitions_observed(self):
        # deterministic capture points: after preprocess (queue not yet at
        # causality), inside causality's own build, and after wait_all
        observed = []
        holder = {}

        def build_delay(kind):
            time.sleep(0.05)
            if kind == RelationKind.CAUSALITY and "a" in holder:
                observed.append(holder["a"].status()["causality"].state)

        artifacts = preprocess(
            _tiny_dataset(),
            MetaLabels(),
            PreprocessParams(sampling_length=2, box_length=8),
            budget_seconds=0.0,
            build_delay=build_delay,
        )
        holder["a"] = artifacts
        observed.append(artifacts.status()["causality"].state)
        artifacts.wait_all()
        observed.append(artifacts.status()["causality"].state)
        assert observed == ["pending", "building", "ready"]

    def test_priority_promotion(self):
        artifacts = preprocess(
            _tiny_dataset(),
            MetaLabels(),
            PreprocessParams(sampling_length=2, box_length=8),
            budget_seconds=0.0,
            build_delay=lambda kind: time.sleep(0.05),
        )
        artifacts.require(RelationKind.CAUSALITY)
        artifacts.wait_all()
        order = artifacts.build_order
        assert order.index(RelationKind.CAUSALITY) < order.index(RelationKind.SIMILARITY)

    def test_window_too_long_propagates(self):
        with pytest.raises(WindowTooLong):
            preprocess(
                _tiny_dataset(m=10),
                MetaLabels(),
                PreprocessParams(sampling_length=1, box_length=11),
            )

    def test_deterministic_rebuild(self):
        ds = _tiny_dataset(seed=9)
        params = PreprocessParams(sampling_length=3, box_length=9)
        a1 = preprocess(ds, MetaLabels(), params)
        a2 = preprocess(ds, MetaLabels(), params)
        a1.wait_all()
        a2.wait_all()
        for name in ds.series:
            assert np.array_equal(
                a1.series[name].compressed_minmax, a2.series[name].compressed_minmax
            )
            assert a1.series[name].symbols == a2.series[name].symbols
        for kind in INDEXED_KINDS:
            assert a1.require(kind).order == a2.require(kind).order


class TestStorage:
    def test_round_trip(self, tmp_path):
        ds = _tiny_dataset(seed=11)
        params = PreprocessParams(sampling_length=2, box_length=8)
        artifacts = preprocess(ds, MetaLabels(), params)
        save_artifacts(artifacts, tmp_path / "art")
        loaded = load_artifacts(tmp_path / "art")
        assert loaded.dataset.series == ds.series
        assert loaded.params == params
        for name in ds.series:
            assert np.array_equal(
                loaded.series[name].compressed_raw, artifacts.series[name].compressed_raw
            )
            assert loaded.series[name].symbols == artifacts.series[name].symbols
        for kind in INDEXED_KINDS:
            assert loaded.require(kind).order == artifacts.require(kind).order

    def test_checksum_mismatch_detected(self, tmp_path):
        artifacts = preprocess(
            _tiny_dataset(seed=12),
            MetaLabels(),
            PreprocessParams(sampling_length=2, box_length=8),
        )
        out = save_artifacts(artifacts, tmp_path / "art")
        victim = out / "relation_correlation.json"
        victim.write_text(victim.read_text().replace("0.", "1.", 1))
        with pytest.raises(StaleArtifacts):
            load_artifacts(out)
