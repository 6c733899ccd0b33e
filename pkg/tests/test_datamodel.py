import csv
import io

import numpy as np
import pytest

from relaq.datamodel import (
    PreprocessParams,
    parse_config,
    parse_dataset,
    serialize_dataset,
    validate,
)
from relaq.errors import (
    DuplicateSeriesRow,
    EmptyDataset,
    MissingNameColumn,
    NonMonotonicTime,
    NonNumericValue,
    NonUniformTimestep,
    RaggedRows,
)


class TestParseDataset:
    def test_minimal_file(self):
        ds = parse_dataset("t,SF,LA\n0,1.0,2.0\n1,1.5,2.5\n2,2.0,3.0\n")
        assert ds.names == ("SF", "LA")
        assert ds.length == 3
        assert ds.series["SF"] == (1.0, 1.5, 2.0)

    def test_backwards_timestamp_names_row(self):
        text = "t,a\n0,1\n1,1\n2,1\n1,1\n"
        with pytest.raises(NonMonotonicTime) as exc:
            parse_dataset(text)
        assert exc.value.row == 5

    def test_eeg_shaped_export(self):
        # 4 electrode columns x 256 samples at a 256 Hz-style grid.
        rng = np.random.default_rng(11)
        rows = ["t,Fp1,Fp2,Fpz,AF7"]
        for i in range(256):
            vals = np.sin(i / 7.0 + np.arange(4)) + rng.normal(0, 0.1, 4)
            rows.append(f"{i}," + ",".join(f"{v:.6f}" for v in vals))
        text = "\n".join(rows) + "\n"
        # independent count via the csv module
        parsed_rows = list(csv.reader(io.StringIO(text)))
        assert len(parsed_rows) - 1 == 256
        assert len(parsed_rows[0]) - 1 == 4
        ds = parse_dataset(text)
        assert len(ds.names) == 4
        assert ds.length == 256

    def test_ragged_row(self):
        with pytest.raises(RaggedRows) as exc:
            parse_dataset("t,a,b\n0,1,2\n1,1\n2,1,2\n")
        assert exc.value.row == 3

    def test_non_numeric_cell(self):
        with pytest.raises(NonNumericValue) as exc:
            parse_dataset("t,a\n0,1\n1,oops\n2,3\n")
        assert exc.value.row == 3

    def test_empty_and_too_short(self):
        with pytest.raises(EmptyDataset):
            parse_dataset("")
        with pytest.raises(EmptyDataset):
            parse_dataset("t,a\n0,1\n")
        with pytest.raises(EmptyDataset):
            parse_dataset("t\n0\n1\n")

    def test_non_uniform_step_rejected(self):
        with pytest.raises(NonUniformTimestep) as exc:
            parse_dataset("t,a\n0,1\n1,1\n3,1\n")
        assert exc.value.row == 4

    def test_iso_timestamps(self):
        ds = parse_dataset(
            "t,a\n2020-01-01T00:00:00,1\n2020-01-01T01:00:00,2\n2020-01-01T02:00:00,3\n"
        )
        assert ds.step == 3600.0

    def test_crlf_accepted(self):
        ds = parse_dataset("t,a\r\n0,1\r\n1,2\r\n")
        assert ds.length == 2

    def test_duplicate_series_name(self):
        with pytest.raises(DuplicateSeriesRow):
            parse_dataset("t,a,a\n0,1,2\n1,1,2\n")

    def test_round_trip(self):
        ds = parse_dataset("t,SF,LA\n0,1.25,2.0\n1,1.5,2.5\n2,2.0,3.125\n")
        again = parse_dataset(serialize_dataset(ds))
        assert again.timestamps == ds.timestamps
        assert again.series == ds.series


class TestParseConfig:
    def test_state_labels(self):
        labels = parse_config("name,State\nSF,CA\nLA,CA\n")
        assert labels.labels == {"SF": {"State": "CA"}, "LA": {"State": "CA"}}
        assert labels.keys == ("State",)

    def test_empty_body(self):
        assert parse_config("").labels == {}
        assert parse_config("name,State\n").labels == {}

    def test_unknown_series_deferred_to_validate(self):
        labels = parse_config("name,State\nXX,CA\n")
        assert "XX" in labels.labels

    def test_missing_name_column(self):
        with pytest.raises(MissingNameColumn):
            parse_config("series,State\nSF,CA\n")

    def test_duplicate_row(self):
        with pytest.raises(DuplicateSeriesRow):
            parse_config("name,State\nSF,CA\nSF,WA\n")

    def test_missing_cell_absent(self):
        labels = parse_config("name,State,Kind\nSF,CA,\n")
        assert labels.labels["SF"] == {"State": "CA"}


class TestValidate:
    def _dataset(self):
        return parse_dataset("t,SF,LA\n0,1,2\n1,2,3\n")

    def test_consistent(self):
        labels = parse_config("name,State\nSF,CA\nLA,CA\n")
        assert validate(self._dataset(), labels) == []

    def test_unknown_series(self):
        labels = parse_config("name,State\nSF,CA\nLA,CA\nSD,CA\n")
        diags = validate(self._dataset(), labels)
        assert [d.code for d in diags] == ["UnknownSeries"]
        assert diags[0].is_error

    def test_unlabeled_series_is_warning(self):
        labels = parse_config("name,State\nSF,CA\n")
        diags = validate(self._dataset(), labels)
        assert [(d.code, d.severity) for d in diags] == [("UnlabeledSeries", "warning")]


class TestPreprocessParams:
    def test_window_rounding(self):
        assert PreprocessParams(sampling_length=4, box_length=8).window_symbols == 2
        assert PreprocessParams(sampling_length=5, box_length=100).window_symbols == 20
        assert PreprocessParams(sampling_length=4, box_length=10).window_symbols == 3
        assert PreprocessParams(sampling_length=4, box_length=9).window_symbols == 2

    def test_invalid(self):
        with pytest.raises(ValueError):
            PreprocessParams(sampling_length=0, box_length=4)
        with pytest.raises(ValueError):
            PreprocessParams(sampling_length=4, box_length=2)
        with pytest.raises(ValueError):
            PreprocessParams(sampling_length=1, box_length=4, alphabet_size=5)
