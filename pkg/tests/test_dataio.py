"""CSV loading/writing, imputation, synthetic data generation."""

from __future__ import annotations

import numpy as np
import pytest

from lomef.core import validate
from lomef.dataio import impute_missing, load_csv, synthetic_series_set, write_csv
from lomef.exceptions import ParseError, ValidationError

VALID = """\
# seasonal_periods=4
# horizon=2
# count_data=false
series_id,index,value
A,1,10.0
A,2,11.0
A,3,12.0
A,4,13.0
A,5,14.0
A,6,15.0
A,7,16.0
A,8,17.0
A,9,18.0
A,10,19.0
B,1,20.0
B,2,21.0
B,3,22.0
B,4,23.0
B,5,24.0
B,6,25.0
B,7,26.0
B,8,27.0
B,9,28.0
B,10,29.0
"""


def write_file(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_valid_file(self, tmp_path):
        data = load_csv(write_file(tmp_path, VALID))
        assert [s.id for s in data.series] == ["A", "B"]
        assert data.seasonal_periods == (4,)
        assert data.horizon == 2
        assert not data.is_count_data
        assert data.name == "data"
        np.testing.assert_array_equal(data.series[0].values,
                                      np.arange(10.0, 20.0))
        np.testing.assert_array_equal(data.series[1].values,
                                      np.arange(20.0, 30.0))

    def test_name_override(self, tmp_path):
        data = load_csv(write_file(tmp_path, VALID), name="custom")
        assert data.name == "custom"

    def test_directives_default(self, tmp_path):
        text = "series_id,index,value\n" + "\n".join(
            f"A,{i},{i}.5" for i in range(1, 9)
        )
        data = load_csv(write_file(tmp_path, text))
        assert data.horizon == 1
        assert data.seasonal_periods == ()
        assert not data.is_count_data

    def test_missing_header(self, tmp_path):
        with pytest.raises(ParseError, match="missing header"):
            load_csv(write_file(tmp_path, "# horizon=2\n"))

    def test_wrong_header(self, tmp_path):
        with pytest.raises(ParseError, match="expected header") as err:
            load_csv(write_file(tmp_path, "id,idx,val\nA,1,2.0\n"))
        assert err.value.line == 1

    def test_no_data_rows(self, tmp_path):
        with pytest.raises(ParseError, match="no data rows"):
            load_csv(write_file(tmp_path, "series_id,index,value\n"))

    def test_wrong_column_count(self, tmp_path):
        text = "series_id,index,value\nA,1\n"
        with pytest.raises(ParseError, match="3 columns") as err:
            load_csv(write_file(tmp_path, text))
        assert err.value.line == 2

    def test_bad_index(self, tmp_path):
        text = "series_id,index,value\nA,one,2.0\n"
        with pytest.raises(ParseError, match="bad index"):
            load_csv(write_file(tmp_path, text))

    def test_bad_value(self, tmp_path):
        text = "series_id,index,value\nA,1,abc\n"
        with pytest.raises(ParseError, match="bad value"):
            load_csv(write_file(tmp_path, text))

    def test_empty_series_id(self, tmp_path):
        text = "series_id,index,value\n,1,2.0\n"
        with pytest.raises(ParseError, match="empty series_id"):
            load_csv(write_file(tmp_path, text))

    def test_index_must_start_at_one(self, tmp_path):
        text = "series_id,index,value\nA,0,2.0\n"
        with pytest.raises(ParseError, match="expected index 1, got 0"):
            load_csv(write_file(tmp_path, text))

    def test_index_gap_detected(self, tmp_path):
        text = "series_id,index,value\nA,1,2.0\nA,3,4.0\n"
        with pytest.raises(ParseError, match="expected index 2, got 3") as err:
            load_csv(write_file(tmp_path, text))
        assert err.value.line == 3

    def test_interleaved_series_rejected(self, tmp_path):
        text = "series_id,index,value\nA,1,2.0\nB,1,3.0\nA,2,4.0\n"
        with pytest.raises(ParseError, match="not contiguous"):
            load_csv(write_file(tmp_path, text))

    def test_directive_after_header(self, tmp_path):
        text = "series_id,index,value\n# horizon=2\nA,1,2.0\n"
        with pytest.raises(ParseError, match="directive after header"):
            load_csv(write_file(tmp_path, text))

    def test_duplicate_directive(self, tmp_path):
        text = "# horizon=2\n# horizon=3\nseries_id,index,value\nA,1,2.0\n"
        with pytest.raises(ParseError, match="duplicate directive"):
            load_csv(write_file(tmp_path, text))

    def test_unknown_directive(self, tmp_path):
        text = "# frequency=12\nseries_id,index,value\nA,1,2.0\n"
        with pytest.raises(ParseError, match="unknown directive") as err:
            load_csv(write_file(tmp_path, text))
        assert err.value.line == 1

    def test_malformed_directive(self, tmp_path):
        text = "# horizon\nseries_id,index,value\nA,1,2.0\n"
        with pytest.raises(ParseError, match="malformed directive"):
            load_csv(write_file(tmp_path, text))

    def test_bad_directive_values(self, tmp_path):
        for directive, pattern in (
            ("# seasonal_periods=a,b", "bad seasonal_periods"),
            ("# horizon=soon", "bad horizon"),
            ("# count_data=maybe", "bad count_data"),
        ):
            text = f"{directive}\nseries_id,index,value\n" + "\n".join(
                f"A,{i},{i}.0" for i in range(1, 9)
            )
            with pytest.raises(ParseError, match=pattern):
                load_csv(write_file(tmp_path, text))

    def test_blank_lines_keep_line_numbers(self, tmp_path):
        text = "series_id,index,value\n\nA,1,2.0\nA,zzz,3.0\n"
        with pytest.raises(ParseError) as err:
            load_csv(write_file(tmp_path, text))
        assert err.value.line == 4

    def test_missing_values_fail_validation(self, tmp_path):
        text = "# horizon=2\nseries_id,index,value\n" + "\n".join(
            f"A,{i},{i}.0" if i != 4 else "A,4,NA" for i in range(1, 11)
        )
        with pytest.raises(ValidationError):
            load_csv(write_file(tmp_path, text))

    def test_impute_fills_missing_values(self, tmp_path):
        text = "# horizon=2\nseries_id,index,value\n" + "\n".join(
            f"A,{i},{i}.0" if i != 4 else "A,4,NA" for i in range(1, 11)
        )
        data = load_csv(write_file(tmp_path, text), impute=True)
        np.testing.assert_allclose(data.series[0].values,
                                   np.arange(1.0, 11.0), atol=1e-12)

    def test_contract_violations_reported(self, tmp_path):
        # a seasonal series too short for two full cycles
        text = "# seasonal_periods=12\n# horizon=2\nseries_id,index,value\n" \
            + "\n".join(f"A,{i},{i}.0" for i in range(1, 11))
        with pytest.raises(ValidationError) as err:
            load_csv(write_file(tmp_path, text))
        assert any("two full cycles" in v for v in err.value.violations)


class TestWriteCsv:
    def test_roundtrip_values_exact(self, tmp_path):
        original = synthetic_series_set(n_series=3, length=40, horizon=4)
        path = tmp_path / "out.csv"
        write_csv(original, path)
        loaded = load_csv(path)
        assert [s.id for s in loaded.series] == [s.id for s in original.series]
        assert loaded.horizon == original.horizon
        assert loaded.seasonal_periods == original.seasonal_periods
        for a, b in zip(loaded.series, original.series):
            np.testing.assert_array_equal(a.values, b.values)

    def test_rewrite_is_byte_identical(self, tmp_path):
        original = synthetic_series_set(n_series=2, length=30, horizon=3)
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_csv(original, first)
        write_csv(load_csv(first), second)
        assert first.read_bytes() == second.read_bytes()


class TestImputeMissing:
    def test_interior_gap_interpolates(self):
        out = impute_missing(np.array([1.0, np.nan, 3.0]))
        np.testing.assert_allclose(out, [1.0, 2.0, 3.0])

    def test_edge_gaps_copy_nearest(self):
        out = impute_missing(np.array([np.nan, 2.0, 4.0, np.nan]))
        np.testing.assert_allclose(out, [2.0, 2.0, 4.0, 4.0])

    def test_complete_series_returns_copy(self):
        values = np.array([1.0, 2.0])
        out = impute_missing(values)
        np.testing.assert_array_equal(out, values)
        assert out is not values

    def test_all_missing_rejected(self):
        with pytest.raises(ValidationError):
            impute_missing(np.array([np.nan, np.nan]))


class TestSyntheticSeriesSet:
    def test_shape_and_metadata(self):
        data = synthetic_series_set(n_series=5, length=60, horizon=6,
                                    seasonal_periods=(12,), seed=1)
        assert len(data.series) == 5
        assert [s.id for s in data.series][:2] == ["S001", "S002"]
        assert all(len(s) == 60 for s in data.series)
        assert data.horizon == 6
        assert data.seasonal_periods == (12,)
        assert not data.is_count_data

    def test_passes_validation(self):
        assert validate(synthetic_series_set(n_series=4, seed=2)) == []

    def test_strictly_positive(self):
        data = synthetic_series_set(n_series=20, seed=3)
        assert all(s.values.min() > 0 for s in data.series)

    def test_deterministic_per_seed(self):
        a = synthetic_series_set(n_series=3, seed=7)
        b = synthetic_series_set(n_series=3, seed=7)
        for sa, sb in zip(a.series, b.series):
            np.testing.assert_array_equal(sa.values, sb.values)
        c = synthetic_series_set(n_series=3, seed=8)
        assert not np.array_equal(a.series[0].values, c.series[0].values)

    def test_nonseasonal_variant(self):
        data = synthetic_series_set(n_series=2, seasonal_periods=(), seed=0)
        assert data.seasonal_periods == ()

    def test_seasonal_pattern_is_shared(self):
        # the multiplicative seasonal swing should show up at the same
        # phase in every series: correlate seasonal averages across series
        data = synthetic_series_set(n_series=8, length=120, seed=5)
        profiles = []
        for s in data.series:
            detrended = s.values / s.values.mean()
            profiles.append(detrended.reshape(-1, 12).mean(axis=0))
        profiles = np.asarray(profiles)
        base = profiles[0] - profiles[0].mean()
        for other in profiles[1:]:
            corr = np.corrcoef(base, other - other.mean())[0, 1]
            assert corr > 0.8

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            synthetic_series_set(n_series=0)
        with pytest.raises(ValueError):
            synthetic_series_set(length=10, horizon=10)
