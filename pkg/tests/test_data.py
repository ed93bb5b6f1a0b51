"""Tests für Schema, CSV-Import, Skalierung, Kodierung und Split."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest
from sklearn.model_selection import train_test_split

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from diverse_recourse.data import (
    CATEGORICAL,
    CONTINUOUS,
    DataError,
    Feature,
    FeatureSchema,
    RawDataset,
    Scaler,
    SplitConfig,
    decode,
    encode,
    encode_dataset,
    fit_scaler,
    load_csv,
    load_schema,
    positives,
    schema_to_mapping,
    split,
    synth_2d,
    synth_label,
    write_csv,
)


def _schema() -> FeatureSchema:
    return FeatureSchema(
        features=(
            Feature(name="age", kind=CONTINUOUS, mutable=False),
            Feature(name="grade", kind=CATEGORICAL, levels=("A", "B", "C")),
            Feature(name="income", kind=CONTINUOUS),
        )
    )


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_reads_rows(tmp_path: Path) -> None:
    """Drei Zeilen mit passendem Header ergeben N=3."""
    csv_path = _write(
        tmp_path / "data.csv",
        "age,grade,income,label\n30,A,1000,0\n40,B,2000,1\n50,C,1500,1\n",
    )
    raw = load_csv(csv_path, _schema(), "label")
    assert len(raw) == 3
    assert raw.rows[1] == (40.0, "B", 2000.0)
    assert raw.y.tolist() == [0, 1, 1]


def test_load_csv_rejects_invalid_label(tmp_path: Path) -> None:
    csv_path = _write(tmp_path / "data.csv", "age,grade,income,label\n30,A,1000,2\n")
    with pytest.raises(DataError, match="invalid label"):
        load_csv(csv_path, _schema(), "label")


def test_load_csv_names_row_and_column_for_unknown_level(tmp_path: Path) -> None:
    csv_path = _write(tmp_path / "data.csv", "age,grade,income,label\n30,A,1000,0\n31,Z,1000,0\n")
    with pytest.raises(DataError, match=r"Row 3, column 'grade'.*'Z'"):
        load_csv(csv_path, _schema(), "label")


def test_load_csv_unparsable_number(tmp_path: Path) -> None:
    csv_path = _write(tmp_path / "data.csv", "age,grade,income,label\nabc,A,1000,0\n")
    with pytest.raises(DataError, match=r"Row 2, column 'age'"):
        load_csv(csv_path, _schema(), "label")


def test_load_csv_missing_column(tmp_path: Path) -> None:
    csv_path = _write(tmp_path / "data.csv", "age,grade,label\n30,A,0\n")
    with pytest.raises(DataError, match="income"):
        load_csv(csv_path, _schema(), "label")


def test_schema_file_round_trip(tmp_path: Path) -> None:
    path = _write(tmp_path / "schema.json", json.dumps(schema_to_mapping(_schema())))
    assert load_schema(path) == _schema()


def test_schema_rejects_single_level_categorical() -> None:
    with pytest.raises(DataError):
        FeatureSchema(features=(Feature(name="x", kind=CATEGORICAL, levels=("only",)),))


def test_missing_schema_file(tmp_path: Path) -> None:
    with pytest.raises(DataError, match="not found"):
        load_schema(tmp_path / "missing.json")


class TestScaling:
    @staticmethod
    def _raw(values) -> RawDataset:
        schema = FeatureSchema(features=(Feature(name="v", kind=CONTINUOUS),))
        return RawDataset(
            rows=tuple((float(v),) for v in values),
            y=np.zeros(len(values), dtype=int),
            schema=schema,
            provenance="test",
        )

    def test_bounds(self) -> None:
        assert fit_scaler(self._raw([0, 10])).bounds["v"] == (0.0, 10.0)

    def test_constant_feature_encodes_to_zero(self) -> None:
        raw = self._raw([5, 5])
        scaler = fit_scaler(raw)
        assert encode((5.0,), raw.schema, scaler)[0] == 0.0

    def test_midpoint(self) -> None:
        raw = self._raw([-1, 3])
        assert encode((1.0,), raw.schema, fit_scaler(raw))[0] == 0.5

    def test_clamps_out_of_range_values(self) -> None:
        scaler = Scaler(bounds={"v": (0.0, 10.0)})
        assert scaler.scale("v", 5.0) == 0.5
        assert scaler.scale("v", 12.0) == 1.0
        assert scaler.scale("v", -3.0) == 0.0


def test_encode_one_hot_block() -> None:
    scaler = Scaler(bounds={"age": (0.0, 100.0), "income": (0.0, 1000.0)})
    vector = encode((50.0, "B", 250.0), _schema(), scaler)
    assert vector.tolist() == [0.5, 0.0, 1.0, 0.0, 0.25]


def test_decode_argmax_and_ties() -> None:
    schema = FeatureSchema(features=(Feature(name="c", kind=CATEGORICAL, levels=("a", "b", "c")),))
    scaler = Scaler(bounds={})
    assert decode([0.2, 0.5, 0.3], schema, scaler) == ("b",)
    two = FeatureSchema(features=(Feature(name="c", kind=CATEGORICAL, levels=("a", "b")),))
    assert decode([0.5, 0.5], two, scaler) == ("a",)


def test_decode_inverts_encode() -> None:
    scaler = Scaler(bounds={"age": (20.0, 60.0), "income": (0.0, 4000.0)})
    instance = (30.0, "C", 1000.0)
    age, grade, income = decode(encode(instance, _schema(), scaler), _schema(), scaler)
    assert grade == "C"
    assert (age, income) == pytest.approx((30.0, 1000.0))


def test_immutable_mask_covers_blocks() -> None:
    assert _schema().immutable_mask().tolist() == [True, False, False, False, False]


class TestSplit:
    def test_sizes(self) -> None:
        train, test = split(synth_2d(10, seed=1), SplitConfig(train_fraction=0.8, seed=3))
        assert (len(train), len(test)) == (8, 2)

    def test_rounding_half_up(self) -> None:
        train, test = split(synth_2d(3, seed=1), SplitConfig(train_fraction=0.5, seed=0))
        assert (len(train), len(test)) == (2, 1)

    def test_deterministic_partition(self) -> None:
        raw = synth_2d(50, seed=4)
        first = split(raw, SplitConfig(seed=7))
        second = split(raw, SplitConfig(seed=7))
        assert first[0].rows == second[0].rows
        assert first[1].rows == second[1].rows
        assert set(first[0].rows) | set(first[1].rows) == set(raw.rows)
        assert not set(first[0].rows) & set(first[1].rows)

    def test_partition_follows_train_test_split(self) -> None:
        raw = synth_2d(40, seed=2)
        train, test = split(raw, SplitConfig(train_fraction=0.75, seed=11))
        expected_train, expected_test = train_test_split(np.arange(40), train_size=30, test_size=10, random_state=11)
        assert train.rows == tuple(raw.rows[i] for i in sorted(expected_train))
        assert test.rows == tuple(raw.rows[i] for i in sorted(expected_test))

    def test_invalid_fraction(self) -> None:
        with pytest.raises(DataError):
            SplitConfig(train_fraction=1.0)


def test_synthetic_labelling_rule() -> None:
    assert synth_label(0.0, 3.0) == 1
    assert synth_label(2.0, 0.0) == 0
    assert synth_label(0.0, 1.0) == 1


def test_synthetic_data_is_reproducible() -> None:
    first = synth_2d(100, seed=5)
    second = synth_2d(100, seed=5)
    assert first.rows == second.rows
    assert all(-2.0 <= x1 <= 4.0 and -2.0 <= x2 <= 7.0 for x1, x2 in first.rows)
    assert first.y.tolist() == [synth_label(x1, x2) for x1, x2 in first.rows]


def test_synthetic_csv_flows_through_loader(tmp_path: Path) -> None:
    raw = synth_2d(20, seed=2)
    path = tmp_path / "synthetic.csv"
    write_csv(raw, path)
    loaded = load_csv(path, raw.schema, "label")
    assert loaded.rows == raw.rows
    assert loaded.y.tolist() == raw.y.tolist()


def test_positives_picks_favourable_rows() -> None:
    raw = synth_2d(6, seed=0)
    dataset = encode_dataset(raw, fit_scaler(raw))
    labels = [1, 0, 0, 1, 0, 1]
    assert np.array_equal(positives(dataset, labels), dataset.X[[0, 3, 5]])
