"""Tabular data handling: feature schema, CSV ingestion, scaling and encoding."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.model_selection import train_test_split

LOGGER = logging.getLogger(__name__)

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
MONOTONE_DIRECTIONS = ("increasing", "decreasing")

RawValue = Union[float, str]
RawInstance = Tuple[RawValue, ...]

# Rectangle and labelling rule of the 2-D toy problem.
SYNTH_X1_RANGE = (-2.0, 4.0)
SYNTH_X2_RANGE = (-2.0, 7.0)


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Feature:
    """One column of the schema."""

    name: str
    kind: str
    levels: Tuple[str, ...] = ()
    mutable: bool = True
    monotone: Optional[str] = None

    @property
    def width(self) -> int:
        return len(self.levels) if self.kind == CATEGORICAL else 1


@dataclass(frozen=True)
class FeatureSchema:
    features: Tuple[Feature, ...]

    def __post_init__(self) -> None:
        seen = set()
        for feature in self.features:
            if feature.name in seen:
                raise DataError(f"Duplicate feature name '{feature.name}'")
            seen.add(feature.name)
            if feature.kind not in (CONTINUOUS, CATEGORICAL):
                raise DataError(f"Feature '{feature.name}' has unknown kind '{feature.kind}'")
            if feature.kind == CATEGORICAL and len(feature.levels) < 2:
                raise DataError(f"Categorical feature '{feature.name}' needs at least two levels")
            if feature.monotone is not None and feature.monotone not in MONOTONE_DIRECTIONS:
                raise DataError(
                    f"Feature '{feature.name}' has unknown monotone direction '{feature.monotone}'"
                )

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(feature.name for feature in self.features)

    @property
    def dimension(self) -> int:
        return sum(feature.width for feature in self.features)

    def blocks(self) -> List[slice]:
        """Encoded coordinate range of every feature, in schema order."""

        result = []
        start = 0
        for feature in self.features:
            result.append(slice(start, start + feature.width))
            start += feature.width
        return result

    def feature_of_coordinate(self, index: int) -> Feature:
        for feature, block in zip(self.features, self.blocks()):
            if block.start <= index < block.stop:
                return feature
        raise IndexError(f"Coordinate {index} outside encoded dimension {self.dimension}")

    def immutable_mask(self) -> np.ndarray:
        mask = np.zeros(self.dimension, dtype=bool)
        for feature, block in zip(self.features, self.blocks()):
            if not feature.mutable:
                mask[block] = True
        return mask


def schema_from_mapping(data: Mapping[str, object]) -> FeatureSchema:
    """Build a schema from ``{name: {"kind": ..., "levels": [...], "mutable": ...}}``."""

    if not isinstance(data, Mapping) or not data:
        raise DataError("Schema must be a non-empty JSON object keyed by feature name")

    features = []
    for name, spec in data.items():
        if not isinstance(spec, Mapping):
            raise DataError(f"Schema entry for '{name}' must be an object")
        kind = spec.get("kind", CONTINUOUS)
        levels = spec.get("levels") or ()
        if not isinstance(levels, (list, tuple)) or not all(isinstance(level, str) for level in levels):
            raise DataError(f"Levels of '{name}' must be a list of strings")
        mutable = spec.get("mutable", True)
        if not isinstance(mutable, bool):
            raise DataError(f"Flag 'mutable' of '{name}' must be a boolean")
        features.append(
            Feature(
                name=str(name),
                kind=str(kind),
                levels=tuple(levels) if kind == CATEGORICAL else (),
                mutable=mutable,
                monotone=spec.get("monotone"),
            )
        )
    return FeatureSchema(features=tuple(features))


def load_schema(path: Path) -> FeatureSchema:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DataError(f"Schema file not found at '{path}'") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"Schema file '{path}' is not valid JSON: {exc}") from exc
    return schema_from_mapping(payload)


def schema_to_mapping(schema: FeatureSchema) -> Dict[str, Dict[str, object]]:
    payload: Dict[str, Dict[str, object]] = {}
    for feature in schema.features:
        entry: Dict[str, object] = {"kind": feature.kind, "mutable": feature.mutable}
        if feature.kind == CATEGORICAL:
            entry["levels"] = list(feature.levels)
        if feature.monotone:
            entry["monotone"] = feature.monotone
        payload[feature.name] = entry
    return payload


@dataclass(frozen=True)
class RawDataset:
    """Unencoded rows as read from CSV (or sampled synthetically)."""

    rows: Tuple[RawInstance, ...]
    y: np.ndarray
    schema: FeatureSchema
    provenance: str

    def __len__(self) -> int:
        return len(self.rows)

    def subset(self, indices: Sequence[int]) -> "RawDataset":
        return RawDataset(
            rows=tuple(self.rows[i] for i in indices),
            y=self.y[np.asarray(indices, dtype=int)],
            schema=self.schema,
            provenance=self.provenance,
        )


@dataclass(frozen=True)
class Dataset:
    """Encoded design matrix ``X`` (N x p) with binary labels."""

    X: np.ndarray
    y: np.ndarray
    schema: FeatureSchema
    provenance: str

    def __len__(self) -> int:
        return int(self.X.shape[0])

    def subset(self, indices: Sequence[int]) -> "Dataset":
        index = np.asarray(indices, dtype=int)
        return Dataset(X=self.X[index], y=self.y[index], schema=self.schema, provenance=self.provenance)


@dataclass(frozen=True)
class Scaler:
    bounds: Mapping[str, Tuple[float, float]]

    def scale(self, name: str, value: float) -> float:
        low, high = self.bounds[name]
        if high == low:
            return 0.0
        return min(1.0, max(0.0, (value - low) / (high - low)))

    def unscale(self, name: str, value: float) -> float:
        low, high = self.bounds[name]
        return low + value * (high - low)


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def _parse_numeric(raw: str, line: int, column: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError) as exc:
        raise DataError(f"Row {line}, column '{column}': cannot parse numeric value '{raw}'") from exc
    if not math.isfinite(value):
        raise DataError(f"Row {line}, column '{column}': non-finite value '{raw}'")
    return value


def load_csv(path: Path, schema: FeatureSchema, label_column: str) -> RawDataset:
    """Read a comma separated file with one header row into a raw dataset."""

    rows: List[RawInstance] = []
    labels: List[int] = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = [name.strip() for name in reader.fieldnames or ()]
        expected = list(schema.names) + [label_column]
        missing = [name for name in expected if name not in header]
        if missing:
            raise DataError(f"Missing column(s) in '{path}': {', '.join(missing)}")
        unexpected = [name for name in header if name not in expected]
        if unexpected:
            raise DataError(f"Unexpected column(s) in '{path}': {', '.join(unexpected)}")
        reader.fieldnames = header

        # line 1 is the header
        for line, row in enumerate(reader, start=2):
            values: List[RawValue] = []
            for feature in schema.features:
                cell = (row.get(feature.name) or "").strip()
                if feature.kind == CONTINUOUS:
                    values.append(_parse_numeric(cell, line, feature.name))
                elif cell in feature.levels:
                    values.append(cell)
                else:
                    raise DataError(
                        f"Row {line}, column '{feature.name}': unknown level '{cell}'"
                    )
            label = (row.get(label_column) or "").strip()
            if label not in ("0", "1"):
                raise DataError(f"Row {line}, column '{label_column}': invalid label '{label}'")
            rows.append(tuple(values))
            labels.append(int(label))

    LOGGER.info("Loaded %d rows from %s", len(rows), path)
    return RawDataset(
        rows=tuple(rows),
        y=np.asarray(labels, dtype=int),
        schema=schema,
        provenance="csv",
    )


def write_csv(dataset: RawDataset, path: Path, label_column: str = "label") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(dataset.schema.names) + [label_column])
        for row, label in zip(dataset.rows, dataset.y):
            writer.writerow([repr(value) if isinstance(value, float) else value for value in row] + [int(label)])


def fit_scaler(train: RawDataset) -> Scaler:
    if len(train) == 0:
        raise DataError("Cannot fit a scaler on an empty training split")

    bounds: Dict[str, Tuple[float, float]] = {}
    for position, feature in enumerate(train.schema.features):
        if feature.kind != CONTINUOUS:
            continue
        column = [float(row[position]) for row in train.rows]
        low, high = min(column), max(column)
        if high == low:
            LOGGER.warning("Feature '%s' is constant on the training split; it encodes to 0", feature.name)
        bounds[feature.name] = (low, high)
    return Scaler(bounds=bounds)


def encode(instance: Sequence[RawValue], schema: FeatureSchema, scaler: Scaler) -> np.ndarray:
    if len(instance) != len(schema.features):
        raise DataError(f"Instance has {len(instance)} values, schema expects {len(schema.features)}")

    vector = np.zeros(schema.dimension, dtype=float)
    for value, feature, block in zip(instance, schema.features, schema.blocks()):
        if feature.kind == CONTINUOUS:
            vector[block.start] = scaler.scale(feature.name, float(value))
        else:
            try:
                level = feature.levels.index(str(value))
            except ValueError as exc:
                raise DataError(f"Unknown level '{value}' for feature '{feature.name}'") from exc
            vector[block.start + level] = 1.0
    return vector


def decode(vector: Sequence[float], schema: FeatureSchema, scaler: Scaler) -> RawInstance:
    """Invert :func:`encode`; categorical blocks take their arg-max level (first on ties)."""

    values = np.asarray(vector, dtype=float)
    if values.shape != (schema.dimension,):
        raise DataError(f"Encoded vector has shape {values.shape}, expected ({schema.dimension},)")

    result: List[RawValue] = []
    for feature, block in zip(schema.features, schema.blocks()):
        if feature.kind == CONTINUOUS:
            result.append(scaler.unscale(feature.name, float(values[block.start])))
        else:
            result.append(feature.levels[int(np.argmax(values[block]))])
    return tuple(result)


def encode_dataset(raw: RawDataset, scaler: Scaler) -> Dataset:
    if len(raw) == 0:
        X = np.zeros((0, raw.schema.dimension))
    else:
        X = np.vstack([encode(row, raw.schema, scaler) for row in raw.rows])
    return Dataset(X=X, y=raw.y.copy(), schema=raw.schema, provenance=raw.provenance)


def split(dataset, config: SplitConfig):
    """Deterministic train/test partition; works for raw and encoded datasets."""

    total = len(dataset)
    if total < 2:
        raise DataError("Need at least two rows to split")

    # round half up, then keep both parts non-empty
    n_train = int(math.floor(config.train_fraction * total + 0.5))
    n_train = min(max(n_train, 1), total - 1)

    train_index, test_index = train_test_split(
        np.arange(total), train_size=n_train, test_size=total - n_train, random_state=config.seed
    )
    train_index, test_index = np.sort(train_index), np.sort(test_index)
    return dataset.subset(train_index), dataset.subset(test_index)


def synth_label(x1: float, x2: float) -> int:
    return int(x2 >= 1.0 + x1 + 2.0 * x1**2 + x1**3 - x1**4)


def synthetic_schema() -> FeatureSchema:
    return FeatureSchema(
        features=(
            Feature(name="x1", kind=CONTINUOUS),
            Feature(name="x2", kind=CONTINUOUS),
        )
    )


def synth_2d(n: int, seed: int) -> RawDataset:
    """Sample ``n`` points uniformly from the rectangle and label them."""

    if n < 1:
        raise DataError("n must be at least 1")

    rng = np.random.default_rng(seed)
    x1 = rng.uniform(*SYNTH_X1_RANGE, size=n)
    x2 = rng.uniform(*SYNTH_X2_RANGE, size=n)
    rows = tuple((float(a), float(b)) for a, b in zip(x1, x2))
    labels = np.asarray([synth_label(a, b) for a, b in rows], dtype=int)
    return RawDataset(rows=rows, y=labels, schema=synthetic_schema(), provenance="synthetic")


def positives(dataset: Dataset, labels: Iterable[int]) -> np.ndarray:
    """Rows of ``dataset`` whose entry in ``labels`` is 1."""

    mask = np.asarray(list(labels), dtype=int) == 1
    return dataset.X[mask]
