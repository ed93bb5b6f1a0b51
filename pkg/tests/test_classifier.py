"""Tests für MLP-Inferenz, Training, AUC und Modelldateien."""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from diverse_recourse.classifier import (
    MlpModel,
    ModelFileError,
    TrainConfig,
    evaluate,
    init_model,
    load_model,
    loss_and_gradients,
    predict_label,
    predict_proba,
    roc_auc,
    save_model,
    train,
)
from diverse_recourse.data import CONTINUOUS, Dataset, Feature, FeatureSchema, encode_dataset, fit_scaler, synth_2d


def _linear_model(weight, bias: float) -> MlpModel:
    weight = np.asarray(weight, dtype=float)[None, :]
    return MlpModel(layer_dims=(weight.shape[1], 1), weights=(weight,), biases=(np.array([bias]),))


def test_zero_model_predicts_one_half() -> None:
    model = MlpModel(
        layer_dims=(3, 4, 1),
        weights=(np.zeros((4, 3)), np.zeros((1, 4))),
        biases=(np.zeros(4), np.zeros(1)),
    )
    assert predict_proba(model, np.ones(3)) == 0.5


def test_single_layer_closed_form() -> None:
    model = _linear_model([1.0, 0.0, 0.0], -0.5)
    assert predict_proba(model, np.array([1.0, 0.0, 0.0])) == pytest.approx(1.0 / (1.0 + math.exp(-0.5)))


def test_threshold_is_inclusive() -> None:
    # logit 0 -> probability exactly 0.5
    assert predict_label(_linear_model([0.0], 0.0), np.array([0.0])) == 1
    assert predict_label(_linear_model([0.0], math.log(0.49 / 0.51)), np.array([0.0])) == 0
    assert predict_label(_linear_model([0.0], math.log(0.51 / 0.49)), np.array([0.0])) == 1


def test_predict_on_matrix_returns_array() -> None:
    model = _linear_model([1.0, -1.0], 0.0)
    labels = predict_label(model, np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert labels.tolist() == [1, 0]


def test_rejects_mismatched_shapes() -> None:
    with pytest.raises(ValueError):
        MlpModel(layer_dims=(2, 1), weights=(np.zeros((1, 3)),), biases=(np.zeros(1),))


@pytest.mark.parametrize("seed", range(20))
def test_gradients_match_finite_differences(seed: int) -> None:
    rng = np.random.default_rng(seed)
    dims = (int(rng.integers(2, 5)), int(rng.integers(2, 6)), int(rng.integers(2, 5)), 1)
    model = init_model(dims, seed)
    X = rng.normal(size=(7, dims[0]))
    y = rng.integers(0, 2, size=7)
    l2 = 0.01
    _, grad_w, grad_b = loss_and_gradients(model, X, y, l2)

    h = 1e-6
    for layer in range(len(model.weights)):
        for params, analytic in ((model.weights, grad_w), (model.biases, grad_b)):
            numeric = np.zeros_like(params[layer])
            for index in np.ndindex(params[layer].shape):
                original = params[layer][index]
                params[layer][index] = original + h
                plus, _, _ = loss_and_gradients(model, X, y, l2)
                params[layer][index] = original - h
                minus, _, _ = loss_and_gradients(model, X, y, l2)
                params[layer][index] = original
                numeric[index] = (plus - minus) / (2 * h)
            scale = max(np.linalg.norm(numeric), np.linalg.norm(analytic[layer]), 1e-8)
            assert np.linalg.norm(numeric - analytic[layer]) <= 1e-4 * scale + 1e-7


class TestTraining:
    @staticmethod
    def _dataset(n: int, seed: int):
        raw = synth_2d(n, seed)
        return encode_dataset(raw, fit_scaler(raw))

    def test_zero_epochs_returns_initial_model(self) -> None:
        dataset = self._dataset(40, 0)
        model = train(dataset, (8,), TrainConfig(epochs=0, seed=3))
        initial = init_model((2, 8, 1), 3)
        for trained, expected in zip(model.weights, initial.weights):
            assert np.array_equal(trained, expected)

    def test_same_seed_gives_identical_parameters(self) -> None:
        dataset = self._dataset(80, 1)
        config = TrainConfig(epochs=5, seed=11)
        first = train(dataset, (6, 6), config)
        second = train(dataset, (6, 6), config)
        for a, b in zip(first.weights + first.biases, second.weights + second.biases):
            assert np.array_equal(a, b)

    def test_hidden_sizes_never_absorb_the_input_layer(self) -> None:
        """Stimmt die erste verdeckte Breite mit p überein, bleibt sie trotzdem eine eigene Schicht."""
        rng = np.random.default_rng(2)
        schema = FeatureSchema(features=tuple(Feature(name=f"x{i}", kind=CONTINUOUS) for i in range(20)))
        dataset = Dataset(X=rng.uniform(size=(50, 20)), y=rng.integers(0, 2, size=50), schema=schema, provenance="test")
        model = train(dataset, (20, 50, 20), TrainConfig(epochs=1, seed=0))
        assert model.layer_dims == (20, 20, 50, 20, 1)
        assert train(dataset, (4, 1), TrainConfig(epochs=0)).layer_dims == (20, 4, 1, 1)
        with pytest.raises(ValueError):
            train(dataset, (0,), TrainConfig(epochs=0))

    def test_learns_synthetic_boundary(self) -> None:
        dataset = self._dataset(500, 0)
        model = train(dataset, (20, 50, 20), TrainConfig(epochs=300, seed=0))
        assert evaluate(model, dataset).accuracy >= 0.95


class TestAuc:
    def test_perfect_order(self) -> None:
        assert roc_auc(np.array([0.1, 0.2, 0.8, 0.9]), np.array([0, 0, 1, 1])) == 1.0

    def test_all_ties(self) -> None:
        assert roc_auc(np.full(4, 0.3), np.array([0, 1, 0, 1])) == 0.5

    def test_mixed_scores(self) -> None:
        scores = np.array([0.9, 0.4, 0.6, 0.1])
        labels = np.array([1, 1, 0, 0])
        assert roc_auc(scores, labels) == pytest.approx(0.75)

    def test_single_class_is_undefined(self) -> None:
        assert roc_auc(np.array([0.2, 0.7]), np.array([1, 1])) is None


def test_model_file_round_trip(tmp_path: Path) -> None:
    model = init_model((3, 5, 4, 1), seed=9)
    path = tmp_path / "model.json"
    save_model(model, path)
    restored = load_model(path)
    X = np.random.default_rng(0).normal(size=(100, 3))
    assert np.array_equal(predict_proba(model, X), predict_proba(restored, X))


def test_model_file_bytes_are_reproducible(tmp_path: Path) -> None:
    save_model(init_model((2, 3, 1), seed=1), tmp_path / "a.json")
    save_model(init_model((2, 3, 1), seed=1), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_model_file_with_mismatched_dims(tmp_path: Path) -> None:
    path = tmp_path / "model.json"
    save_model(init_model((3, 4, 1), seed=0), path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["layer_dims"] = [3, 5, 1]
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(ModelFileError, match="weights\\[0\\]"):
        load_model(path)


def test_missing_model_file(tmp_path: Path) -> None:
    with pytest.raises(ModelFileError, match="not found"):
        load_model(tmp_path / "nope.json")
