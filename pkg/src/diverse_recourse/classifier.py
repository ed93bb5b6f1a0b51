"""Feed-forward binary classifier used as the black box C(x)."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .data import Dataset

LOGGER = logging.getLogger(__name__)

DEFAULT_HIDDEN_DIMS: Tuple[int, ...] = (20, 50, 20)
DECISION_THRESHOLD = 0.5
MODEL_FORMAT = "mlp-v1"


class ModelFileError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpModel:
    """ReLU hidden layers, single output logit.

    ``weights[i]`` has shape ``(layer_dims[i + 1], layer_dims[i])``.
    """

    layer_dims: Tuple[int, ...]
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    activation: str = "relu"

    def __post_init__(self) -> None:
        if self.activation != "relu":
            raise ValueError(f"Unsupported hidden activation '{self.activation}'")
        if len(self.layer_dims) < 2 or self.layer_dims[-1] != 1:
            raise ValueError(f"Invalid layer dimensions {self.layer_dims}")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("Number of parameter arrays does not match layer dimensions")
        for i, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[i + 1], self.layer_dims[i])
            if weight.shape != expected:
                raise ValueError(f"weights[{i}] has shape {weight.shape}, expected {expected}")
            if bias.shape != (self.layer_dims[i + 1],):
                raise ValueError(f"biases[{i}] has shape {bias.shape}, expected ({self.layer_dims[i + 1]},)")
            if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias))):
                raise ValueError(f"Layer {i} contains non-finite parameters")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 300
    batch_size: int = 32
    seed: int = 0
    l2_penalty: float = 0.0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be non-negative")


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    auc: Optional[float]


def init_model(layer_dims: Sequence[int], seed: int) -> MlpModel:
    """He-initialised weights, zero biases."""

    dims = tuple(int(dim) for dim in layer_dims)
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(layer_dims=dims, weights=tuple(weights), biases=tuple(biases))


def _check_input(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.input_dim:
        raise ValueError(f"Input has dimension {X.shape[1]}, model expects {model.input_dim}")
    return X


def _forward(model: MlpModel, X: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Return output logits and the per-layer pre-activations."""

    activations = [X]
    out = X
    last = len(model.weights) - 1
    for i, (weight, bias) in enumerate(zip(model.weights, model.biases)):
        z = out @ weight.T + bias
        out = z if i == last else np.maximum(z, 0.0)
        activations.append(out)
    return out[:, 0], activations


def logits(model: MlpModel, X: np.ndarray) -> np.ndarray:
    out, _ = _forward(model, _check_input(model, X))
    return out


def predict_proba(model: MlpModel, x: np.ndarray):
    """Probability of the favourable class; a float for one vector, an array for a matrix."""

    probabilities = expit(logits(model, x))
    if np.asarray(x).ndim == 1:
        return float(probabilities[0])
    return probabilities


def predict_label(model: MlpModel, x: np.ndarray):
    probabilities = predict_proba(model, x)
    if isinstance(probabilities, float):
        return int(probabilities >= DECISION_THRESHOLD)
    return (probabilities >= DECISION_THRESHOLD).astype(int)


def loss_and_gradients(
    model: MlpModel,
    X: np.ndarray,
    y: np.ndarray,
    l2_penalty: float = 0.0,
) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
    """Mean binary cross-entropy (on logits) plus L2 term, and its gradients."""

    X = _check_input(model, X)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    z, activations = _forward(model, X)

    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    loss += 0.5 * l2_penalty * sum(float(np.sum(w * w)) for w in model.weights)

    grad_weights: List[np.ndarray] = [np.empty(0)] * len(model.weights)
    grad_biases: List[np.ndarray] = [np.empty(0)] * len(model.weights)
    delta = ((expit(z) - y) / n)[:, None]
    for i in range(len(model.weights) - 1, -1, -1):
        grad_weights[i] = delta.T @ activations[i] + l2_penalty * model.weights[i]
        grad_biases[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i]) * (activations[i] > 0.0)
    return loss, grad_weights, grad_biases


def train(dataset: Dataset, hidden_dims: Sequence[int], config: TrainConfig) -> MlpModel:
    """Plain mini-batch gradient descent on binary cross-entropy.

    The network is ``(p,) + hidden_dims + (1,)`` with p the encoded dimension.
    """

    if len(dataset) == 0:
        raise ValueError("Cannot train on an empty dataset")
    if not set(np.unique(dataset.y)).issubset({0, 1}):
        raise ValueError("Labels must be binary")

    hidden = tuple(int(width) for width in hidden_dims)
    if any(width < 1 for width in hidden):
        raise ValueError(f"Hidden layer sizes must be positive, got {hidden}")
    dims = (dataset.X.shape[1],) + hidden + (1,)

    model = init_model(dims, config.seed)
    if config.epochs == 0:
        return model

    rng = np.random.default_rng(config.seed + 1)
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    n = len(dataset)

    initial_loss, _, _ = loss_and_gradients(model, dataset.X, dataset.y, config.l2_penalty)
    loss = initial_loss
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            current = replace(model, weights=tuple(weights), biases=tuple(biases))
            _, grad_w, grad_b = loss_and_gradients(
                current, dataset.X[batch], dataset.y[batch], config.l2_penalty
            )
            for i in range(len(weights)):
                weights[i] = weights[i] - config.learning_rate * grad_w[i]
                biases[i] = biases[i] - config.learning_rate * grad_b[i]
            if not all(np.all(np.isfinite(w)) for w in weights):
                raise TrainingError(f"Non-finite parameters during epoch {epoch}")

        model = MlpModel(layer_dims=dims, weights=tuple(weights), biases=tuple(biases))
        loss, _, _ = loss_and_gradients(model, dataset.X, dataset.y, config.l2_penalty)
        if not math.isfinite(loss):
            raise TrainingError(f"Non-finite training loss in epoch {epoch}")

    LOGGER.info("Training loss %.6f -> %.6f after %d epochs", initial_loss, loss, config.epochs)
    return model


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> Optional[float]:
    """Mann-Whitney AUC with mid-ranks (ties count one half); None for one class."""

    labels = np.asarray(labels, dtype=int)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(np.asarray(scores, dtype=float))
    rank_sum = float(np.sum(ranks[labels == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate(model: MlpModel, dataset: Dataset) -> EvalReport:
    if len(dataset) == 0:
        raise ValueError("Cannot evaluate on an empty dataset")
    probabilities = predict_proba(model, dataset.X)
    predicted = (probabilities >= DECISION_THRESHOLD).astype(int)
    accuracy = float(np.mean(predicted == dataset.y))
    return EvalReport(accuracy=accuracy, auc=roc_auc(probabilities, dataset.y))


def save_model(model: MlpModel, path: Path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "activation": model.activation,
        "layer_dims": list(model.layer_dims),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def load_model(path: Path) -> MlpModel:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ModelFileError(f"Model file not found at '{path}'") from exc
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"Model file '{path}' is not valid JSON: {exc}") from exc

    if not isinstance(payload, dict):
        raise ModelFileError("Model file must contain a JSON object")
    for key in ("layer_dims", "weights", "biases"):
        if not isinstance(payload.get(key), list):
            raise ModelFileError(f"Model file field '{key}' is missing or not a list")

    dims = tuple(payload["layer_dims"])
    if not all(isinstance(dim, int) and dim > 0 for dim in dims):
        raise ModelFileError("Field 'layer_dims' must hold positive integers")
    if len(payload["weights"]) != len(dims) - 1 or len(payload["biases"]) != len(dims) - 1:
        raise ModelFileError("Fields 'weights'/'biases' do not match 'layer_dims'")

    weights = []
    biases = []
    for i in range(len(dims) - 1):
        try:
            weight = np.asarray(payload["weights"][i], dtype=float)
            bias = np.asarray(payload["biases"][i], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ModelFileError(f"Field 'weights[{i}]' or 'biases[{i}]' is not a numeric array") from exc
        if weight.shape != (dims[i + 1], dims[i]):
            raise ModelFileError(f"Field 'weights[{i}]' has shape {weight.shape}, expected {(dims[i + 1], dims[i])}")
        if bias.shape != (dims[i + 1],):
            raise ModelFileError(f"Field 'biases[{i}]' has shape {bias.shape}, expected ({dims[i + 1]},)")
        weights.append(weight)
        biases.append(bias)

    try:
        return MlpModel(
            layer_dims=dims,
            weights=tuple(weights),
            biases=tuple(biases),
            activation=str(payload.get("activation", "relu")),
        )
    except ValueError as exc:
        raise ModelFileError(str(exc)) from exc
