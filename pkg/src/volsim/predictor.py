"""Binary classifier predicting whether offloading beats local execution.

Logistic regression trained by full-batch gradient descent on cross-entropy
over standardized features. Labels come from the greedy oracle (1 when it
chooses to offload), so training data is available offline and
deterministic. Weights start at zero, which makes training deterministic
regardless of the seed argument; the seed is accepted for interface
stability with stochastic model families.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from volsim.errors import DegenerateDatasetError
from volsim.strategies import decide_greedy_oracle

N_FEATURES = 6
NO_CANDIDATE_RATE_SENTINEL = -1.0


def features(obs):
    """Six-feature vector: log10 size, intensity, log10 best rate (or -1
    sentinel), best backlog seconds, vehicle speed, candidate count."""
    if obs.candidates:
        best = obs.candidates[0]
        rate_feature = (math.log10(best.rate_bps) if best.rate_bps > 0
                     else NO_CANDIDATE_RATE_SENTINEL)
        backlog_s = best.queued_cycles / best.rsu.cpu_frequency
    else:
        rate_feature = NO_CANDIDATE_RATE_SENTINEL
        backlog_s = 0.0
    return np.array([
        math.log10(obs.task.data_size_bits),
        obs.task.intensity_cycles_per_bit,
        rate_feature,
        backlog_s,
        obs.vehicle.speed,
        float(len(obs.candidates)),
    ])


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    loss_history: list = field(default_factory=list)

    def to_json_dict(self):
        return {
            "weights": [float(v) for v in self.weights],
            "bias": float(self.bias),
            "feature_means": [float(v) for v in self.feature_means],
            "feature_stds": [float(v) for v in self.feature_stds],
            "loss_history": [float(v) for v in self.loss_history],
        }

    @classmethod
    def from_json_dict(cls, data):
        return cls(weights=np.asarray(data["weights"], dtype=float),
                   bias=float(data["bias"]),
                   feature_means=np.asarray(data["feature_means"], dtype=float),
                   feature_stds=np.asarray(data["feature_stds"], dtype=float),
                   loss_history=list(data.get("loss_history", [])))


def label_dataset(observations, weights):
    """One (feature vector, label) row per observation; label 1 when the
    greedy oracle offloads."""
    rows = []
    for obs in observations:
        label = 1 if decide_greedy_oracle(obs, weights).is_offload else 0
        rows.append((features(obs), label))
    return rows


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _cross_entropy(p, y):
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def train_model(dataset, epochs=500, learning_rate=0.1, seed=0):
    """Fit by full-batch gradient descent; loss is recorded per epoch.

    Raises DegenerateDatasetError when only one class is present.
    """
    if not dataset:
        raise DegenerateDatasetError("dataset is empty")
    X = np.stack([row[0] for row in dataset]).astype(float)
    y = np.array([row[1] for row in dataset], dtype=float)
    if len(np.unique(y)) < 2:
        raise DegenerateDatasetError(
            f"dataset contains a single class (label {int(y[0])})")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0.0] = 1.0
    Z = (X - means) / stds
    w = np.zeros(X.shape[1])
    b = 0.0
    losses = []
    n = len(y)
    for _ in range(epochs):
        p = _sigmoid(Z @ w + b)
        losses.append(_cross_entropy(p, y))
        grad = p - y
        w -= learning_rate * (Z.T @ grad) / n
        b -= learning_rate * float(np.sum(grad)) / n
    return LinearModel(weights=w, bias=b, feature_means=means,
                       feature_stds=stds, loss_history=losses)


def predict(model, feature_vector):
    """P(offload beats local) for one raw feature vector."""
    z = (np.asarray(feature_vector, dtype=float) - model.feature_means) / model.feature_stds
    return float(_sigmoid(z @ model.weights + model.bias))


def accuracy(model, dataset, threshold=0.5):
    """Fraction of dataset rows where the thresholded prediction matches."""
    if not dataset:
        return 0.0
    hits = sum(1 for x, y in dataset if (predict(model, x) >= threshold) == bool(y))
    return hits / len(dataset)
