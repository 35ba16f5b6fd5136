"""Relevance estimation: running IPS averages, naive click counting, and the
one-hidden-layer cardinal ranker trained with IPS-weighted least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InteractionRecord

__all__ = [
    "IpsEstimator",
    "NaiveCounter",
    "MlpRanker",
    "MlpGradients",
    "ips_update",
    "ips_targets",
    "mlp_forward",
    "ips_loss",
    "skyline_loss",
    "ips_loss_gradient",
    "skyline_loss_gradient",
    "sgd_step",
]


class IpsEstimator:
    """Running inverse-propensity estimate of each document's average
    relevance: mean over steps of click / examination-propensity."""

    def __init__(self, n: int):
        self.weighted_click_sum = np.zeros(n)
        self.step_count = 0

    def update(self, record: InteractionRecord) -> None:
        if (record.propensities <= 0.0).any():
            raise ValueError("propensities must be strictly positive")
        self.weighted_click_sum += record.clicks / record.propensities
        self.step_count += 1

    def estimates(self) -> np.ndarray:
        if self.step_count == 0:
            return np.zeros_like(self.weighted_click_sum)
        return self.weighted_click_sum / self.step_count


class NaiveCounter:
    """Raw observed click counts; the biased baseline estimator."""

    def __init__(self, n: int):
        self.click_sum = np.zeros(n)
        self.step_count = 0

    def update(self, record: InteractionRecord) -> None:
        self.click_sum += record.clicks
        self.step_count += 1

    def estimates(self) -> np.ndarray:
        if self.step_count == 0:
            return np.zeros_like(self.click_sum)
        return self.click_sum / self.step_count


def ips_update(est: IpsEstimator, record: InteractionRecord) -> IpsEstimator:
    est.update(record)
    return est


def ips_targets(record: InteractionRecord) -> np.ndarray:
    """Per-document pseudo-targets c/p used by the IPS training loss."""
    if (record.propensities <= 0.0).any():
        raise ValueError("propensities must be strictly positive")
    return record.clicks / record.propensities


@dataclass
class MlpGradients:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def arrays(self):
        return self.W1, self.b1, self.W2, self.b2


class MlpRanker:
    """features -> hidden ReLU layer -> per-document sigmoid relevance."""

    def __init__(self, W1, b1, W2, b2):
        self.W1 = np.asarray(W1, dtype=float)
        self.b1 = np.asarray(b1, dtype=float)
        self.W2 = np.asarray(W2, dtype=float)
        self.b2 = np.asarray(b2, dtype=float)
        d, h = self.W1.shape
        h2, n = self.W2.shape
        if h != h2 or self.b1.shape != (h,) or self.b2.shape != (n,):
            raise ValueError("inconsistent layer shapes")

    @classmethod
    def initialize(cls, feature_dim: int, hidden: int, n_docs: int, rng: np.random.Generator) -> "MlpRanker":
        """Uniform +-1/sqrt(fan_in) weights, zero biases."""
        lim1 = 1.0 / np.sqrt(feature_dim)
        lim2 = 1.0 / np.sqrt(hidden)
        return cls(
            W1=rng.uniform(-lim1, lim1, (feature_dim, hidden)),
            b1=np.zeros(hidden),
            W2=rng.uniform(-lim2, lim2, (hidden, n_docs)),
            b2=np.zeros(n_docs),
        )

    @property
    def feature_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def n_docs(self) -> int:
        return self.W2.shape[1]

    def forward(self, x) -> np.ndarray:
        out, _ = self.forward_cached(x)
        return out

    def forward_cached(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.feature_dim,):
            raise ValueError(f"expected feature vector of length {self.feature_dim}")
        z1 = x @ self.W1 + self.b1
        h = np.maximum(z1, 0.0)
        out = 1.0 / (1.0 + np.exp(-(h @ self.W2 + self.b2)))
        return out, (x, z1, h)

    def _gradient(self, x, targets) -> MlpGradients:
        out, (x, z1, h) = self.forward_cached(x)
        # d/dz of sum_d (out_d - t_d)^2 through the output sigmoid
        dz2 = 2.0 * (out - targets) * out * (1.0 - out)
        dh = self.W2 @ dz2
        dz1 = dh * (z1 > 0.0)
        return MlpGradients(
            W1=np.outer(x, dz1),
            b1=dz1,
            W2=np.outer(h, dz2),
            b2=dz2,
        )

    def save(self, path) -> None:
        np.savez(path, W1=self.W1, b1=self.b1, W2=self.W2, b2=self.b2)

    @classmethod
    def load(cls, path) -> "MlpRanker":
        data = np.load(path)
        return cls(W1=data["W1"], b1=data["b1"], W2=data["W2"], b2=data["b2"])


def mlp_forward(model: MlpRanker, user_features) -> np.ndarray:
    return model.forward(user_features)


def ips_loss(model: MlpRanker, record: InteractionRecord, user_features) -> float:
    """IPS-weighted least-squares objective sum_d R^2 - 2 (c/p) R for one
    interaction; equals the skyline objective in expectation over clicks."""
    out = model.forward(user_features)
    t = ips_targets(record)
    return float(np.sum(out * out - 2.0 * t * out))


def skyline_loss(model: MlpRanker, true_relevance, user_features) -> float:
    """Least-squares objective against the realised relevance, with the
    target-only constant dropped (sum_d R^2 - 2 r R)."""
    out = model.forward(user_features)
    r = np.asarray(true_relevance, dtype=float)
    return float(np.sum(out * out - 2.0 * r * out))


def ips_loss_gradient(model: MlpRanker, record: InteractionRecord, user_features) -> MlpGradients:
    return model._gradient(user_features, ips_targets(record))


def skyline_loss_gradient(model: MlpRanker, true_relevance, user_features) -> MlpGradients:
    return model._gradient(user_features, np.asarray(true_relevance, dtype=float))


def sgd_step(model: MlpRanker, grad: MlpGradients, learning_rate: float) -> MlpRanker:
    """In-place theta <- theta - lr * gradient; non-finite gradients signal
    training divergence and raise."""
    if learning_rate < 0.0:
        raise ValueError("learning_rate must be >= 0")
    for g in grad.arrays():
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient")
    model.W1 -= learning_rate * grad.W1
    model.b1 -= learning_rate * grad.b1
    model.W2 -= learning_rate * grad.W2
    model.b2 -= learning_rate * grad.b2
    return model
