"""User, relevance and click generation for the news and movie simulations."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Corpus, InteractionRecord, PropensityCurve, Ranking

__all__ = [
    "NewsUserProfile",
    "RatingMatrix",
    "sample_news_user",
    "sample_news_corpus",
    "news_relevance_prob",
    "news_relevance",
    "news_true_relevance",
    "sample_clicks",
    "generate_synthetic_rating_matrix",
    "load_rating_matrix",
    "save_rating_matrix",
    "load_groups",
    "save_groups",
]

OPENNESS_LOW, OPENNESS_HIGH = 0.05, 0.55
FEATURE_DIM = 50


@dataclass(frozen=True)
class NewsUserProfile:
    """A simulated news reader: a political polarity and an openness that
    widens the range of articles they find relevant."""

    polarity: float
    openness: float


@dataclass(frozen=True)
class RatingMatrix:
    """Filled user x item relevance probabilities plus per-user features."""

    values: np.ndarray
    user_features: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.user_features.ndim != 2:
            raise ValueError("values and user_features must be 2-d")
        if self.values.shape[0] != self.user_features.shape[0]:
            raise ValueError("values and user_features disagree on the number of users")
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValueError("rating values must lie in [0, 1]")

    @property
    def num_users(self) -> int:
        return int(self.values.shape[0])

    @property
    def num_docs(self) -> int:
        return int(self.values.shape[1])


def sample_news_user(p_neg: float, rng: np.random.Generator) -> NewsUserProfile:
    """Draw a user: polarity from the two-mode Gaussian mixture clipped to
    [-1, 1], openness uniform on [0.05, 0.55]."""
    if not 0.0 <= p_neg <= 1.0:
        raise ValueError("p_neg must lie in [0, 1]")
    center = -0.5 if rng.random() < p_neg else 0.5
    polarity = float(np.clip(rng.normal(center, 0.2), -1.0, 1.0))
    openness = float(rng.uniform(OPENNESS_LOW, OPENNESS_HIGH))
    return NewsUserProfile(polarity=polarity, openness=openness)


def sample_news_users_batch(p_neg: float, count: int, rng: np.random.Generator):
    """Vectorised draw of `count` users from the same distribution as
    `sample_news_user`; returns (polarities, opennesses) arrays."""
    if not 0.0 <= p_neg <= 1.0:
        raise ValueError("p_neg must lie in [0, 1]")
    centers = np.where(rng.random(count) < p_neg, -0.5, 0.5)
    polarities = np.clip(rng.normal(centers, 0.2), -1.0, 1.0)
    opennesses = rng.uniform(OPENNESS_LOW, OPENNESS_HIGH, count)
    return polarities, opennesses


def sample_news_corpus(n_docs: int, rng: np.random.Generator) -> Corpus:
    """Sample article polarities uniformly on [-1, 1]; negative polarity is
    group 0, non-negative group 1. Resamples the rare all-one-sided draw so
    both groups are populated."""
    polarities = rng.uniform(-1.0, 1.0, n_docs)
    while (polarities < 0.0).all() or (polarities >= 0.0).all():
        polarities = rng.uniform(-1.0, 1.0, n_docs)
    group_ids = (polarities >= 0.0).astype(np.int64)
    return Corpus(group_ids=group_ids, polarities=polarities)


def news_relevance_prob(user: NewsUserProfile, doc_polarities) -> np.ndarray:
    """Bernoulli relevance parameter exp(-(rho_u - rho_d)^2 / (2 o_u^2))."""
    if user.openness == 0.0:
        raise ValueError("openness must be nonzero")
    doc_polarities = np.asarray(doc_polarities, dtype=float)
    return np.exp(-((user.polarity - doc_polarities) ** 2) / (2.0 * user.openness**2))


def news_relevance(user: NewsUserProfile, doc_polarity: float, rng: np.random.Generator) -> int:
    """Realised binary relevance draw for one document."""
    p = float(news_relevance_prob(user, np.array([doc_polarity]))[0])
    return int(rng.random() < p)


def news_true_relevance(corpus: Corpus, p_neg: float, rng: np.random.Generator, num_users: int = 100_000) -> np.ndarray:
    """Expected relevance R(d) per article, Monte-Carlo averaged over the user
    distribution. Used as the evaluation-side ground truth for merits."""
    centers = np.where(rng.random(num_users) < p_neg, -0.5, 0.5)
    pol = np.clip(rng.normal(centers, 0.2), -1.0, 1.0)
    opn = rng.uniform(OPENNESS_LOW, OPENNESS_HIGH, num_users)
    probs = np.exp(-((pol[:, None] - corpus.polarities[None, :]) ** 2) / (2.0 * opn[:, None] ** 2))
    return probs.mean(axis=0)


def sample_clicks(
    ranking: Ranking,
    relevance_realizations,
    curve: PropensityCurve,
    rng: np.random.Generator,
) -> InteractionRecord:
    """Position-biased click draw: each document is examined with the
    propensity of its rank, and clicked iff examined and relevant.

    Examination uniforms are drawn indexed by doc id, so two policies sharing
    a click stream face common random numbers.
    """
    n = ranking.n
    relevance = np.asarray(relevance_realizations)
    if relevance.shape != (n,):
        raise ValueError(f"relevance vector must have length {n}")
    positions = ranking.positions()
    p_by_doc = curve.values(n)[positions - 1]
    examined = rng.random(n) < p_by_doc
    clicks = (examined & relevance.astype(bool)).astype(np.int8)
    return InteractionRecord(
        timestep=ranking.timestep,
        ranking=ranking,
        true_relevance=relevance,
        clicks=clicks,
        propensities=p_by_doc,
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def generate_synthetic_rating_matrix(
    num_users: int,
    n: int,
    rank: int,
    a: float,
    b: float,
    rng: np.random.Generator,
    num_groups: int = 5,
    group_spread: float = 1.0,
) -> RatingMatrix:
    """Low-rank stand-in for a filled rating matrix.

    Latent factor 0 is a popularity axis with group-dependent document
    loadings (contiguous blocks of n/num_groups documents per group), so
    group merits separate the way real catalogs do. The raw product U.V^T is
    rescaled to the 0.5..5 star range and squashed with sigmoid(a*(raw - b)).
    """
    if rank > min(num_users, n):
        raise ValueError("rank must not exceed min(num_users, n)")
    U = rng.normal(size=(num_users, rank))
    V = rng.normal(size=(n, rank))
    U[:, 0] = 1.0 + 0.3 * rng.normal(size=num_users)
    group_ids = synthetic_group_ids(n, num_groups)
    offsets = np.linspace(-group_spread, group_spread, num_groups)
    V[:, 0] = offsets[group_ids] + 0.5 * rng.normal(size=n)
    raw = U @ V.T
    raw = 0.5 + (raw - raw.min()) / (raw.max() - raw.min()) * 4.5
    values = _sigmoid(a * (raw - b))
    features = np.zeros((num_users, FEATURE_DIM))
    d = min(rank, FEATURE_DIM)
    features[:, :d] = U[:, :d]
    return RatingMatrix(values=values, user_features=features)


def synthetic_group_ids(n: int, num_groups: int) -> np.ndarray:
    """Contiguous equal-split group assignment for synthetic movie corpora."""
    if n % num_groups != 0:
        raise ValueError("n must be divisible by num_groups for the equal split")
    return np.repeat(np.arange(num_groups, dtype=np.int64), n // num_groups)


def _read_float_rows(path: Path, low: float | None, high: float | None) -> np.ndarray:
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        for r, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            parsed = []
            for c, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(f"{path}: cannot parse value at ({r},{c}): {cell!r}") from None
                if low is not None and not (low <= v <= high):
                    raise ValueError(f"{path}: value out of [{low},{high}] at ({r},{c}): {v}")
                parsed.append(v)
            if rows and len(parsed) != len(rows[0]):
                raise ValueError(f"{path}: ragged row {r}: expected {len(rows[0])} columns, got {len(parsed)}")
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: empty file")
    return np.asarray(rows)


def load_rating_matrix(values_path, features_path) -> RatingMatrix:
    """Load the ratings CSV (reals in [0,1], no header) and the companion
    per-user feature CSV. Malformed or out-of-range cells raise with the
    offending (row, column)."""
    values = _read_float_rows(Path(values_path), 0.0, 1.0)
    features = _read_float_rows(Path(features_path), None, None)
    if features.shape[0] != values.shape[0]:
        raise ValueError(
            f"feature file has {features.shape[0]} rows but ratings file has {values.shape[0]}"
        )
    return RatingMatrix(values=values, user_features=features)


def save_rating_matrix(matrix: RatingMatrix, values_path, features_path) -> None:
    np.savetxt(values_path, matrix.values, delimiter=",", fmt="%.10g")
    np.savetxt(features_path, matrix.user_features, delimiter=",", fmt="%.10g")


def load_groups(path, n: int) -> np.ndarray:
    """Read the `doc_id,group_id` companion CSV covering every document once."""
    group_ids = np.full(n, -1, dtype=np.int64)
    with open(path, newline="") as fh:
        for r, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: row {r} must be 'doc_id,group_id'")
            try:
                doc, grp = int(row[0]), int(row[1])
            except ValueError:
                raise ValueError(f"{path}: cannot parse row {r}: {row!r}") from None
            if not 0 <= doc < n:
                raise ValueError(f"{path}: doc_id {doc} out of range at row {r}")
            if group_ids[doc] != -1:
                raise ValueError(f"{path}: duplicate doc_id {doc} at row {r}")
            group_ids[doc] = grp
    if (group_ids == -1).any():
        missing = int(np.flatnonzero(group_ids == -1)[0])
        raise ValueError(f"{path}: no group for doc_id {missing}")
    return group_ids


def save_groups(group_ids: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for doc, grp in enumerate(group_ids):
            writer.writerow([doc, int(grp)])
