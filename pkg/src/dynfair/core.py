"""Core domain types: documents, corpora, rankings and position propensities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "Document",
    "Corpus",
    "Ranking",
    "PropensityCurve",
    "InteractionRecord",
    "position_of",
    "propensity_at",
]


@dataclass(frozen=True)
class Document:
    """A rankable item. `polarity` is set for news corpora, `static_gain_column`
    points into the rating matrix for movie corpora."""

    doc_id: int
    group_id: int
    polarity: Optional[float] = None
    static_gain_column: Optional[int] = None


class Corpus:
    """A fixed candidate set with a group label per document.

    Group ids must cover 0..m-1 with every group non-empty; rankings always
    permute the full corpus.
    """

    def __init__(self, group_ids, polarities=None, gain_columns=None):
        self.group_ids = np.asarray(group_ids, dtype=np.int64)
        self.n = int(self.group_ids.shape[0])
        if self.n == 0:
            raise ValueError("corpus must contain at least one document")
        self.m = int(self.group_ids.max()) + 1
        if self.group_ids.min() < 0:
            raise ValueError("negative group id")
        self.group_sizes = np.bincount(self.group_ids, minlength=self.m)
        if (self.group_sizes == 0).any():
            empty = int(np.flatnonzero(self.group_sizes == 0)[0])
            raise ValueError(f"group {empty} has no documents")
        self.polarities = None if polarities is None else np.asarray(polarities, dtype=float)
        if self.polarities is not None and self.polarities.shape != (self.n,):
            raise ValueError("polarities must have one entry per document")
        self.gain_columns = None if gain_columns is None else np.asarray(gain_columns, dtype=np.int64)
        # one-hot group membership, used by vectorised exposure/merit code
        self.group_onehot = np.zeros((self.m, self.n))
        self.group_onehot[self.group_ids, np.arange(self.n)] = 1.0

    def documents(self) -> list[Document]:
        return [
            Document(
                doc_id=d,
                group_id=int(self.group_ids[d]),
                polarity=None if self.polarities is None else float(self.polarities[d]),
                static_gain_column=None if self.gain_columns is None else int(self.gain_columns[d]),
            )
            for d in range(self.n)
        ]

    def group_members(self, group_id: int) -> np.ndarray:
        return np.flatnonzero(self.group_ids == group_id)


@dataclass(frozen=True)
class Ranking:
    """A full permutation of doc ids; index 0 of `order` is rank 1."""

    order: np.ndarray
    timestep: int = 1

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        object.__setattr__(self, "order", order)
        n = order.shape[0]
        if n == 0 or np.bincount(order, minlength=n).max(initial=0) != 1 or order.min() < 0 or order.max() >= n:
            raise ValueError("ranking order is not a permutation of [0, n)")

    @property
    def n(self) -> int:
        return int(self.order.shape[0])

    def positions(self) -> np.ndarray:
        """1-based rank of each doc id (inverse permutation)."""
        pos = np.empty(self.n, dtype=np.int64)
        pos[self.order] = np.arange(1, self.n + 1)
        return pos


class PropensityCurve:
    """Examination probability per rank: p_i = 1 / log2(1 + i), rank i >= 1."""

    kind = "log-discount"

    def __init__(self):
        self._cache: dict[int, np.ndarray] = {}

    def __call__(self, rank: int) -> float:
        return propensity_at(self, rank)

    def values(self, n: int) -> np.ndarray:
        """Propensities for ranks 1..n (cached; treat as read-only)."""
        cached = self._cache.get(n)
        if cached is None:
            cached = 1.0 / np.log2(1.0 + np.arange(1, n + 1))
            cached.setflags(write=False)
            self._cache[n] = cached
        return cached


@dataclass(frozen=True)
class InteractionRecord:
    """One user interaction: the presented ranking with realised relevance,
    clicks and the propensity each document was examined with."""

    timestep: int
    ranking: Ranking
    true_relevance: np.ndarray
    clicks: np.ndarray
    propensities: np.ndarray

    def __post_init__(self):
        n = self.ranking.n
        for name in ("true_relevance", "clicks", "propensities"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != (n,):
                raise ValueError(f"{name} must have length {n}")
            object.__setattr__(self, name, arr)
        if (self.clicks.astype(bool) & ~self.true_relevance.astype(bool)).any():
            raise ValueError("click recorded on a non-relevant document")


def position_of(ranking: Ranking, doc_id: int) -> int:
    """1-based rank of `doc_id` in the ranking."""
    if not 0 <= doc_id < ranking.n:
        raise ValueError(f"unknown doc_id {doc_id}")
    return int(np.flatnonzero(ranking.order == doc_id)[0]) + 1


def propensity_at(curve: PropensityCurve, rank: int) -> float:
    """Examination probability at a 1-based rank."""
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    return 1.0 / float(np.log2(1.0 + rank))
