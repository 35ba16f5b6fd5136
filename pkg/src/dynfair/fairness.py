"""Merit-based top-k exposure fairness and NDCG ranking quality."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import Corpus, PropensityCurve, Ranking

__all__ = [
    "ExposureLedger",
    "MeritTable",
    "estimated_merits",
    "prefix_exposure",
    "ledger_update",
    "unfairness_at_k",
    "exposure_per_merit",
    "mean_pairwise_disparity",
    "ndcg_at_k",
    "ndcg_at_ks",
    "default_tracked_ks",
]

MERIT_FLOOR = 1e-6


@dataclass(frozen=True)
class MeritTable:
    """Per-group mean relevance; `true` for evaluation, `estimated` when
    recomputed from the running IPS estimate."""

    merit: np.ndarray
    source: Literal["true", "estimated"] = "true"


def estimated_merits(estimates: np.ndarray, corpus: Corpus) -> MeritTable:
    merit = (corpus.group_onehot @ estimates) / corpus.group_sizes
    return MeritTable(merit=merit, source="estimated")


def default_tracked_ks(n: int) -> tuple[int, ...]:
    """Prefixes tracked by default: 1..10, 20, 50 and the full list, capped
    at the corpus size."""
    ks = sorted({k for k in [*range(1, 11), 20, 50, n] if 1 <= k <= n})
    return tuple(ks)


class ExposureLedger:
    """Cumulative per-group exposure at each tracked prefix.

    Entry (i, j) of `cum_exposure` is the running sum over presented rankings
    of the group-i mean propensity captured inside prefix tracked_ks[j].
    """

    def __init__(self, corpus: Corpus, tracked_ks, curve: PropensityCurve | None = None):
        self.corpus = corpus
        self.tracked_ks = tuple(sorted(set(int(k) for k in tracked_ks)))
        if not self.tracked_ks:
            raise ValueError("tracked_ks must be non-empty")
        if self.tracked_ks[0] < 1 or self.tracked_ks[-1] > corpus.n:
            raise ValueError(f"tracked_ks must lie within [1, {corpus.n}]")
        self._k_index = {k: j for j, k in enumerate(self.tracked_ks)}
        self.cum_exposure = np.zeros((corpus.m, len(self.tracked_ks)))
        self.step_count = 0
        self._curve = curve or PropensityCurve()
        self._discounts = self._curve.values(corpus.n)
        self._ks_array = np.asarray(self.tracked_ks, dtype=np.int64)
        self._full_only = self.tracked_ks == (corpus.n,)

    def update(self, ranking: Ranking) -> None:
        """Add the ranking's per-prefix group exposure and advance the clock."""
        if self._full_only:
            # full-list exposure needs no prefix cumsum, only a weighted count
            totals = np.bincount(
                self.corpus.group_ids[ranking.order], weights=self._discounts, minlength=self.corpus.m
            )
            self.cum_exposure[:, 0] += totals / self.corpus.group_sizes
        else:
            weighted = self._discounts * self.corpus.group_onehot[:, ranking.order]
            prefix_totals = np.cumsum(weighted, axis=1)[:, self._ks_array - 1]
            self.cum_exposure += prefix_totals / self.corpus.group_sizes[:, None]
        self.step_count += 1

    def column(self, k: int) -> np.ndarray:
        try:
            return self.cum_exposure[:, self._k_index[k]]
        except KeyError:
            raise KeyError(f"prefix {k} is not tracked (tracked: {self.tracked_ks})") from None


def prefix_exposure(ranking: Ranking, curve: PropensityCurve, corpus: Corpus, group: int, k: int) -> float:
    """Group-mean propensity mass inside the top-k of one ranking."""
    if not 1 <= k <= ranking.n:
        raise ValueError(f"k must lie in [1, {ranking.n}]")
    top = ranking.order[:k]
    in_group = corpus.group_ids[top] == group
    discounts = curve.values(ranking.n)[:k]
    return float(discounts[in_group].sum() / corpus.group_sizes[group])


def ledger_update(ledger: ExposureLedger, ranking: Ranking) -> ExposureLedger:
    ledger.update(ranking)
    return ledger


def exposure_per_merit(ledger: ExposureLedger, merits: MeritTable, k: int) -> np.ndarray:
    """Time-averaged cumulative top-k exposure over merit, per group."""
    if ledger.step_count < 1:
        raise ValueError("ledger has no recorded steps")
    if (merits.merit <= 0.0).any():
        raise ValueError("merits must be strictly positive")
    return (ledger.column(k) / ledger.step_count) / merits.merit


def mean_pairwise_disparity(exp_mer: np.ndarray) -> float:
    """Average absolute difference over all group pairs."""
    m = exp_mer.shape[0]
    if m < 2:
        return 0.0
    diffs = np.abs(exp_mer[:, None] - exp_mer[None, :])
    return float(diffs.sum() / (m * (m - 1)))


def unfairness_at_k(ledger: ExposureLedger, merits: MeritTable, k: int) -> float:
    """Mean pairwise disparity of exposure-per-merit at prefix k."""
    return mean_pairwise_disparity(exposure_per_merit(ledger, merits, k))


def ndcg_at_ks(order: np.ndarray, gains: np.ndarray, ks, discounts: np.ndarray | None = None) -> np.ndarray:
    """NDCG at several prefixes of one ranking, sharing the cumulative sums.

    All-zero gains make every ranking ideal; returns 1.0 by convention.
    """
    gains = np.asarray(gains, dtype=float)
    n = gains.shape[0]
    if discounts is None:
        discounts = PropensityCurve().values(n)
    ks = np.asarray(ks, dtype=np.int64)
    if (gains < 0).any():
        raise ValueError("gains must be non-negative")
    dcg = np.cumsum(gains[order] * discounts)[ks - 1]
    ideal = np.sort(gains)[::-1]
    idcg = np.cumsum(ideal * discounts)[ks - 1]
    out = np.ones(len(ks))
    nz = idcg > 0.0
    out[nz] = dcg[nz] / idcg[nz]
    return out


def ndcg_at_k(ranking: Ranking, gains, k: int) -> float:
    if not 1 <= k <= ranking.n:
        raise ValueError(f"k must lie in [1, {ranking.n}]")
    return float(ndcg_at_ks(ranking.order, gains, [k])[0])
