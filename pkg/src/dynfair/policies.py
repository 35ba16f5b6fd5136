"""Ranking policies: naive click-count ranking, score sorting, the FairCo
proportional controller, and maximal-marginal-fairness selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Corpus, PropensityCurve, Ranking
from .fairness import MERIT_FLOOR, ExposureLedger, MeritTable

__all__ = [
    "MmfConfig",
    "FaircoConfig",
    "GroupPriorityQueues",
    "MmfController",
    "MmfPolicy",
    "FaircoPolicy",
    "rank_naive",
    "rank_by_scores",
    "rank_fairco",
]


@dataclass(frozen=True)
class MmfConfig:
    """lam: probability a position is filled by the fairness branch;
    k: prefix whose exposure the controller tracks and equalises."""

    lam: float = 0.6
    k: int = 10
    use_ltr_model: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class FaircoConfig:
    gain: float = 0.01

    def __post_init__(self):
        if self.gain <= 0.0:
            raise ValueError("gain must be > 0")


def _order_by_scores(scores: np.ndarray) -> np.ndarray:
    """Stable sort: score descending, doc id ascending on ties."""
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    return np.argsort(-scores, kind="stable")


def rank_by_scores(scores, timestep: int = 1) -> Ranking:
    return Ranking(order=_order_by_scores(np.asarray(scores, dtype=float)), timestep=timestep)


def rank_naive(counter, timestep: int = 1) -> Ranking:
    """Sort by accumulated observed clicks."""
    return rank_by_scores(counter.click_sum, timestep=timestep)


class FaircoPolicy:
    """Proportional controller: boosts every document of an under-exposed
    group by gain * tau * (max_j ExpMer_j - ExpMer_group), measured on the
    full-list exposure ledger."""

    def __init__(self, corpus: Corpus, cfg: FaircoConfig, curve: PropensityCurve | None = None):
        self.corpus = corpus
        self.cfg = cfg
        self.ledger = ExposureLedger(corpus, tracked_ks=(corpus.n,), curve=curve)

    def perturbed_scores(self, scores: np.ndarray, merits: MeritTable) -> np.ndarray:
        tau = self.ledger.step_count
        if tau == 0:
            return scores
        cum = self.ledger.column(self.corpus.n).tolist()
        merit = merits.merit.tolist()
        # merit below the floor reads as fully under-exposed (cold start)
        exp_mer = [
            0.0 if merit[g] < MERIT_FLOOR else (cum[g] / tau) / merit[g]
            for g in range(self.corpus.m)
        ]
        top = max(exp_mer)
        err = np.array([top - v for v in exp_mer])
        return scores + (self.cfg.gain * tau) * np.take(err, self.corpus.group_ids)

    def rank(self, scores, merits: MeritTable, timestep: int = 1) -> Ranking:
        return rank_by_scores(self.perturbed_scores(np.asarray(scores, dtype=float), merits), timestep)

    def observe(self, ranking: Ranking) -> None:
        self.ledger.update(ranking)


def rank_fairco(scores, policy: FaircoPolicy, merits: MeritTable, timestep: int = 1) -> Ranking:
    return policy.rank(scores, merits, timestep)


class GroupPriorityQueues:
    """Per-group queues over one step's estimates, popped best-first.

    Built from a single stable global sort (estimate descending, doc id
    ascending), so popping a group yields its current best and popping
    globally replays the pure-relevance ranking. Capping queues at k and
    refilling on exhaustion would behave identically; the full sorted view
    keeps that contract without the refill bookkeeping.
    """

    def __init__(self, estimates: np.ndarray, group_ids: np.ndarray, m: int):
        base = _order_by_scores(estimates)
        self.base = base.tolist()
        self.group_lists: list[list[int]] = [[] for _ in range(m)]
        gids = group_ids.tolist()
        for d in self.base:
            self.group_lists[gids[d]].append(d)
        self.remaining = [len(lst) for lst in self.group_lists]
        self.group_of = gids
        self._placed = bytearray(len(self.base))
        self._gptr = [0] * m
        self._global_ptr = 0

    def pop_global(self) -> int:
        """Best remaining document across all groups."""
        base, placed = self.base, self._placed
        i = self._global_ptr
        while placed[base[i]]:
            i += 1
        d = base[i]
        self._global_ptr = i + 1
        placed[d] = 1
        self.remaining[self.group_of[d]] -= 1
        return d

    def pop_group(self, g: int) -> int:
        """Best remaining document of group g."""
        if self.remaining[g] == 0:
            raise RuntimeError(f"group {g} has no remaining documents")
        lst, placed = self.group_lists[g], self._placed
        i = self._gptr[g]
        while placed[lst[i]]:
            i += 1
        d = lst[i]
        self._gptr[g] = i + 1
        placed[d] = 1
        self.remaining[g] -= 1
        return d


class MmfController:
    """Tracks cumulative per-group exposure at every prefix 1..k and selects
    the group whose estimated exposure-per-merit at the current prefix is
    lowest, counting documents already placed earlier in the same step."""

    def __init__(self, corpus: Corpus, k: int, curve: PropensityCurve | None = None):
        self.corpus = corpus
        self.k = min(int(k), corpus.n)
        curve = curve or PropensityCurve()
        discounts = curve.values(corpus.n)
        # contribution of a placement at position p (0-based) to group g's mean exposure
        self._contrib = [
            [float(discounts[p] / corpus.group_sizes[g]) for p in range(self.k)]
            for g in range(corpus.m)
        ]
        self._hist = [[0.0] * self.k for _ in range(corpus.m)]
        self._scratch: list[list[float]] | None = None
        self._inv_merit: list[float] = [0.0] * corpus.m
        self.step_count = 0

    @property
    def cum_exposure(self) -> np.ndarray:
        """Committed per-group, per-prefix cumulative exposure (m x k)."""
        return np.asarray(self._hist)

    def load_state(self, cum_exposure: np.ndarray, step_count: int) -> None:
        cum = np.asarray(cum_exposure, dtype=float)
        if cum.shape != (self.corpus.m, self.k):
            raise ValueError(f"expected state of shape {(self.corpus.m, self.k)}")
        self._hist = [list(row) for row in cum]
        self.step_count = int(step_count)

    def begin_step(self, merits: MeritTable) -> None:
        self._scratch = [row.copy() for row in self._hist]
        self._inv_merit = [
            0.0 if mer < MERIT_FLOOR else 1.0 / float(mer) for mer in merits.merit
        ]

    def select_group(self, position: int, remaining) -> int:
        """Group with the lowest exposure-per-merit at the prefix containing
        `position` (0-based); beyond k the objective stays frozen at prefix k.
        Ties go to the lowest group id."""
        scratch = self._scratch
        if scratch is None:
            raise RuntimeError("begin_step must be called before select_group")
        col = position if position < self.k else self.k - 1
        best, best_val = -1, np.inf
        for g in range(self.corpus.m):
            if remaining[g] <= 0:
                continue
            val = scratch[g][col] * self._inv_merit[g]
            if val < best_val:
                best, best_val = g, val
        if best < 0:
            raise RuntimeError("no group has remaining documents")
        return best

    def place(self, position: int, group: int) -> None:
        """Account a placement into the within-step scratch exposure."""
        if position < self.k:
            contrib = self._contrib[group][position]
            row = self._scratch[group]
            for c in range(position, self.k):
                row[c] += contrib

    def commit_step(self) -> None:
        self._hist = self._scratch
        self._scratch = None
        self.step_count += 1


class MmfPolicy:
    """Maximal marginal fairness: per position, a lambda-coin chooses between
    the globally best remaining document and the best document of the group
    with maximal marginal fairness."""

    def __init__(self, corpus: Corpus, cfg: MmfConfig, curve: PropensityCurve | None = None):
        self.corpus = corpus
        self.cfg = cfg
        self.controller = MmfController(corpus, cfg.k, curve=curve)

    def rank(self, estimates, merits: MeritTable, rng: np.random.Generator, timestep: int = 1) -> Ranking:
        corpus, ctrl, lam = self.corpus, self.controller, self.cfg.lam
        n = corpus.n
        estimates = np.asarray(estimates, dtype=float)
        queues = GroupPriorityQueues(estimates, corpus.group_ids, corpus.m)
        ctrl.begin_step(merits)
        draws = rng.random(n)
        order = np.empty(n, dtype=np.int64)
        group_of = queues.group_of
        for pos in range(n):
            if draws[pos] > lam:
                d = queues.pop_global()
            else:
                g = ctrl.select_group(pos, queues.remaining)
                d = queues.pop_group(g)
            order[pos] = d
            ctrl.place(pos, group_of[d])
        return Ranking(order=order, timestep=timestep)

    def observe(self, ranking: Ranking) -> None:
        self.controller.commit_step()
