import math

import numpy as np
import pytest

from dynfair.core import Corpus, PropensityCurve, Ranking
from dynfair.fairness import (
    ExposureLedger,
    MeritTable,
    default_tracked_ks,
    estimated_merits,
    ledger_update,
    mean_pairwise_disparity,
    ndcg_at_k,
    ndcg_at_ks,
    prefix_exposure,
    unfairness_at_k,
)


def two_group_corpus(sizes=(10, 10)):
    ids = np.concatenate([np.full(s, g) for g, s in enumerate(sizes)])
    return Corpus(group_ids=ids)


class TestPrefixExposure:
    def test_empty_intersection(self):
        corpus = two_group_corpus()
        ranking = Ranking(order=np.arange(20))  # group 0 docs first
        assert prefix_exposure(ranking, PropensityCurve(), corpus, group=1, k=5) == 0.0

    def test_top_doc_only(self):
        corpus = two_group_corpus()
        ranking = Ranking(order=np.arange(20))
        assert prefix_exposure(ranking, PropensityCurve(), corpus, group=0, k=1) == pytest.approx(0.1)

    def test_two_docs_at_ranks_two_and_three(self):
        # group 1 of size 2 at ranks 2 and 3: (1/log2(3) + 0.5) / 2
        corpus = Corpus(group_ids=np.array([0, 0, 1, 1]))
        ranking = Ranking(order=np.array([0, 2, 3, 1]))
        expected = (1.0 / math.log2(3.0) + 0.5) / 2.0
        got = prefix_exposure(ranking, PropensityCurve(), corpus, group=1, k=3)
        assert got == pytest.approx(expected)
        assert got == pytest.approx(0.5655, abs=1e-4)

    def test_k_out_of_range(self):
        corpus = two_group_corpus()
        with pytest.raises(ValueError):
            prefix_exposure(Ranking(order=np.arange(20)), PropensityCurve(), corpus, 0, 0)


class TestUnfairness:
    def _ledger_with_exp_mer(self, exp_mer, merit):
        """Ledger + merits crafted so exposure_per_merit at k=1 equals exp_mer."""
        m = len(exp_mer)
        corpus = Corpus(group_ids=np.arange(m))
        ledger = ExposureLedger(corpus, tracked_ks=(1,))
        ledger.step_count = 4
        ledger.cum_exposure[:, 0] = np.asarray(exp_mer) * np.asarray(merit) * ledger.step_count
        return ledger, MeritTable(merit=np.asarray(merit, dtype=float))

    def test_identical_exposure_is_fair(self):
        ledger, merits = self._ledger_with_exp_mer([0.25, 0.25], [0.5, 0.9])
        assert unfairness_at_k(ledger, merits, 1) == pytest.approx(0.0)

    def test_two_group_difference(self):
        ledger, merits = self._ledger_with_exp_mer([0.4, 0.1], [0.5, 0.9])
        assert unfairness_at_k(ledger, merits, 1) == pytest.approx(0.3)

    def test_three_group_enumeration(self):
        # pairs: |0.3-0.2| + |0.3-0.1| + |0.2-0.1| = 0.4, times 2/(3*2)
        ledger, merits = self._ledger_with_exp_mer([0.3, 0.2, 0.1], [0.5, 0.9, 0.7])
        expected = (2.0 / 6.0) * (0.1 + 0.2 + 0.1)
        assert unfairness_at_k(ledger, merits, 1) == pytest.approx(expected)
        assert unfairness_at_k(ledger, merits, 1) == pytest.approx(0.13333, abs=1e-4)

    def test_zero_merit_rejected(self):
        ledger, _ = self._ledger_with_exp_mer([0.3, 0.2], [0.5, 0.9])
        with pytest.raises(ValueError):
            unfairness_at_k(ledger, MeritTable(merit=np.array([0.5, 0.0])), 1)

    def test_relabeling_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            vals = rng.random(4)
            perm = rng.permutation(4)
            assert mean_pairwise_disparity(vals) == pytest.approx(mean_pairwise_disparity(vals[perm]))

    def test_merit_homogeneity(self):
        # scaling all merits by c scales Unfairness@k by 1/c
        ledger, merits = self._ledger_with_exp_mer([0.3, 0.2, 0.6], [0.5, 0.9, 0.7])
        base = unfairness_at_k(ledger, merits, 1)
        for c in (2.0, 0.25, 10.0):
            scaled = MeritTable(merit=merits.merit * c)
            assert unfairness_at_k(ledger, scaled, 1) == pytest.approx(base / c)

    def test_zero_iff_equal(self):
        rng = np.random.default_rng(2)
        vals = rng.random(5)
        assert mean_pairwise_disparity(np.full(5, 0.3)) == 0.0
        if len(set(np.round(vals, 12))) > 1:
            assert mean_pairwise_disparity(vals) > 0.0


class TestLedger:
    def test_single_step_matches_prefix_exposure(self):
        rng = np.random.default_rng(3)
        corpus = Corpus(group_ids=rng.integers(0, 3, 12))
        curve = PropensityCurve()
        ledger = ExposureLedger(corpus, tracked_ks=(1, 3, 5, 12), curve=curve)
        ranking = Ranking(order=rng.permutation(12))
        ledger_update(ledger, ranking)
        for j, k in enumerate(ledger.tracked_ks):
            for g in range(corpus.m):
                assert ledger.cum_exposure[g, j] == pytest.approx(
                    prefix_exposure(ranking, curve, corpus, g, k)
                )

    def test_two_identical_steps_double(self):
        corpus = two_group_corpus((3, 3))
        ledger = ExposureLedger(corpus, tracked_ks=(2, 6))
        ranking = Ranking(order=np.array([0, 3, 1, 4, 2, 5]))
        ledger.update(ranking)
        once = ledger.cum_exposure.copy()
        ledger.update(ranking)
        np.testing.assert_allclose(ledger.cum_exposure, 2.0 * once)

    def test_random_sequence_matches_bruteforce(self):
        rng = np.random.default_rng(4)
        corpus = Corpus(group_ids=rng.integers(0, 2, 9))
        curve = PropensityCurve()
        ks = (1, 2, 4, 9)
        ledger = ExposureLedger(corpus, tracked_ks=ks, curve=curve)
        rankings = [Ranking(order=rng.permutation(9)) for _ in range(10)]
        for r in rankings:
            ledger.update(r)
        brute = np.zeros((corpus.m, len(ks)))
        for r in rankings:
            for j, k in enumerate(ks):
                for g in range(corpus.m):
                    brute[g, j] += prefix_exposure(r, curve, corpus, g, k)
        np.testing.assert_allclose(ledger.cum_exposure, brute)
        assert ledger.step_count == 10

    def test_full_list_fast_path_matches(self):
        rng = np.random.default_rng(5)
        corpus = Corpus(group_ids=rng.integers(0, 3, 8))
        full = ExposureLedger(corpus, tracked_ks=(8,))
        general = ExposureLedger(corpus, tracked_ks=(4, 8))
        for _ in range(5):
            r = Ranking(order=rng.permutation(8))
            full.update(r)
            general.update(r)
        np.testing.assert_allclose(full.cum_exposure[:, 0], general.cum_exposure[:, 1])

    def test_monotone_in_tau_and_k(self):
        rng = np.random.default_rng(6)
        corpus = Corpus(group_ids=rng.integers(0, 2, 10))
        ledger = ExposureLedger(corpus, tracked_ks=(2, 5, 10))
        prev = np.zeros((2, 3))
        for _ in range(6):
            ledger.update(Ranking(order=rng.permutation(10)))
            assert (ledger.cum_exposure >= prev - 1e-15).all()
            assert (np.diff(ledger.cum_exposure, axis=1) >= -1e-15).all()
            prev = ledger.cum_exposure.copy()

    def test_untracked_prefix_rejected(self):
        ledger = ExposureLedger(two_group_corpus(), tracked_ks=(5, 20))
        with pytest.raises(KeyError):
            ledger.column(7)

    def test_tracked_ks_bounds(self):
        with pytest.raises(ValueError):
            ExposureLedger(two_group_corpus(), tracked_ks=(0, 5))
        with pytest.raises(ValueError):
            ExposureLedger(two_group_corpus(), tracked_ks=(25,))

    def test_default_tracked_ks(self):
        assert default_tracked_ks(30) == (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30)
        assert default_tracked_ks(100) == (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 50, 100)
        assert default_tracked_ks(5) == (1, 2, 3, 4, 5)


class TestNdcg:
    def test_ideal_ranking_is_one(self):
        gains = np.array([0.9, 0.5, 0.3, 0.1])
        ranking = Ranking(order=np.array([0, 1, 2, 3]))
        for k in range(1, 5):
            assert ndcg_at_k(ranking, gains, k) == pytest.approx(1.0)

    def test_relevant_doc_at_rank_two(self):
        gains = np.array([1.0, 0.0])
        ranking = Ranking(order=np.array([1, 0]))
        assert ndcg_at_k(ranking, gains, 2) == pytest.approx(1.0 / math.log2(3.0))
        assert ndcg_at_k(ranking, gains, 2) == pytest.approx(0.6309, abs=1e-4)

    def test_top_doc_at_k1(self):
        gains = np.array([0.2, 0.9, 0.5])
        ranking = Ranking(order=np.array([1, 2, 0]))
        assert ndcg_at_k(ranking, gains, 1) == pytest.approx(1.0)

    def test_all_zero_gains_convention(self):
        ranking = Ranking(order=np.array([2, 0, 1]))
        assert ndcg_at_k(ranking, np.zeros(3), 2) == 1.0

    def test_negative_gains_rejected(self):
        with pytest.raises(ValueError):
            ndcg_at_k(Ranking(order=np.arange(3)), np.array([0.5, -0.1, 0.2]), 2)

    def test_swap_monotonicity(self):
        # moving a higher-gain doc upward never decreases NDCG
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(4, 10))
            gains = rng.random(n)
            order = rng.permutation(n)
            i, j = sorted(rng.choice(n, size=2, replace=False))
            if gains[order[j]] <= gains[order[i]]:
                continue
            swapped = order.copy()
            swapped[[i, j]] = swapped[[j, i]]
            k = int(rng.integers(1, n + 1))
            before = ndcg_at_k(Ranking(order=order), gains, k)
            after = ndcg_at_k(Ranking(order=swapped), gains, k)
            assert after >= before - 1e-12

    def test_vector_version_matches_scalar(self):
        rng = np.random.default_rng(8)
        gains = rng.random(12)
        order = rng.permutation(12)
        ks = [1, 3, 5, 12]
        vec = ndcg_at_ks(order, gains, ks)
        for j, k in enumerate(ks):
            assert vec[j] == pytest.approx(ndcg_at_k(Ranking(order=order), gains, k))


class TestMeritTable:
    def test_estimated_merits_group_means(self):
        corpus = Corpus(group_ids=np.array([0, 1, 0, 1]))
        merits = estimated_merits(np.array([0.2, 0.8, 0.4, 0.4]), corpus)
        np.testing.assert_allclose(merits.merit, [0.3, 0.6])
        assert merits.source == "estimated"
