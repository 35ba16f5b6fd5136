import numpy as np
import pytest

from dynfair.core import (
    Corpus,
    InteractionRecord,
    PropensityCurve,
    Ranking,
    position_of,
    propensity_at,
)


class TestPositionOf:
    def test_first_element(self):
        r = Ranking(order=np.array([2, 0, 1]))
        assert position_of(r, 2) == 1

    def test_last_element(self):
        r = Ranking(order=np.array([2, 0, 1]))
        assert position_of(r, 1) == 3

    def test_identity_permutation(self):
        r = Ranking(order=np.arange(5))
        assert position_of(r, 3) == 4

    def test_unknown_doc(self):
        r = Ranking(order=np.array([2, 0, 1]))
        with pytest.raises(ValueError):
            position_of(r, 7)

    def test_positions_vector_matches(self):
        rng = np.random.default_rng(0)
        r = Ranking(order=rng.permutation(12))
        pos = r.positions()
        for d in range(12):
            assert pos[d] == position_of(r, d)


class TestPropensity:
    def test_rank_one(self):
        assert propensity_at(PropensityCurve(), 1) == 1.0

    def test_rank_three(self):
        assert propensity_at(PropensityCurve(), 3) == pytest.approx(0.5)

    def test_rank_seven(self):
        assert propensity_at(PropensityCurve(), 7) == pytest.approx(1.0 / 3.0)

    def test_rank_zero_rejected(self):
        with pytest.raises(ValueError):
            propensity_at(PropensityCurve(), 0)

    def test_strictly_decreasing(self):
        curve = PropensityCurve()
        vals = [propensity_at(curve, i) for i in range(1, 100)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert all(v > 0 for v in vals)

    def test_values_vector_matches_scalar(self):
        curve = PropensityCurve()
        vec = curve.values(20)
        assert vec[0] == 1.0
        for i in range(20):
            assert vec[i] == pytest.approx(propensity_at(curve, i + 1))


class TestRanking:
    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            Ranking(order=np.array([0, 0, 1]))
        with pytest.raises(ValueError):
            Ranking(order=np.array([1, 2, 3]))

    def test_accepts_permutation(self):
        Ranking(order=np.array([3, 1, 0, 2]))


class TestCorpus:
    def test_empty_group_rejected(self):
        with pytest.raises(ValueError, match="group 1"):
            Corpus(group_ids=np.array([0, 0, 2, 2]))

    def test_group_sizes(self):
        c = Corpus(group_ids=np.array([0, 1, 1, 0, 1]))
        assert c.m == 2
        assert list(c.group_sizes) == [2, 3]
        assert list(c.group_members(1)) == [1, 2, 4]

    def test_documents_roundtrip(self):
        c = Corpus(group_ids=np.array([0, 1]), polarities=np.array([-0.5, 0.5]))
        docs = c.documents()
        assert docs[0].doc_id == 0 and docs[0].group_id == 0 and docs[0].polarity == -0.5


class TestInteractionRecord:
    def _ranking(self):
        return Ranking(order=np.array([0, 1, 2]))

    def test_click_requires_relevance(self):
        with pytest.raises(ValueError, match="non-relevant"):
            InteractionRecord(
                timestep=1,
                ranking=self._ranking(),
                true_relevance=np.array([0, 1, 0]),
                clicks=np.array([1, 0, 0]),
                propensities=np.array([1.0, 0.6, 0.5]),
            )

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            InteractionRecord(
                timestep=1,
                ranking=self._ranking(),
                true_relevance=np.array([0, 1]),
                clicks=np.array([0, 0, 0]),
                propensities=np.array([1.0, 0.6, 0.5]),
            )
