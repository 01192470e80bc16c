import itertools

import numpy as np
import pytest

from nrmvc.evaluate import (
    MetricsReport,
    auroc,
    brute_force_accuracy,
    clustering_accuracy,
    fuse_soft_predictions,
    hungarian,
    nmi,
    purity,
)


def brute_min_cost(cost):
    k = cost.shape[0]
    return min(
        sum(cost[i, p[i]] for i in range(k)) for p in itertools.permutations(range(k))
    )


class TestHungarian:
    def test_identity_favoring_cost(self):
        cost = np.ones((3, 3)) - np.eye(3)
        perm = hungarian(cost)
        assert list(perm) == [0, 1, 2]

    def test_hand_case_minimal_cost_five(self):
        cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
        perm = hungarian(cost)
        assert sum(cost[i, perm[i]] for i in range(3)) == 5.0
        assert brute_min_cost(cost) == 5.0

    def test_matches_enumeration_on_random_costs(self, rng):
        for _ in range(100):
            cost = rng.integers(0, 20, size=(4, 4)).astype(np.float64)
            perm = hungarian(cost)
            assert sum(cost[i, perm[i]] for i in range(4)) == brute_min_cost(cost)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="square"):
            hungarian(np.zeros((2, 3)))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            hungarian(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class TestClusteringAccuracy:
    def test_permutation_invariance(self):
        assert clustering_accuracy([0, 0, 1, 1], [1, 1, 0, 0], 2) == 1.0

    def test_hand_case(self):
        assert clustering_accuracy([0, 0, 0, 1], [0, 0, 1, 1], 2) == 0.75

    def test_single_cluster_prediction(self):
        assert clustering_accuracy([0, 0, 0, 0], [0, 0, 1, 1], 2) == 0.5

    def test_matches_brute_force_fuzz(self, rng):
        for _ in range(200):
            k = int(rng.integers(1, 5))
            n = int(rng.integers(1, 13))
            pred = rng.integers(0, k, size=n)
            truth = rng.integers(0, k, size=n)
            assert clustering_accuracy(pred, truth, k) == pytest.approx(
                brute_force_accuracy(pred, truth, k)
            )

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            clustering_accuracy([0, 1], [0, 1, 0], 2)


class TestBruteForce:
    def test_identity(self):
        assert brute_force_accuracy([0, 1, 2], [0, 1, 2], 3) == 1.0

    def test_k_one(self):
        assert brute_force_accuracy([0, 0, 0], [0, 0, 0], 1) == 1.0

    def test_k_too_large_rejected(self):
        with pytest.raises(ValueError):
            brute_force_accuracy([0], [0], 7)


class TestNmi:
    def test_identical_labelings(self):
        assert nmi([0, 1, 2, 0], [0, 1, 2, 0]) == 1.0

    def test_identical_up_to_relabeling(self):
        assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0

    def test_constant_prediction_zero(self):
        assert nmi([0, 0, 0, 0], [0, 1, 0, 1]) == 0.0

    def test_independent_partitions_zero(self):
        assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_hand_contingency(self):
        # pred {0,0,1,1}, truth {0,1,1,1}: MI and entropies by hand
        pred = [0, 0, 1, 1]
        truth = [0, 1, 1, 1]
        n = 4.0
        p = np.array([[1, 1], [0, 2]]) / n
        row, col = p.sum(axis=1), p.sum(axis=0)
        mi = sum(
            p[i, j] * np.log(p[i, j] / (row[i] * col[j]))
            for i in range(2)
            for j in range(2)
            if p[i, j] > 0
        )
        h_row = -(row * np.log(row)).sum()
        h_col = -(col * np.log(col)).sum()
        assert nmi(pred, truth) == pytest.approx(mi / ((h_row + h_col) / 2))

    def test_sample_reorder_invariance(self, rng):
        pred = rng.integers(0, 3, size=30)
        truth = rng.integers(0, 3, size=30)
        order = rng.permutation(30)
        assert nmi(pred, truth) == pytest.approx(nmi(pred[order], truth[order]))

    def test_value_in_unit_interval(self, rng):
        for _ in range(50):
            pred = rng.integers(0, 4, size=20)
            truth = rng.integers(0, 4, size=20)
            v = nmi(pred, truth)
            assert -1e-12 <= v <= 1.0 + 1e-12


class TestPurity:
    def test_perfect(self):
        assert purity([0, 1, 2], [0, 1, 2]) == 1.0

    def test_hand_count(self):
        # cluster 0 holds {A, A, B}, cluster 1 holds {B, B}
        assert purity([0, 0, 0, 1, 1], [0, 0, 1, 1, 1]) == pytest.approx(0.8)

    def test_single_cluster_balanced(self):
        assert purity([0, 0, 0, 0], [0, 0, 1, 1]) == 0.5

    def test_predicted_label_permutation_invariance(self, rng):
        pred = rng.integers(0, 3, size=25)
        truth = rng.integers(0, 3, size=25)
        remap = np.array([2, 0, 1])
        assert purity(remap[pred], truth) == pytest.approx(purity(pred, truth))


class TestFusion:
    def test_single_view_fuse_is_identity(self, rng):
        soft = rng.dirichlet(np.ones(3), size=5)
        assert np.allclose(fuse_soft_predictions([soft]), soft)

    def test_identical_views(self, rng):
        soft = rng.dirichlet(np.ones(3), size=5)
        assert np.allclose(fuse_soft_predictions([soft, soft.copy()]), soft)

    def test_hand_mean_and_argmax(self):
        fused = fuse_soft_predictions(
            [np.array([[0.6, 0.4]]), np.array([[0.2, 0.8]])]
        )
        assert np.allclose(fused, [[0.4, 0.6]])
        assert np.argmax(fused, axis=1)[0] == 1

    def test_phi_weighted_variant(self):
        views = [np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])]
        fused = fuse_soft_predictions(views, phi=[np.array([1.0]), np.array([0.0])])
        assert np.allclose(fused, [[1.0, 0.0]])


class TestMetricsReport:
    def test_csv_row_format(self):
        rep = MetricsReport(
            acc=0.5, nmi=0.25, pur=0.75, seed=3, noise_ratio=0.1,
            dataset="demo", ablation="full",
        )
        assert rep.csv_row() == "demo,0.1,3,full,0.5,0.25,0.75"


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc(np.array([0.1, 0.2, 0.8, 0.9]), np.array([0, 0, 1, 1])) == 1.0

    def test_random_scores_near_half(self, rng):
        score = rng.uniform(size=2000)
        flag = rng.integers(0, 2, size=2000).astype(bool)
        assert abs(auroc(score, flag) - 0.5) < 0.05

    def test_matches_sklearn(self, rng):
        from sklearn.metrics import roc_auc_score

        score = rng.standard_normal(300)
        flag = rng.integers(0, 2, size=300).astype(bool)
        assert auroc(score, flag) == pytest.approx(roc_auc_score(flag, score))

    def test_ties_average(self):
        # all scores tied: AUROC is exactly 0.5
        assert auroc(np.ones(10), np.arange(10) < 5) == pytest.approx(0.5)

    def test_needs_both_classes(self):
        with pytest.raises(ValueError):
            auroc(np.array([0.1, 0.2]), np.array([True, True]))
