import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrmvc.gradcheck import grad_check
from nrmvc.layers import DimensionError, Parameter
from nrmvc.losses import (
    LossBreakdown,
    contrastive_loss,
    mix_predictions,
    pair_similarity,
    reconstruction_loss,
    rectification_loss,
    rectification_with_grads,
    total_loss,
)

from conftest import unit_rows


def simplex_rows(rng, n, k):
    return rng.dirichlet(np.ones(k), size=n)


class TestMixPredictions:
    def test_phi_one_keeps_own(self, rng):
        y = simplex_rows(rng, 4, 3)
        y1 = simplex_rows(rng, 4, 3)
        assert np.array_equal(mix_predictions(y, y1, np.ones(4)), y)

    def test_phi_zero_adopts_anchor(self, rng):
        y = simplex_rows(rng, 4, 3)
        y1 = simplex_rows(rng, 4, 3)
        assert np.array_equal(mix_predictions(y, y1, np.zeros(4)), y1)

    def test_hand_blend(self):
        m = mix_predictions(
            np.array([[0.2, 0.8]]), np.array([[0.6, 0.4]]), np.array([0.5])
        )
        assert np.allclose(m, [[0.4, 0.6]])

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            mix_predictions(simplex_rows(rng, 4, 3), simplex_rows(rng, 4, 2), np.ones(4))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_result_stays_on_simplex(self, seed):
        rng = np.random.default_rng(seed)
        y = simplex_rows(rng, 6, 4)
        y1 = simplex_rows(rng, 6, 4)
        phi = rng.uniform(0, 1, size=6)
        m = mix_predictions(y, y1, phi)
        assert np.allclose(m.sum(axis=1), 1.0, atol=1e-9)
        assert (m >= 0).all()


class TestRectificationLoss:
    def test_one_hot_agreement_is_zero(self):
        one_hot = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert rectification_loss([one_hot], [one_hot]) == pytest.approx(0.0)

    def test_uniform_hand_value(self):
        half = np.array([[0.5, 0.5]])
        assert rectification_loss([half], [half]) == pytest.approx(math.log(2.0))

    def test_zero_probability_clamped(self):
        m = np.array([[1.0, 0.0]])
        y = np.array([[0.0, 1.0]])
        value = rectification_loss([m], [y])
        assert np.isfinite(value)
        assert value <= -math.log(1e-12) + 1e-9

    def test_nonnegative_and_entropy_at_match(self, rng):
        y = simplex_rows(rng, 5, 3)
        value = rectification_loss([y], [y])
        entropy = -(y * np.log(y)).sum() / 5
        assert value == pytest.approx(entropy)
        assert value >= 0.0

    def test_empty_views_rejected(self):
        with pytest.raises(ValueError):
            rectification_loss([], [])

    def test_value_matches_grad_variant(self, rng):
        ys = [simplex_rows(rng, 6, 3) for _ in range(3)]
        phi = [np.ones(6)] + [rng.uniform(0, 1, 6) for _ in range(2)]
        value, _ = rectification_with_grads(ys, phi)
        mixes = [
            mix_predictions(ys[v], ys[0], phi[v]) for v in range(1, 3)
        ]
        assert value == pytest.approx(rectification_loss(mixes, ys[1:]))


class TestPairSimilarity:
    def test_identical(self):
        v = np.array([0.6, 0.8])
        assert pair_similarity(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert pair_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_antipodal(self):
        v = np.array([0.6, 0.8])
        assert pair_similarity(v, -v) == pytest.approx(-1.0)


class TestContrastiveLoss:
    def test_nothing_selected(self, rng):
        zs = [unit_rows(rng, 4, 6) for _ in range(2)]
        ys = [np.full((4, 4), 0.25) for _ in range(2)]  # products 0.25 < tau
        value, count, grads = contrastive_loss(zs, ys, tau=0.8)
        assert value == 0.0 and count == 0
        assert all(np.all(g == 0) for g in grads)

    def test_selected_pair_zero_similarity(self):
        zs = [np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])]
        ys = [np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])]
        value, count, _ = contrastive_loss(zs, ys, tau=0.8)
        assert count == 2  # both view orders select the (0, 0) pair
        assert value == pytest.approx(0.0)  # log(1 - 0) twice

    def test_hand_value_half_similarity(self):
        # one sample, two views, embeddings at 60 degrees: similarity 0.5
        z = np.array([[1.0, 0.0]])
        w = np.array([[0.5, math.sqrt(3) / 2]])
        ys = [np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])]
        value, count, _ = contrastive_loss([z, w], ys, tau=0.8)
        # each ordered view pair contributes 2*ln(0.5); V(V-1)=2 and count=2
        expected = (4.0 * math.log(0.5)) / (2.0 * 2.0)
        assert value == pytest.approx(expected)
        per_pair = 2.0 * math.log(0.5)
        assert per_pair == pytest.approx(-1.3863, abs=1e-4)

    def test_raising_tau_never_selects_more(self, rng):
        zs = [unit_rows(rng, 8, 6) for _ in range(3)]
        ys = [simplex_rows(rng, 8, 3) for _ in range(3)]
        counts = [contrastive_loss(zs, ys, tau)[1] for tau in (0.2, 0.4, 0.6, 0.8)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_loss_decreases_as_selected_pair_aligns(self):
        ys = [np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])]
        z = np.array([[1.0, 0.0]])
        lo, _, _ = contrastive_loss([z, np.array([[0.0, 1.0]])], ys, tau=0.5)
        hi, _, _ = contrastive_loss(
            [z, np.array([[math.sqrt(0.5), math.sqrt(0.5)]])], ys, tau=0.5
        )
        assert hi < lo  # higher similarity pushes log(1 - s) lower

    def test_similarity_clamp_keeps_value_finite(self):
        z = np.array([[1.0, 0.0]])
        ys = [np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])]
        value, _, grads = contrastive_loss([z, z.copy()], ys, tau=0.5)
        assert np.isfinite(value)
        assert all(np.isfinite(g).all() for g in grads)


class TestReconstructionLoss:
    def test_perfect_reconstruction(self, rng):
        x = rng.standard_normal((3, 4))
        value, grads = reconstruction_loss([x], [x.copy()])
        assert value == 0.0
        assert np.all(grads[0] == 0.0)

    def test_hand_value(self):
        value, _ = reconstruction_loss(
            [np.array([[1.0, 0.0]])], [np.array([[0.0, 0.0]])]
        )
        assert value == pytest.approx(1.0)

    def test_quadratic_homogeneity(self, rng):
        x = rng.standard_normal((4, 3))
        xh = x + rng.standard_normal((4, 3))
        v1, _ = reconstruction_loss([x], [xh])
        v2, _ = reconstruction_loss([x], [x + 2.0 * (xh - x)])
        assert v2 == pytest.approx(4.0 * v1)

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            reconstruction_loss([rng.standard_normal((3, 4))], [np.zeros((3, 5))])


class TestTotalLoss:
    def test_alpha_beta_zero(self):
        b = total_loss(2.5, 7.0, -3.0, alpha=0.0, beta=0.0)
        assert b.total == 2.5

    def test_arithmetic(self):
        b = total_loss(1.0, 2.0, -1.0, alpha=1.0, beta=1.0, selected_pair_count=4)
        assert b.total == pytest.approx(2.0)
        assert b.selected_pair_count == 4

    def test_breakdown_invariant(self, rng):
        for _ in range(20):
            recon, rect, con = rng.standard_normal(3)
            alpha, beta = rng.uniform(0, 2, size=2)
            b = total_loss(recon, rect, con, alpha, beta)
            assert abs(b.total - (b.recon + alpha * b.rectify + beta * b.contrastive)) < 1e-9


class TestLossGradients:
    def test_rectification_gradient(self, rng):
        logits = [Parameter(rng.standard_normal((5, 3))) for _ in range(3)]
        phi = [np.ones(5)] + [rng.uniform(0.1, 0.9, 5) for _ in range(2)]

        from nrmvc.layers import softmax_rows, softmax_rows_backward

        def loss_fn():
            ys = [softmax_rows(p.value) for p in logits]
            return rectification_with_grads(ys, phi)[0]

        ys = [softmax_rows(p.value) for p in logits]
        _, d_probs = rectification_with_grads(ys, phi)
        for p, dy, y in zip(logits, d_probs, ys):
            p.zero_grad()
            p.grad += softmax_rows_backward(dy, y)
        assert grad_check(loss_fn, logits) < 1e-3

    def test_contrastive_gradient(self, rng):
        from nrmvc.layers import l2_normalize_rows, l2_normalize_rows_backward

        raw = [Parameter(rng.standard_normal((5, 6))) for _ in range(2)]
        ys = [simplex_rows(rng, 5, 3) for _ in range(2)]

        def loss_fn():
            zs = [l2_normalize_rows(p.value)[0] for p in raw]
            return contrastive_loss(zs, ys, tau=0.25)[0]

        zs, norms = [], []
        for p in raw:
            z, nrm, _ = l2_normalize_rows(p.value)
            zs.append(z)
            norms.append(nrm)
        value, count, d_embs = contrastive_loss(zs, ys, tau=0.25)
        assert count > 0  # the check only means something with live pairs
        for p, dz, z, nrm in zip(raw, d_embs, zs, norms):
            p.zero_grad()
            p.grad += l2_normalize_rows_backward(dz, z, nrm)
        assert grad_check(loss_fn, raw) < 1e-3

    def test_reconstruction_gradient(self, rng):
        x = rng.standard_normal((4, 3))
        xh = Parameter(rng.standard_normal((4, 3)))

        def loss_fn():
            return reconstruction_loss([x], [xh.value])[0]

        xh.zero_grad()
        _, grads = reconstruction_loss([x], [xh.value])
        xh.grad += grads[0]
        assert grad_check(loss_fn, [xh]) < 1e-4
