import math

import numpy as np
import pytest

from uwform import imgcore, losses, metrics


def img(data):
    return imgcore.LinearImage(np.asarray(data, dtype=float))


def make_sample(rng, perturb=0.0):
    shape = (16, 16, 3)
    J = rng.random(shape)
    B = rng.random(shape) * 0.5
    T = rng.random(shape) * 0.9 + 0.05
    W = rng.random(3) * 0.5 + 0.5
    return losses.SupervisedSample(
        J_pred=img(np.clip(J + perturb, 0, None)),
        B_pred=img(B),
        T_pred=img(T),
        W_pred=W,
        J_true=img(J),
        B_true=img(B),
        T_true=img(T),
        W_true=W,
    )


class TestRecLoss:
    def test_perfect_predictions_zero(self, rng):
        assert losses.rec_loss([make_sample(rng)]) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_offset(self, rng):
        s = make_sample(rng, perturb=0.1)
        expected_rms = 0.1
        ssim_term = 1.0 - metrics.ssim(s.J_true, s.J_pred)
        assert losses.rec_loss([s]) == pytest.approx(expected_rms + ssim_term, abs=1e-9)

    def test_two_identical_samples_double(self, rng):
        s = make_sample(rng, perturb=0.05)
        one = losses.rec_loss([s])
        two = losses.rec_loss([s, s])
        assert two == pytest.approx(2 * one, abs=1e-12)

    def test_nonnegative_and_zero_iff_exact(self, rng):
        s = make_sample(rng, perturb=0.01)
        assert losses.rec_loss([s]) > 0.0

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            losses.rec_loss([])


class TestConLoss:
    def test_identical_inputs_zero(self, rng):
        a = img(rng.random((8, 8, 3)))
        assert losses.con_loss(a, a, [a], [a]) == 0.0

    def test_uniform_offset(self, rng):
        a = img(rng.random((8, 8, 3)))
        b = img(a.data + 0.2)
        assert losses.con_loss(a, b, [a], [a]) == pytest.approx(0.2, abs=1e-12)

    def test_swap_invariance(self, rng):
        a, b = img(rng.random((8, 8, 3))), img(rng.random((8, 8, 3)))
        o, r = [img(rng.random((8, 8, 3)))], [img(rng.random((8, 8, 3)))]
        assert losses.con_loss(a, b, o, r) == pytest.approx(losses.con_loss(b, a, o, r))

    def test_regenerated_via_formation_consistency(self, rng):
        # re-render from true components: second term ~ 0
        from uwform import formation

        J = img(rng.random((8, 8, 3)))
        z = imgcore.RangeMap(rng.uniform(0.5, 10, (8, 8)))
        params = formation.WaterParams(
            (0.3, 0.4, 0.5), (0.4, 0.3, 0.5),
            formation.AttenuationModel.constant((0.2, 0.15, 0.1)), (0.8, 1.0, 0.9))
        original, comps = formation.synthesize(J, z, params)
        regenerated, _ = formation.synthesize(formation.restore(original, comps), z, params)
        loss = losses.con_loss(J, J, [original], [regenerated])
        assert loss <= 1e-5

    def test_length_mismatch(self, rng):
        a = img(rng.random((4, 4, 3)))
        with pytest.raises(ValueError):
            losses.con_loss(a, a, [a], [])


class TestAdvLoss:
    def test_all_half(self):
        got = losses.adv_loss([0.5, 0.5], [0.5], [0.5, 0.5, 0.5])
        assert got == pytest.approx(3 * math.log(0.5), abs=1e-9)

    def test_perfect_discriminator_near_zero(self):
        eps = 1e-7
        got = losses.adv_loss([eps], [eps], [1 - eps])
        assert got == pytest.approx(0.0, abs=1e-5)
        assert got <= 0.0

    def test_point_nine_scores(self):
        got = losses.adv_loss([0.1], [0.1], [0.9])
        expected = 2 * math.log(0.9) + math.log(0.9)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(-0.3161, abs=1e-4)

    def test_empty_terms_contribute_zero(self):
        assert losses.adv_loss([], [], [0.5]) == pytest.approx(math.log(0.5))
        assert losses.adv_loss([], [], []) == 0.0

    def test_always_nonpositive_and_monotone_in_real_scores(self, rng):
        fakes = rng.uniform(0.01, 0.99, 5)
        lo = losses.adv_loss(fakes, fakes, [0.3, 0.4])
        hi = losses.adv_loss(fakes, fakes, [0.8, 0.9])
        assert lo <= 0.0 and hi <= 0.0
        assert hi > lo

    def test_scores_clamped(self):
        # 0 and 1 are clamped rather than producing -inf
        got = losses.adv_loss([1.0], [0.0], [0.0])
        assert math.isfinite(got)


class TestTotalLoss:
    def test_paper_weights(self):
        assert losses.total_loss(1.0, 2.0, 0.5) == pytest.approx(13.0, abs=1e-12)

    def test_zero(self):
        assert losses.total_loss(0.0, 0.0, 0.0) == 0.0

    def test_projection(self):
        w = losses.LossWeights(0.0, 0.0, 1.0)
        assert losses.total_loss(5.0, 7.0, -2.0794, w) == pytest.approx(-2.0794)

    def test_linear_in_each_component(self, rng):
        w = losses.LossWeights()
        r, c, a = rng.random(3)
        assert losses.total_loss(2 * r, c, a, w) - losses.total_loss(r, c, a, w) == \
            pytest.approx(w.lambda_rec * r, abs=1e-9)

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            losses.LossWeights(-1.0, 0.0, 0.0)
