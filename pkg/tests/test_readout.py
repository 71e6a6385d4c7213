import math

import numpy as np
import pytest

from bdesn.errors import DivergenceError, ParameterError, ShapeError, SingularityError
from bdesn.readout import (
    MlpModel,
    RidgeReadout,
    TrainConfig,
    TrainLog,
    cross_entropy,
    gradients,
    init_mlp,
    l2_penalty,
    loss,
    mlp_forward,
    predict_linear,
    predict_mlp,
    ridge_fit,
    softmax,
    train_mlp,
)
from bdesn.tensor_math import seeded_rng
from oracles import (
    finite_difference_gradients,
    max_relative_error,
    naive_cross_entropy,
    ridge_dense_inverse,
)


def blobs(seed, n_per_class=30, n_classes=3, dim=2, spread=0.5):
    rng = seeded_rng(seed)
    centers = 3.0 * rng.standard_normal((n_classes, dim))
    x = np.vstack([c + spread * rng.standard_normal((n_per_class, dim)) for c in centers])
    y = np.repeat(np.arange(n_classes), n_per_class)
    return x, y


def zeroed(layer_sizes):
    m = init_mlp(layer_sizes, seed=0)
    for p in m.parameters():
        p[...] = 0.0
    return m


class TestRidge:
    def test_identity_design_fits_training_set(self):
        h = np.eye(4)
        # one-hot columns sum to the bias column, so exactly zero lambda is singular
        with pytest.raises(SingularityError):
            ridge_fit(h, np.arange(4), 0.0)
        r = ridge_fit(h, np.arange(4), 1e-8)
        np.testing.assert_array_equal(predict_linear(r, h), np.arange(4))

    def test_shrinkage_limit(self):
        h, y = blobs(0)
        big = np.linalg.norm(ridge_fit(h, y, 1e6).weights)
        small = np.linalg.norm(ridge_fit(h, y, 1e-3).weights)
        assert big < 1e-3 * small

    def test_matches_dense_inverse_oracle(self):
        h, y = blobs(1)
        r = ridge_fit(h, y, 0.1)
        aug = np.hstack([h, np.ones((h.shape[0], 1))])
        w = ridge_dense_inverse(aug, np.eye(3)[y], 0.1)
        np.testing.assert_allclose(r.weights, w, atol=1e-10)
        np.testing.assert_array_equal(predict_linear(r, h), np.argmax(aug @ w, axis=1))

    def test_weights_shape(self):
        h, y = blobs(2, dim=5)
        assert ridge_fit(h, y, 1.0).weights.shape == (6, 3)

    def test_collinear_needs_positive_lambda(self):
        h = np.ones((6, 2))
        with pytest.raises(SingularityError):
            ridge_fit(h, [0, 1, 0, 1, 0, 1], 0.0)

    def test_decode_examples(self):
        r = RidgeReadout(weights=np.vstack([np.eye(2), np.zeros((1, 2))]), lam=0.0)
        assert predict_linear(r, np.array([[0.9, 0.1]]))[0] == 0
        assert predict_linear(r, np.array([[0.5, 0.5]]))[0] == 0

    def test_batch_decode_equals_rowwise(self):
        h, y = blobs(3)
        r = ridge_fit(h, y, 0.5)
        batch = predict_linear(r, h)
        assert [predict_linear(r, row[None])[0] for row in h] == list(batch)

    def test_dimension_mismatch(self):
        h, y = blobs(4)
        with pytest.raises(ShapeError):
            predict_linear(ridge_fit(h, y, 1.0), np.ones((2, 3)))

    def test_dict_round_trip(self):
        h, y = blobs(5)
        r = ridge_fit(h, y, 0.5)
        np.testing.assert_array_equal(RidgeReadout.from_dict(r.to_dict()).weights, r.weights)


class TestForward:
    def test_zero_network_is_uniform(self):
        logits, _ = mlp_forward(zeroed([4, 6, 5]), seeded_rng(0).standard_normal((3, 4)))
        np.testing.assert_allclose(softmax(logits), 0.2, atol=1e-15)

    def test_no_dropout_train_equals_eval(self):
        m = init_mlp([3, 8, 8, 2], dropout=0.0, seed=1)
        x = seeded_rng(1).standard_normal((10, 3))
        train, _ = mlp_forward(m, x, "train", seeded_rng(5))
        np.testing.assert_array_equal(train, mlp_forward(m, x, "eval")[0])

    def test_train_mode_reproducible(self):
        m = init_mlp([3, 8, 2], dropout=0.5, seed=2)
        x = seeded_rng(2).standard_normal((4, 3))
        a = mlp_forward(m, x, "train", seeded_rng(9))[0]
        b = mlp_forward(m, x, "train", seeded_rng(9))[0]
        np.testing.assert_array_equal(a, b)

    def test_inverted_dropout_expectation(self):
        m = init_mlp([4, 16, 3], dropout=0.2, seed=3)
        x = np.abs(seeded_rng(3).standard_normal((1, 4)))
        reference = mlp_forward(m, x, "eval")[1].inputs[1]
        rng = seeded_rng(4)
        total = np.zeros_like(reference)
        passes = 10_000
        for _ in range(passes):
            total += mlp_forward(m, x, "train", rng)[1].inputs[1]
        rel = np.linalg.norm(total / passes - reference) / np.linalg.norm(reference)
        assert rel < 0.02

    def test_dropout_needs_rng(self):
        with pytest.raises(ParameterError):
            mlp_forward(init_mlp([2, 3, 2], dropout=0.5), np.ones((1, 2)), "train")

    def test_width_mismatch(self):
        with pytest.raises(ShapeError):
            mlp_forward(init_mlp([2, 3, 2]), np.ones((1, 3)))

    @pytest.mark.parametrize("seed", range(5))
    def test_softmax_rows(self, seed):
        p = softmax(50 * seeded_rng(seed).standard_normal((20, 7)))
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert np.all((p >= 0) & (p <= 1))


class TestLoss:
    def test_uniform_logits_nine_classes(self):
        assert cross_entropy(np.zeros((5, 9)), np.arange(5)) == pytest.approx(math.log(9), abs=1e-12)
        assert math.log(9) == pytest.approx(2.1972, abs=1e-4)

    def test_zero_l2_is_plain_cross_entropy(self):
        m = init_mlp([3, 4, 2], l2=0.0, seed=0)
        logits = seeded_rng(0).standard_normal((6, 2))
        labels = np.array([0, 1, 1, 0, 1, 0])
        assert loss(logits, labels, m) == cross_entropy(logits, labels)

    def test_matches_naive_oracle(self):
        rng = seeded_rng(1)
        logits = 3 * rng.standard_normal((12, 5))
        labels = rng.integers(0, 5, 12)
        assert cross_entropy(logits, labels) == pytest.approx(naive_cross_entropy(logits, labels), abs=1e-10)

    def test_l2_excludes_biases(self):
        m = init_mlp([3, 4, 2], l2=0.5, seed=0)
        m.biases[0][...] = 100.0
        expected = 0.5 * sum(float(np.sum(w**2)) for w in m.weights)
        assert l2_penalty(m) == pytest.approx(expected, rel=1e-14)

    def test_stable_for_huge_logits(self):
        assert np.isfinite(cross_entropy(np.array([[1e4, -1e4]]), [1]))


ARCHITECTURES = [[3, 2], [4, 5, 3], [2, 6, 6, 2], [5, 3, 4, 3, 4], [3, 7, 9]]


class TestGradients:
    def test_zero_input_zero_weights(self):
        g = gradients(zeroed([3, 4, 4, 2]), np.zeros((5, 3)), [0, 1, 0, 1, 1])
        assert not np.any(g.weights[0])
        assert not np.any(g.weights[1])

    @pytest.mark.parametrize("seed, sizes", list(enumerate(ARCHITECTURES)))
    def test_finite_differences(self, seed, sizes):
        m = init_mlp(sizes, dropout=0.3, l2=0.01, seed=seed)
        rng = seeded_rng(seed, 50)
        # nonzero biases keep pre-activations off the ReLU kink, where differences are one-sided
        for b in m.biases:
            b[...] = rng.uniform(0.1, 0.5, b.shape)
        x = rng.standard_normal((6, sizes[0]))
        labels = rng.integers(0, sizes[-1], 6)
        analytic = gradients(m, x, labels, "eval").as_list()
        numeric = finite_difference_gradients(m, x, labels)
        assert max_relative_error(analytic, numeric) < 1e-4

    def test_train_mode_gradient_uses_the_drawn_mask(self):
        m = init_mlp([3, 10, 2], dropout=0.5, seed=7)
        x = seeded_rng(7).standard_normal((4, 3))
        labels = np.array([0, 1, 1, 0])
        g = gradients(m, x, labels, "train", seeded_rng(8))
        _, cache = mlp_forward(m, x, "train", seeded_rng(8))
        dead = cache.masks[0] == 0
        # a unit dropped for every sample gets no gradient into its incoming weights
        all_dead = np.all(dead, axis=0)
        assert np.any(all_dead)
        assert not np.any(g.weights[0][:, all_dead])
        assert not np.allclose(g.weights[0], gradients(m, x, labels, "eval").weights[0])

    def test_doubling_l2_doubles_decay_term(self):
        m0 = init_mlp([4, 5, 3], l2=0.0, seed=3)
        x = seeded_rng(3).standard_normal((5, 4))
        labels = np.array([0, 1, 2, 0, 1])
        base = gradients(m0, x, labels)
        decays = []
        for l2 in (0.05, 0.1):
            m = m0.copy()
            m.l2 = l2
            g = gradients(m, x, labels)
            decays.append([gw - bw for gw, bw in zip(g.weights, base.weights)])
        for single, double in zip(*decays):
            np.testing.assert_allclose(double, 2 * single, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("seed", range(10))
    def test_small_step_does_not_increase_loss(self, seed):
        m = init_mlp([4, 8, 3], seed=seed)
        rng = seeded_rng(seed, 60)
        x = rng.standard_normal((20, 4))
        labels = rng.integers(0, 3, 20)
        before = loss(mlp_forward(m, x)[0], labels, m)
        for p, g in zip(m.parameters(), gradients(m, x, labels).as_list()):
            p -= 1e-4 * g
        assert loss(mlp_forward(m, x)[0], labels, m) <= before


class TestTraining:
    def test_zero_learning_rate_freezes_parameters(self):
        x, y = blobs(0, n_classes=2)
        m = init_mlp([2, 8, 2], dropout=0.2, l2=1e-3, seed=0)
        trained, log = train_mlp(m, x, y, TrainConfig(epochs=5, batch_size=7, learning_rate=0.0))
        for a, b in zip(trained.parameters(), m.parameters()):
            np.testing.assert_array_equal(a, b)
        assert len(log) == 5

    def test_separable_blobs_reach_full_accuracy(self):
        rng = seeded_rng(1)
        # centres 4 sigma apart on each axis
        x = np.vstack([rng.standard_normal((50, 2)) - 2, rng.standard_normal((50, 2)) + 2])
        x = x[np.abs(x.sum(axis=1)) > 2]  # enforce a margin around the separator
        y = (x.sum(axis=1) > 0).astype(int)
        m = init_mlp([2, 16, 2], seed=1)
        trained, _ = train_mlp(m, x, y, TrainConfig(epochs=200, batch_size=16, learning_rate=1e-2, seed=1))
        assert np.mean(predict_mlp(trained, x) == y) == 1.0

    def test_same_seed_is_bit_identical(self):
        x, y = blobs(2)
        m = init_mlp([2, 10, 3], dropout=0.3, l2=1e-3, seed=2)
        cfg = TrainConfig(epochs=20, batch_size=16, learning_rate=1e-2, seed=5)
        a, log_a = train_mlp(m, x, y, cfg)
        b, log_b = train_mlp(m, x, y, cfg)
        for p, q in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(p, q)
        assert log_a == log_b

    def test_input_model_untouched(self):
        x, y = blobs(3)
        m = init_mlp([2, 4, 3], seed=3)
        before = [p.copy() for p in m.parameters()]
        train_mlp(m, x, y, TrainConfig(epochs=3, learning_rate=1e-2))
        for p, q in zip(m.parameters(), before):
            np.testing.assert_array_equal(p, q)

    def test_divergence_reports_epoch_and_rate(self):
        x, y = blobs(4)
        m = init_mlp([2, 4, 3], seed=4)
        m.weights[0][0, 0] = np.inf
        with pytest.raises(DivergenceError) as info, np.errstate(invalid="ignore"):
            train_mlp(m, x, y, TrainConfig(epochs=3, learning_rate=0.5))
        assert info.value.epoch == 1
        assert info.value.learning_rate == 0.5

    def test_early_stopping_restores_best(self):
        x, y = blobs(5)
        m = init_mlp([2, 8, 3], seed=5)
        cfg = TrainConfig(epochs=300, learning_rate=5e-2, patience=5)
        trained, log = train_mlp(m, x, y, cfg, validation=(x[::3], y[::3]))
        best = min(log.val_loss)
        assert cross_entropy(mlp_forward(trained, x[::3])[0], y[::3]) == pytest.approx(best, rel=1e-12)

    def test_log_csv_round_trip(self, tmp_path):
        x, y = blobs(6)
        _, log = train_mlp(init_mlp([2, 4, 3]), x, y, TrainConfig(epochs=4), validation=(x, y))
        log.to_csv(tmp_path / "log.csv")
        assert (tmp_path / "log.csv").read_text().splitlines()[0] == "epoch,train_loss,val_loss"
        assert TrainLog.from_csv(tmp_path / "log.csv") == log


class TestModel:
    def test_chain_validated(self):
        with pytest.raises(ShapeError):
            MlpModel(layer_sizes=[2, 3, 2], weights=[np.zeros((2, 3)), np.zeros((4, 2))],
                     biases=[np.zeros(3), np.zeros(2)], dropout=0.0, l2=0.0)

    @pytest.mark.parametrize("kwargs", [dict(dropout=1.0), dict(dropout=-0.1), dict(l2=-1.0)])
    def test_hyperparameters_validated(self, kwargs):
        with pytest.raises(ParameterError):
            init_mlp([2, 3, 2], **kwargs)

    def test_init_bounds(self):
        m = init_mlp([9, 16, 4], seed=0)
        assert np.all(np.abs(m.weights[0]) <= 1 / 3)
        assert np.all(np.abs(m.weights[1]) <= 1 / 4)
        assert not any(np.any(b) for b in m.biases)

    def test_dict_round_trip(self):
        m = init_mlp([3, 5, 2], dropout=0.25, l2=0.1, seed=1)
        clone = MlpModel.from_dict(m.to_dict())
        x = seeded_rng(0).standard_normal((4, 3))
        np.testing.assert_array_equal(mlp_forward(clone, x)[0], mlp_forward(m, x)[0])
        assert (clone.dropout, clone.l2) == (0.25, 0.1)
