import numpy as np
import pytest

from capic.datasets import PairedDataset
from capic.errors import ContractViolationError, TrainingDivergedError
from capic.neural import (
    MlpConfig,
    TrainConfig,
    backward,
    evaluate_loss,
    forward,
    mlp_init,
    train_ca_nn,
)


def loss_for_fd(params, x, probe):
    out, _ = forward(params, x)
    return float(np.sum(probe * out))


def finite_diff_param_grads(params, x, probe, step=1e-5):
    grads_w, grads_b = [], []
    for store, grads in ((params.weights, grads_w), (params.biases, grads_b)):
        for arr in store:
            g = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                arr[idx] += step
                up = loss_for_fd(params, x, probe)
                arr[idx] -= 2 * step
                down = loss_for_fd(params, x, probe)
                arr[idx] += step
                g[idx] = (up - down) / (2 * step)
            grads.append(g)
    return grads_w, grads_b


def max_rel_err(a_list, b_list):
    worst = 0.0
    for a, b in zip(a_list, b_list):
        worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-6))))
    return worst


class TestInitAndShapes:
    def test_same_seed_bit_identical(self):
        cfg = MlpConfig((4, 8, 3), init_seed=5)
        a = mlp_init(cfg)
        b = mlp_init(cfg)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_weight_shapes(self):
        p = mlp_init(MlpConfig((4, 8, 3)))
        assert p.weights[0].shape == (8, 4)
        assert p.weights[1].shape == (3, 8)
        assert all(b.shape == (w.shape[0],) for w, b in zip(p.weights, p.biases))

    def test_zero_width_rejected(self):
        with pytest.raises(ContractViolationError):
            MlpConfig((4, 0, 3))

    def test_needs_hidden_layer(self):
        with pytest.raises(ContractViolationError):
            MlpConfig((4, 3))

    def test_unknown_activation_rejected(self):
        with pytest.raises(ContractViolationError):
            MlpConfig((4, 8, 3), activation="gelu")


class TestForward:
    def test_zero_params_zero_output(self):
        p = mlp_init(MlpConfig((3, 5, 2)))
        for w in p.weights:
            w[:] = 0.0
        out, _ = forward(p, np.random.default_rng(0).normal(size=(3, 7)))
        np.testing.assert_allclose(out, 0.0)

    def test_identity_hook_collapses_to_affine(self):
        p = mlp_init(MlpConfig((3, 4, 2), activation="identity", init_seed=2))
        x = np.random.default_rng(1).normal(size=(3, 6))
        out, _ = forward(p, x)
        w = p.weights[1] @ p.weights[0]
        b = p.weights[1] @ p.biases[0] + p.biases[1]
        np.testing.assert_allclose(out, w @ x + b[:, None], atol=1e-12)

    def test_matches_scalar_reference_evaluation(self):
        cfg = MlpConfig((2, 3, 2), activation="tanh", init_seed=9)
        p = mlp_init(cfg)
        x = np.random.default_rng(4).normal(size=(2, 5))
        out, _ = forward(p, x)
        for col in range(5):
            h = [0.0] * 3
            for i in range(3):
                acc = p.biases[0][i]
                for j in range(2):
                    acc += p.weights[0][i, j] * x[j, col]
                h[i] = np.tanh(acc)
            for i in range(2):
                acc = p.biases[1][i]
                for j in range(3):
                    acc += p.weights[1][i, j] * h[j]
                assert abs(out[i, col] - acc) < 1e-12

    def test_width_mismatch_rejected(self):
        p = mlp_init(MlpConfig((3, 4, 2)))
        with pytest.raises(ContractViolationError):
            forward(p, np.zeros((2, 5)))

    def test_output_clip_respected_exactly(self):
        p = mlp_init(MlpConfig((1, 4, 1), output_clip=0.05, init_seed=3))
        out, _ = forward(p, np.linspace(-50, 50, 101)[None, :])
        assert np.max(np.abs(out)) <= 0.05


class TestBackward:
    def test_zero_grad_out(self):
        p = mlp_init(MlpConfig((2, 3, 2), init_seed=1))
        x = np.random.default_rng(2).normal(size=(2, 4))
        _, cache = forward(p, x)
        gw, gb = backward(p, cache, np.zeros((2, 4)))
        assert all(np.all(g == 0) for g in gw + gb)

    def test_linear_net_sum_loss_hand_gradient(self):
        # identity activations, loss = sum of outputs: dW_last = 1 h^T etc.
        p = mlp_init(MlpConfig((2, 2, 1), activation="identity", init_seed=6))
        x = np.random.default_rng(7).normal(size=(2, 5))
        out, cache = forward(p, x)
        gw, gb = backward(p, cache, np.ones_like(out))
        np.testing.assert_allclose(gw[1], cache.hidden_post[0].sum(axis=1)[None, :], atol=1e-12)
        np.testing.assert_allclose(gb[1], [5.0], atol=1e-12)
        np.testing.assert_allclose(
            gw[0], p.weights[1].T @ np.ones((1, 5)) @ x.T, atol=1e-12
        )

    def test_finite_differences_tanh(self):
        p = mlp_init(MlpConfig((2, 3, 2), activation="tanh", init_seed=11))
        rng = np.random.default_rng(12)
        x = rng.normal(size=(2, 6))
        probe = rng.normal(size=(2, 6))
        out, cache = forward(p, x)
        gw, gb = backward(p, cache, probe)
        fd_w, fd_b = finite_diff_param_grads(p, x, probe)
        assert max_rel_err(gw, fd_w) < 1e-4
        assert max_rel_err(gb, fd_b) < 1e-4

    def test_finite_differences_relu_away_from_kinks(self):
        p = mlp_init(MlpConfig((3, 5, 2), activation="relu", init_seed=21))
        rng = np.random.default_rng(22)
        x = rng.normal(size=(3, 8))
        _, cache = forward(p, x)
        # seed chosen so no pre-activation sits near the kink
        assert min(np.abs(z).min() for z in cache.hidden_pre) > 1e-3
        probe = rng.normal(size=(2, 8))
        gw, gb = backward(p, cache, probe)
        fd_w, fd_b = finite_diff_param_grads(p, x, probe)
        assert max_rel_err(gw, fd_w) < 1e-4
        assert max_rel_err(gb, fd_b) < 1e-4

    def test_clipped_coordinates_get_zero_gradient(self):
        p = mlp_init(MlpConfig((1, 4, 1), output_clip=0.01, init_seed=3))
        x = np.linspace(-50, 50, 41)[None, :]
        out, cache = forward(p, x)
        saturated = np.abs(out) >= 0.01
        assert saturated.any()
        gw, gb = backward(p, cache, np.ones_like(out))
        p2 = mlp_init(MlpConfig((1, 4, 1), output_clip=0.01, init_seed=3))
        grad_masked = np.where(saturated, 0.0, 1.0)
        _, cache2 = forward(p2, x)
        gw2, gb2 = backward(p2, cache2, grad_masked)
        for a, b in zip(gw + gb, gw2 + gb2):
            np.testing.assert_allclose(a, b, atol=1e-12)


def scalar_dataset(n, seed, independent=False):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(1, n))
    y = rng.normal(size=(1, n)) if independent else x.copy()
    return PairedDataset(x=x, y=y)


class TestTraining:
    def test_perfect_dependence_reaches_first_component(self):
        data = scalar_dataset(512, seed=100)
        f_cfg = MlpConfig((1, 16, 1), activation="tanh", init_seed=1)
        g_cfg = MlpConfig((1, 16, 1), activation="tanh", init_seed=2)
        t_cfg = TrainConfig(epochs=300, optimizer="adam", lr=0.01, seed=3)
        f_p, g_p, history = train_ca_nn(data, f_cfg, g_cfg, t_cfg)
        assert history[-1].kyfan_term >= 0.95

    def test_training_reduces_loss(self):
        data = scalar_dataset(256, seed=200)
        f_cfg = MlpConfig((1, 8, 1), activation="tanh", init_seed=4)
        g_cfg = MlpConfig((1, 8, 1), activation="tanh", init_seed=5)
        t_cfg = TrainConfig(epochs=50, optimizer="gd", lr=0.05, seed=6)
        f_p, g_p, _ = train_ca_nn(data, f_cfg, g_cfg, t_cfg)
        initial = evaluate_loss(mlp_init(f_cfg), mlp_init(g_cfg), data.x, data.y)
        final = evaluate_loss(f_p, g_p, data.x, data.y)
        assert final.loss <= initial.loss

    def test_independent_data_small_correlations(self):
        data = scalar_dataset(10_000, seed=300, independent=True)
        f_cfg = MlpConfig((1, 8, 2), activation="tanh", init_seed=7)
        g_cfg = MlpConfig((1, 8, 2), activation="tanh", init_seed=8)
        t_cfg = TrainConfig(epochs=60, optimizer="adam", lr=0.005, seed=9)
        f_p, g_p, _ = train_ca_nn(data, f_cfg, g_cfg, t_cfg)
        from capic.whitening import apply_whitening, fit_whitening

        f_out, _ = forward(f_p, data.x)
        g_out, _ = forward(g_p, data.y)
        pf = apply_whitening(fit_whitening(f_out, g_out), f_out, g_out)
        assert np.all(np.abs(pf.pic_diagonal) <= 0.15)

    def test_determinism_identical_history(self):
        data = scalar_dataset(128, seed=400)
        f_cfg = MlpConfig((1, 8, 1), init_seed=10, activation="tanh")
        g_cfg = MlpConfig((1, 8, 1), init_seed=11, activation="tanh")
        t_cfg = TrainConfig(epochs=20, batch_size=32, optimizer="adam", lr=0.01, seed=12)
        run1 = train_ca_nn(data, f_cfg, g_cfg, t_cfg)
        run2 = train_ca_nn(data, f_cfg, g_cfg, t_cfg)
        assert [r.loss for r in run1[2]] == [r.loss for r in run2[2]]
        for a, b in zip(run1[0].weights, run2[0].weights):
            assert np.array_equal(a, b)

    def test_divergence_raises_with_epoch(self):
        data = scalar_dataset(64, seed=500)
        f_cfg = MlpConfig((1, 8, 1), init_seed=13)
        g_cfg = MlpConfig((1, 8, 1), init_seed=14)
        t_cfg = TrainConfig(epochs=200, optimizer="gd", lr=1e9, seed=15)
        with pytest.raises(TrainingDivergedError) as err:
            train_ca_nn(data, f_cfg, g_cfg, t_cfg)
        assert err.value.epoch >= 0

    def test_output_width_mismatch_rejected(self):
        data = scalar_dataset(64, seed=600)
        with pytest.raises(ContractViolationError):
            train_ca_nn(
                data,
                MlpConfig((1, 8, 2)),
                MlpConfig((1, 8, 3)),
                TrainConfig(epochs=1),
            )
