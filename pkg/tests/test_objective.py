import numpy as np
import pytest

from capic.errors import ContractViolationError, SingularCovarianceError
from capic.objective import (
    BatchOutputs,
    empirical_covariances,
    pic_loss,
    pic_loss_grad,
)


def central_diff_grads(f_tilde, g_tilde, eps, exact, step=1e-5):
    """Independent oracle: central finite differences of the loss value."""

    def value(f, g):
        return pic_loss(BatchOutputs(f, g), eps=eps, exact=exact).loss

    grads = []
    for which, base in (("f", f_tilde), ("g", g_tilde)):
        grad = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            bumped = base.copy()
            bumped[idx] += step
            up = value(bumped if which == "f" else f_tilde,
                       bumped if which == "g" else g_tilde)
            bumped[idx] -= 2 * step
            down = value(bumped if which == "f" else f_tilde,
                         bumped if which == "g" else g_tilde)
            grad[idx] = (up - down) / (2 * step)
        grads.append(grad)
    return grads


def max_rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-6)))


def whiten_rows(m):
    centered = m - m.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / m.shape[1]
    w, v = np.linalg.eigh(cov)
    return (v * w ** -0.5) @ v.T @ centered


class TestEmpiricalCovariances:
    def test_identity_batch(self):
        b = BatchOutputs(np.eye(3), np.eye(3))
        c_f, c_fg, g_energy = empirical_covariances(b)
        np.testing.assert_allclose(c_f, np.eye(3) / 3, atol=1e-15)
        np.testing.assert_allclose(c_fg, np.eye(3) / 3, atol=1e-15)
        assert g_energy == pytest.approx(1.0)

    def test_zero_g(self):
        b = BatchOutputs(np.ones((2, 4)), np.zeros((2, 4)))
        _, c_fg, g_energy = empirical_covariances(b)
        np.testing.assert_allclose(c_fg, 0.0)
        assert g_energy == 0.0

    def test_matches_per_sample_loop(self):
        rng = np.random.default_rng(13)
        f = rng.normal(size=(3, 100))
        g = rng.normal(size=(3, 100))
        c_f, c_fg, g_energy = empirical_covariances(BatchOutputs(f, g))
        c_f_loop = np.zeros((3, 3))
        c_fg_loop = np.zeros((3, 3))
        energy_loop = 0.0
        for k in range(100):
            c_f_loop += np.outer(f[:, k], f[:, k])
            c_fg_loop += np.outer(f[:, k], g[:, k])
            energy_loop += float(g[:, k] @ g[:, k])
        np.testing.assert_allclose(c_f, c_f_loop / 100, atol=1e-12)
        np.testing.assert_allclose(c_fg, c_fg_loop / 100, atol=1e-12)
        assert g_energy == pytest.approx(energy_loop / 100, abs=1e-12)

    def test_sample_count_mismatch_rejected(self):
        with pytest.raises(ContractViolationError):
            BatchOutputs(np.ones((2, 5)), np.ones((2, 4)))

    def test_requires_n_at_least_d(self):
        with pytest.raises(ContractViolationError):
            BatchOutputs(np.ones((4, 3)), np.ones((4, 3)))


class TestPicLoss:
    def test_perfectly_matched_whitened_outputs(self):
        rng = np.random.default_rng(29)
        f = whiten_rows(rng.normal(size=(3, 200)))
        rep = pic_loss(BatchOutputs(f, f), eps=0.0)
        assert rep.kyfan_term == pytest.approx(3.0, abs=1e-9)
        assert rep.g_energy == pytest.approx(3.0, abs=1e-9)
        assert rep.loss == pytest.approx(-3.0, abs=1e-9)

    def test_independent_batches_near_zero(self):
        rng = np.random.default_rng(31)
        f = rng.normal(size=(3, 10_000))
        g = rng.normal(size=(3, 10_000))
        rep = pic_loss(BatchOutputs(f, g), eps=0.0)
        assert rep.kyfan_term < 0.1

    def test_loss_identity_holds_exactly(self):
        rng = np.random.default_rng(37)
        rep = pic_loss(BatchOutputs(rng.normal(size=(2, 40)), rng.normal(size=(2, 40))))
        assert rep.loss == -2.0 * rep.kyfan_term + rep.g_energy
        assert np.all(np.isfinite(rep.grad_f))
        assert np.all(np.isfinite(rep.grad_g))

    def test_exact_route_matches_surrogate(self):
        rng = np.random.default_rng(41)
        f = rng.normal(size=(3, 60))
        g = rng.normal(size=(3, 60))
        for eps in (0.0, 1e-3):
            a = pic_loss(BatchOutputs(f, g), eps=eps, exact=False)
            b = pic_loss(BatchOutputs(f, g), eps=eps, exact=True)
            assert a.kyfan_term == pytest.approx(b.kyfan_term, abs=1e-9)
            np.testing.assert_allclose(a.grad_f, b.grad_f, atol=1e-8)
            np.testing.assert_allclose(a.grad_g, b.grad_g, atol=1e-8)

    def test_singular_covariance_needs_eps(self):
        f = np.zeros((2, 10))
        f[0] = np.linspace(-1, 1, 10)  # second row constant zero: C_f singular
        g = np.random.default_rng(1).normal(size=(2, 10))
        with pytest.raises(SingularCovarianceError):
            pic_loss(BatchOutputs(f, g), eps=0.0)
        rep = pic_loss(BatchOutputs(f, g), eps=1e-3)
        assert np.isfinite(rep.loss)

    def test_scale_balance_at_eps_zero(self):
        rng = np.random.default_rng(43)
        f = rng.normal(size=(3, 80))
        g = rng.normal(size=(3, 80))
        base = pic_loss(BatchOutputs(f, g), eps=0.0).kyfan_term
        scaled = pic_loss(BatchOutputs(7.3 * f, g), eps=0.0).kyfan_term
        assert scaled == pytest.approx(base, abs=1e-8)

    def test_lower_bound_for_whitened_g(self):
        rng = np.random.default_rng(47)
        for trial in range(5):
            d = int(rng.integers(2, 5))
            f = rng.normal(size=(d, 300))
            g = whiten_rows(rng.normal(size=(d, 300)))
            rep = pic_loss(BatchOutputs(f, g), eps=0.0)
            assert rep.kyfan_term >= 0.0
            assert rep.g_energy >= 0.0
            assert rep.loss >= -d - 1e-6


class TestPicLossGrad:
    def test_g_energy_term_alone(self):
        # rows of g orthogonal to rows of f: C_fg = 0 so only the energy
        # term contributes, giving grad_g = (2/n) g exactly
        f = np.array([[1.0, 1.0, -1.0, -1.0], [1.0, -1.0, -1.0, 1.0]])
        g = np.array([[1.0, -1.0, 1.0, -1.0], [1.0, 1.0, 1.0, 1.0]])
        grad_f, grad_g = pic_loss_grad(BatchOutputs(f, g), eps=1e-3)
        np.testing.assert_allclose(grad_g, 2.0 / 4.0 * g, atol=1e-12)
        np.testing.assert_allclose(grad_f, 0.0, atol=1e-12)

    @pytest.mark.parametrize("eps,exact", [(1e-3, False), (0.0, False), (0.0, True), (1e-3, True)])
    def test_full_loss_small_batch_finite_differences(self, eps, exact):
        rng = np.random.default_rng(53)
        f = rng.normal(size=(2, 50))
        g = 0.4 * f + rng.normal(size=(2, 50))
        grad_f, grad_g = pic_loss_grad(BatchOutputs(f, g), eps=eps, exact=exact)
        fd_f, fd_g = central_diff_grads(f, g, eps, exact)
        assert max_rel_err(grad_f, fd_f) < 1e-4
        assert max_rel_err(grad_g, fd_g) < 1e-4

    def test_diagonal_structured_batch_finite_differences(self):
        rng = np.random.default_rng(59)
        f = whiten_rows(rng.normal(size=(3, 90)))
        g = np.diag([1.5, 0.9, 0.3]) @ f + 0.1 * rng.normal(size=(3, 90))
        grad_f, grad_g = pic_loss_grad(BatchOutputs(f, g), eps=0.0)
        fd_f, fd_g = central_diff_grads(f, g, 0.0, False)
        assert max_rel_err(grad_f, fd_f) < 1e-4
        assert max_rel_err(grad_g, fd_g) < 1e-4
