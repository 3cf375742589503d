import numpy as np
import pytest

from lcw.autodiff import (AdamState, BatchNormState, DiffValue, adam_step,
                          batchnorm, matmul, pairwise_sq_dists, take_rows,
                          zero_grads)
from lcw.errors import DomainError, ShapeError

from conftest import finite_diff_grad, max_rel_err


class TestMatmul:
    def test_identity(self):
        m = np.array([[2.0, -1.0], [0.5, 3.0]])
        out = matmul(DiffValue(np.eye(2)), DiffValue(m))
        np.testing.assert_array_equal(out.value, m)

    def test_hand_product(self):
        a = DiffValue([[1.0, 2.0], [3.0, 4.0]])
        b = DiffValue([[5.0], [6.0]])
        np.testing.assert_array_equal(matmul(a, b).value, [[17.0], [39.0]])

    def test_grad_matches_finite_differences(self, rng):
        a0 = rng.standard_normal((3, 4))
        b0 = rng.standard_normal((4, 2))
        a = DiffValue(a0)
        b = DiffValue(b0)
        matmul(a, b).sum().backward()
        fd_a = finite_diff_grad(lambda v: float((v @ b0).sum()), a0)
        fd_b = finite_diff_grad(lambda v: float((a0 @ v).sum()), b0)
        assert max_rel_err(a.grad, fd_a) < 1e-6
        assert max_rel_err(b.grad, fd_b) < 1e-6

    def test_dim_mismatch(self):
        with pytest.raises(ShapeError):
            matmul(DiffValue(np.ones((2, 3))), DiffValue(np.ones((2, 3))))


class TestElementwise:
    def test_relu_values(self):
        out = DiffValue([-1.0, 0.0, 2.0]).relu()
        np.testing.assert_array_equal(out.value, [0.0, 0.0, 2.0])

    def test_relu_subgradient_zero_at_zero(self):
        x = DiffValue([-1.0, 0.0, 2.0])
        x.relu().sum().backward()
        np.testing.assert_array_equal(x.grad, [0.0, 0.0, 1.0])

    def test_sigmoid_at_zero(self):
        assert float(DiffValue(0.0).sigmoid().value) == 0.5

    def test_sigmoid_extreme_inputs_stable(self):
        out = DiffValue([-800.0, 800.0]).sigmoid()
        assert np.all(np.isfinite(out.value))
        np.testing.assert_allclose(out.value, [0.0, 1.0], atol=1e-12)

    @pytest.mark.parametrize("op", ["relu", "sigmoid", "tanh", "sqrt",
                                    "reciprocal", "log", "square"])
    def test_unary_grads_match_finite_differences(self, op, rng):
        x0 = rng.uniform(0.3, 2.0, size=(4, 3))  # positive: valid for all ops
        x = DiffValue(x0)
        getattr(x, op)().sum().backward()
        fd = finite_diff_grad(lambda v: float(getattr(DiffValue(v), op)().sum().value), x0)
        assert max_rel_err(x.grad, fd) < 1e-6

    def test_tanh_grad_at_point(self):
        x = DiffValue(0.3)
        x.tanh().backward()
        fd = finite_diff_grad(lambda v: float(np.tanh(v)), np.asarray(0.3))
        assert max_rel_err(x.grad, fd) < 1e-6

    def test_log_domain_error(self):
        with pytest.raises(DomainError):
            DiffValue([-1.0]).log()
        with pytest.raises(DomainError):
            DiffValue([0.0]).log()

    def test_sqrt_domain_error(self):
        with pytest.raises(DomainError):
            DiffValue([-1e-9]).sqrt()

    def test_scalar_broadcast(self):
        x = DiffValue(np.ones((2, 3)))
        out = x * 2.0 + 1.0
        np.testing.assert_array_equal(out.value, np.full((2, 3), 3.0))
        out.sum().backward()
        np.testing.assert_array_equal(x.grad, np.full((2, 3), 2.0))

    def test_rowvector_broadcast(self, rng):
        x0 = rng.standard_normal((4, 3))
        b0 = rng.standard_normal(3)
        x, b = DiffValue(x0), DiffValue(b0)
        (x + b).square().sum().backward()
        fd_b = finite_diff_grad(lambda v: float(((x0 + v) ** 2).sum()), b0)
        assert max_rel_err(b.grad, fd_b) < 1e-6

    def test_unsupported_broadcast(self):
        with pytest.raises(ShapeError):
            DiffValue(np.ones((4, 3))) + DiffValue(np.ones((4, 1)))

    def test_sub_and_mul(self, rng):
        a0, b0 = rng.standard_normal(5), rng.standard_normal(5)
        a, b = DiffValue(a0), DiffValue(b0)
        ((a - b) * b).sum().backward()
        np.testing.assert_allclose(a.grad, b0, rtol=1e-12)
        np.testing.assert_allclose(b.grad, a0 - 2 * b0, rtol=1e-12)


class TestReduce:
    def test_mean_value(self):
        assert float(DiffValue([1.0, 2.0, 3.0]).mean().value) == 2.0

    def test_sum_of_zeros(self):
        assert float(DiffValue(np.zeros(7)).sum().value) == 0.0

    def test_mean_grad_is_one_over_n(self):
        x = DiffValue(np.arange(4.0))
        x.mean().backward()
        np.testing.assert_array_equal(x.grad, np.full(4, 0.25))

    def test_axis_reductions(self, rng):
        x0 = rng.standard_normal((3, 5))
        x = DiffValue(x0)
        out = x.sum(axis=1).mean()
        np.testing.assert_allclose(float(out.value), x0.sum(axis=1).mean(), rtol=1e-12)
        out.backward()
        np.testing.assert_allclose(x.grad, np.full_like(x0, 1.0 / 3.0), rtol=1e-12)

    def test_invalid_axis(self):
        with pytest.raises(ShapeError):
            DiffValue(np.ones(3)).sum(axis=2)


class TestPairwiseSqDists:
    def test_zero_diagonal(self, rng):
        x = DiffValue(rng.standard_normal((5, 3)))
        d = pairwise_sq_dists(x, x).value
        np.testing.assert_array_equal(np.diag(d), np.zeros(5))
        assert np.all(d >= 0)

    def test_hand_value(self):
        d = pairwise_sq_dists(DiffValue([[0.0, 0.0]]), DiffValue([[3.0, 4.0]]))
        np.testing.assert_array_equal(d.value, [[25.0]])

    def test_grad_matches_finite_differences(self, rng):
        a0 = rng.standard_normal((4, 3))
        b0 = rng.standard_normal((4, 3))
        a, b = DiffValue(a0), DiffValue(b0)
        # weighted sum to exercise off-diagonal gradient structure
        w = rng.standard_normal((4, 4))
        (pairwise_sq_dists(a, b) * w).sum().backward()

        def f_a(v):
            d = ((v[:, None, :] - b0[None, :, :]) ** 2).sum(axis=2)
            return float((d * w).sum())

        def f_b(v):
            d = ((a0[:, None, :] - v[None, :, :]) ** 2).sum(axis=2)
            return float((d * w).sum())

        assert max_rel_err(a.grad, finite_diff_grad(f_a, a0)) < 1e-5
        assert max_rel_err(b.grad, finite_diff_grad(f_b, b0)) < 1e-5

    def test_dim_mismatch(self):
        with pytest.raises(ShapeError):
            pairwise_sq_dists(DiffValue(np.ones((2, 3))), DiffValue(np.ones((2, 4))))


class TestBatchNorm:
    def test_constant_column_gives_shift(self):
        state = BatchNormState(2)
        state.beta.value = np.array([0.7, -0.3])
        x = DiffValue(np.full((6, 2), 5.0))
        out = batchnorm(x, state, "train")
        np.testing.assert_allclose(out.value, np.tile([0.7, -0.3], (6, 1)), atol=1e-12)

    def test_train_normalizes_to_unit_stats(self, rng):
        state = BatchNormState(3)
        x = DiffValue(rng.standard_normal((64, 3)) * 4.0 + 2.0)
        out = batchnorm(x, state, "train")
        np.testing.assert_allclose(out.value.mean(axis=0), np.zeros(3), atol=1e-6)
        np.testing.assert_allclose(out.value.var(axis=0), np.ones(3), atol=1e-4)

    def test_grads_match_finite_differences(self, rng):
        x0 = rng.standard_normal((8, 3))

        def run(xv, gv, bv):
            state = BatchNormState(3)
            state.gamma.value = gv.copy()
            state.beta.value = bv.copy()
            return float(batchnorm(DiffValue(xv), state, "train").square().sum().value)

        g0 = rng.uniform(0.5, 1.5, 3)
        b0 = rng.standard_normal(3)
        state = BatchNormState(3)
        state.gamma.value = g0.copy()
        state.beta.value = b0.copy()
        x = DiffValue(x0)
        batchnorm(x, state, "train").square().sum().backward()
        assert max_rel_err(x.grad, finite_diff_grad(lambda v: run(v, g0, b0), x0)) < 1e-4
        assert max_rel_err(state.gamma.grad,
                           finite_diff_grad(lambda v: run(x0, v, b0), g0)) < 1e-4
        assert max_rel_err(state.beta.grad,
                           finite_diff_grad(lambda v: run(x0, g0, v), b0)) < 1e-4

    def test_train_needs_two_rows(self):
        with pytest.raises(ShapeError):
            batchnorm(DiffValue(np.ones((1, 2))), BatchNormState(2), "train")

    def test_eval_uses_running_stats(self, rng):
        state = BatchNormState(2)
        x = rng.standard_normal((32, 2)) * 3.0 + 1.0
        for _ in range(200):
            batchnorm(DiffValue(x), state, "train")
        out = batchnorm(DiffValue(x[:1]), state, "eval").value
        expect = (x[:1] - x.mean(axis=0)) / np.sqrt(x.var(axis=0) + state.eps)
        np.testing.assert_allclose(out, expect, atol=1e-3)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            batchnorm(DiffValue(np.ones((4, 2))), BatchNormState(2), "predict")


class TestBackward:
    def test_sum_gives_ones(self):
        x = DiffValue(np.arange(5.0))
        x.sum().backward()
        np.testing.assert_array_equal(x.grad, np.ones(5))

    def test_sum_of_squares(self):
        x = DiffValue([1.0, 2.0])
        x.square().sum().backward()
        np.testing.assert_array_equal(x.grad, [2.0, 4.0])

    def test_diamond_graph_sums_contributions(self):
        # loss = sum(x^2 + 3x): both consumers of x must contribute
        x = DiffValue([1.0, -2.0])
        (x.square() + x * 3.0).sum().backward()
        np.testing.assert_allclose(x.grad, 2.0 * x.value + 3.0, rtol=1e-12)

    def test_non_scalar_root_rejected(self):
        with pytest.raises(ShapeError):
            DiffValue([1.0, 2.0]).backward()

    def test_repeated_backward_accumulates(self):
        x = DiffValue([3.0])
        y = x.square().sum()
        y.backward()
        y.backward()
        np.testing.assert_allclose(x.grad, [12.0], rtol=1e-12)

    def test_forward_determinism(self, rng):
        x0 = rng.standard_normal((16, 8))
        w0 = rng.standard_normal((8, 4))

        def run():
            return matmul(DiffValue(x0), DiffValue(w0)).tanh().sum().value

        assert float(run()) == float(run())


class TestTakeRows:
    def test_sorts_and_routes_gradient(self, rng):
        x0 = rng.standard_normal((6, 3))
        x = DiffValue(x0)
        idx = np.argsort(x0, axis=0)
        out = take_rows(x, idx)
        np.testing.assert_array_equal(out.value, np.sort(x0, axis=0))
        (out * np.arange(18.0).reshape(6, 3)).sum().backward()
        w = np.zeros_like(x0)
        np.put_along_axis(w, idx, np.arange(18.0).reshape(6, 3), axis=0)
        np.testing.assert_array_equal(x.grad, w)


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        p = DiffValue([1.0, -2.0])
        state = AdamState([p])
        adam_step([p], [np.zeros(2)], state, lr=0.1)
        np.testing.assert_array_equal(p.value, [1.0, -2.0])

    def test_first_step_moves_by_lr_times_sign(self):
        p = DiffValue([0.0, 0.0])
        state = AdamState([p])
        adam_step([p], [np.array([0.3, -7.0])], state, lr=0.05)
        np.testing.assert_allclose(p.value, [-0.05, 0.05], rtol=1e-6)

    def test_scalar_quadratic_converges(self):
        w = DiffValue([0.0])
        state = AdamState([w])
        for _ in range(200):
            zero_grads([w])
            loss = (w - 3.0).square().sum()
            loss.backward()
            adam_step([w], [w.grad], state, lr=0.1)
        assert abs(float(w.value[0]) - 3.0) < 0.1

    def test_length_mismatch(self):
        p = DiffValue([1.0])
        state = AdamState([p])
        with pytest.raises(ShapeError):
            adam_step([p, p], [p.grad, p.grad], state, lr=0.1)
