"""Tests for src.core.autograd: ops, backward, finite-difference agreement."""
import numpy as np
import pytest

from src.core.autograd import Graph, Tensor
from src.core.errors import (
    CoefficientError, DimensionError, EmptySequenceError, GraphReuseError, LabelError, RankError,
)
from src.core.model import EncoderConfig, init_model_state
from src.core.roles import parse_roles
from src.core.training import TaskConfig, compute_losses, reversal_free_gradients
from tests.conftest import make_samples

H = 1e-5


def analytic(build, arrays):
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    g = Graph()
    g.backward(build(g, tensors))
    return [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]


def numeric(build, arrays):
    grads = []
    for k, a in enumerate(arrays):
        grad = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            vals = []
            for sign in (1.0, -1.0):
                shifted = [x.copy() for x in arrays]
                shifted[k][idx] += sign * H
                vals.append(build(Graph(), [Tensor(x) for x in shifted]).item())
            grad[idx] = (vals[0] - vals[1]) / (2 * H)
        grads.append(grad)
    return grads


def rel_error(a, n):
    a, n = np.concatenate([x.ravel() for x in a]), np.concatenate([x.ravel() for x in n])
    scale = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
    return np.linalg.norm(a - n) / scale


def weighted_sum(g, y, weights):
    return g.sum(g.mul(y, Tensor(weights)))


# ---------------------------------------------------------------------------
# Forward examples
# ---------------------------------------------------------------------------

class TestMatmul:
    def test_identity(self):
        out = Graph().matmul(Tensor([[1, 0], [0, 1]]), Tensor([[5, 6], [7, 8]]))
        np.testing.assert_array_equal(out.data, [[5, 6], [7, 8]])

    def test_hand_product(self):
        assert Graph().matmul(Tensor([[1, 2]]), Tensor([[3], [4]])).item() == 11.0

    def test_backward_of_sum(self):
        a, b = Tensor([[1.0, 2.0]], requires_grad=True), Tensor([[3.0], [4.0]])
        g = Graph()
        g.backward(g.sum(g.matmul(a, b)))
        np.testing.assert_array_equal(a.grad, [[3.0, 4.0]])

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
            Graph().matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestMeanAxis:
    def test_single_frame(self):
        np.testing.assert_array_equal(Graph().mean_axis(Tensor([[4, 7]])).data, [4, 7])

    def test_average(self):
        np.testing.assert_array_equal(Graph().mean_axis(Tensor([[1, 3], [3, 1]])).data, [2, 2])

    def test_backward_distributes_one_over_t(self):
        x = Tensor(np.ones((4, 2)), requires_grad=True)
        g = Graph()
        g.backward(g.sum(g.mean_axis(x)))
        np.testing.assert_array_equal(x.grad, np.full((4, 2), 0.25))

    def test_empty_sequence(self):
        with pytest.raises(EmptySequenceError):
            Graph().mean_axis(Tensor(np.zeros((0, 2))))


class TestMeanSegments:
    def test_pools_each_block(self):
        x = Tensor([[1.0, 2.0], [3.0, 4.0], [10.0, 20.0]])
        np.testing.assert_array_equal(Graph().mean_segments(x, [2, 1]).data, [[2.0, 3.0], [10.0, 20.0]])

    def test_lengths_must_cover_rows(self):
        with pytest.raises(DimensionError):
            Graph().mean_segments(Tensor(np.ones((3, 2))), [1, 1])

    def test_zero_length_segment(self):
        with pytest.raises(EmptySequenceError):
            Graph().mean_segments(Tensor(np.ones((2, 2))), [2, 0])


class TestLogSoftmaxNll:
    def test_uniform_logits(self):
        assert Graph().log_softmax_nll(Tensor([[0.0, 0.0]]), [0]).item() == pytest.approx(np.log(2), abs=1e-12)

    def test_large_logits_stay_finite(self):
        loss = Graph().log_softmax_nll(Tensor([[1000.0, 0.0]]), [0]).item()
        assert np.isfinite(loss) and loss == pytest.approx(0.0, abs=1e-12)

    def test_gradient_is_softmax_minus_onehot(self):
        z = Tensor([[1.0, 2.0]], requires_grad=True)
        g = Graph()
        g.backward(g.log_softmax_nll(z, [1]))
        p = np.exp([1.0, 2.0]) / np.exp([1.0, 2.0]).sum()
        np.testing.assert_allclose(z.grad, [[p[0], p[1] - 1.0]], atol=1e-15)

    def test_label_out_of_range_reports_index(self):
        with pytest.raises(LabelError) as info:
            Graph().log_softmax_nll(Tensor(np.zeros((3, 2))), [0, 1, 2])
        assert info.value.index == 2


class TestGradReverse:
    def test_forward_identity(self):
        x = Tensor([1.5, -2.0])
        out = Graph().grad_reverse(x, 0.7)
        assert np.array_equal(out.data, x.data)

    def test_backward_scales_by_minus_gamma(self):
        x = Tensor([1.0, 1.0], requires_grad=True)
        g = Graph()
        g.backward(weighted_sum(g, g.grad_reverse(x, 0.5), np.array([2.0, 4.0])))
        np.testing.assert_array_equal(x.grad, [-1.0, -2.0])

    def test_zero_gamma_disconnects(self, rng):
        x = Tensor(rng.normal(size=5), requires_grad=True)
        g = Graph()
        g.backward(weighted_sum(g, g.grad_reverse(x, 0.0), rng.normal(size=5)))
        assert np.all(x.grad == 0.0)

    def test_exact_product(self, rng):
        for _ in range(20):
            up, gamma = rng.normal(size=6), float(rng.uniform(0, 5))
            x = Tensor(np.zeros(6), requires_grad=True)
            g = Graph()
            g.backward(weighted_sum(g, g.grad_reverse(x, gamma), up))
            assert np.array_equal(x.grad, up * -gamma)

    def test_negative_gamma(self):
        with pytest.raises(CoefficientError):
            Graph().grad_reverse(Tensor([1.0]), -0.1)


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------

class TestBackward:
    def test_linear(self):
        x = Tensor([3.0, 5.0], requires_grad=True)
        g = Graph()
        g.backward(g.sum(x))
        np.testing.assert_array_equal(x.grad, [1.0, 1.0])

    def test_square(self):
        x = Tensor([3.0], requires_grad=True)
        g = Graph()
        g.backward(g.sum(g.mul(x, x)))
        np.testing.assert_array_equal(x.grad, [6.0])

    def test_non_scalar_loss(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        g = Graph()
        with pytest.raises(RankError):
            g.backward(g.tanh(x))

    def test_second_backward_rejected(self):
        x = Tensor([1.0], requires_grad=True)
        g = Graph()
        loss = g.sum(x)
        g.backward(loss)
        with pytest.raises(GraphReuseError):
            g.backward(loss)

    def test_spent_graph_rejects_new_ops(self):
        x = Tensor([1.0], requires_grad=True)
        g = Graph()
        g.backward(g.sum(x))
        with pytest.raises(GraphReuseError):
            g.tanh(x)

    def test_foreign_loss(self):
        x = Tensor([1.0], requires_grad=True)
        loss = Graph().sum(x)
        with pytest.raises(GraphReuseError):
            Graph().backward(loss)

    def test_accumulation_is_sum_of_branches(self, rng):
        a, b, x0 = rng.normal(size=4), rng.normal(size=4), rng.normal(size=4)
        isolated = []
        for w in (a, b):
            x = Tensor(x0, requires_grad=True)
            g = Graph()
            g.backward(weighted_sum(g, x, w))
            isolated.append(x.grad)
        x = Tensor(x0, requires_grad=True)
        g = Graph()
        g.backward(g.add(weighted_sum(g, x, a), weighted_sum(g, x, b)))
        assert np.array_equal(x.grad, isolated[0] + isolated[1])

    def test_accumulation_through_shared_node(self, rng):
        a, b, x0 = rng.normal(size=4), rng.normal(size=4), rng.normal(size=4)
        x = Tensor(x0, requires_grad=True)
        g = Graph()
        y = g.tanh(x)
        g.backward(g.add(weighted_sum(g, y, a), weighted_sum(g, y, b)))
        np.testing.assert_allclose(x.grad, (a + b) * (1 - np.tanh(x0) ** 2), rtol=1e-14, atol=1e-15)

    def test_deterministic(self, rng):
        w0, x0 = rng.normal(size=(3, 2)), rng.normal(size=(4, 3))
        grads = []
        for _ in range(2):
            w = Tensor(w0, requires_grad=True)
            g = Graph()
            g.backward(g.log_softmax_nll(g.tanh(g.matmul(Tensor(x0), w)), [0, 1, 1, 0]))
            grads.append(w.grad)
        assert np.array_equal(grads[0], grads[1])


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------

def _cases(rng):
    """(name, build, arrays) for random small instances of every primitive."""
    u = lambda *shape: rng.uniform(-2, 2, size=shape)
    cases = []
    for _ in range(12):
        m, k, n = (int(v) for v in rng.integers(1, 9, size=3))
        r = u(m, n)
        cases.append(("matmul", lambda g, t, r=r: weighted_sum(g, g.matmul(t[0], t[1]), r), [u(m, k), u(k, n)]))
        r = u(m, n)
        cases.append(("add_bias", lambda g, t, r=r: weighted_sum(g, g.add_bias(t[0], t[1]), r), [u(m, n), u(n)]))
        r = u(m, k)
        cases.append(("add", lambda g, t, r=r: weighted_sum(g, g.add(t[0], t[1]), r), [u(m, k), u(m, k)]))
        cases.append(("mul", lambda g, t, r=r: weighted_sum(g, g.mul(t[0], t[1]), r), [u(m, k), u(m, k)]))
        c = float(rng.uniform(-3, 3))
        cases.append(("scale", lambda g, t, r=r, c=c: weighted_sum(g, g.scale(t[0], c), r), [u(m, k)]))
        cases.append(("tanh", lambda g, t, r=r: weighted_sum(g, g.tanh(t[0]), r), [u(m, k)]))
        cases.append(("reshape", lambda g, t, r=r, m=m, k=k: weighted_sum(
            g, g.reshape(g.reshape(t[0], m * k), m, k), r), [u(m, k)]))
        r = u(k)
        cases.append(("mean_axis", lambda g, t, r=r: weighted_sum(g, g.mean_axis(t[0]), r), [u(m, k)]))
        lens = [int(v) for v in rng.integers(1, 4, size=int(rng.integers(1, 4)))]
        r = u(len(lens), k)
        cases.append(("mean_segments", lambda g, t, r=r, lens=lens: weighted_sum(
            g, g.mean_segments(t[0], lens), r), [u(sum(lens), k)]))
        labels = [int(v) for v in rng.integers(0, n, size=m)]
        cases.append(("log_softmax_nll", lambda g, t, y=labels: g.log_softmax_nll(t[0], y), [u(m, n)]))
    return cases


class TestFiniteDifferences:
    def test_every_primitive(self, rng):
        cases = _cases(rng)
        assert len(cases) >= 100
        for name, build, arrays in cases:
            err = rel_error(analytic(build, arrays), numeric(build, arrays))
            assert err < 1e-6, f"{name}: relative error {err:.2e}"

    def test_composed_model_objective(self, rng):
        """Full model wiring: encoder, pooling and every head, weighted by gamma."""
        rows = ["↑ ↓ ↓", "↓ ↑ ✗", "✗ ↓ ↑", "↑ ↓ ✗", "↓ ✗ ↑"]
        for k in range(100):
            roles = parse_roles(rows[k % len(rows)])
            state = init_model_state(EncoderConfig(2, 3, 1 + k % 2), roles, 0.0, seed=k)
            state = state.with_gamma({a: float(rng.uniform(0.0, 2.0)) for a in state.gamma})
            config = TaskConfig(roles)
            batch = make_samples(rng, int(rng.integers(2, 5)), 2, t_max=3)

            def objective(arrays):
                return compute_losses(batch, state.with_arrays(arrays), config).combined

            value, grads = reversal_free_gradients(batch, state, config, sign=+1.0)
            base = [a.copy() for a in state.arrays()]
            assert value == pytest.approx(objective(base), abs=1e-12)
            approx = []
            for j, a in enumerate(base):
                grad = np.zeros_like(a)
                for idx in np.ndindex(a.shape):
                    vals = []
                    for sign in (1.0, -1.0):
                        shifted = [x.copy() for x in base]
                        shifted[j][idx] += sign * H
                        vals.append(objective(shifted))
                    grad[idx] = (vals[0] - vals[1]) / (2 * H)
                approx.append(grad)
            assert rel_error(grads, approx) < 1e-6
