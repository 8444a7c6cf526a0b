import numpy as np
import pytest

from ciln.train.tensor import Tensor, backward, reshape, linear, add, scale
from ciln.train.optimizer import AdamState, adam_step, Adam
from ciln.util.utils import Error

def test_first_adam_step_moves_by_learning_rate():
    p = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    p.grad = np.array([0.5, -4.0, 1e-3])
    state = AdamState(lr=0.1)
    adam_step([p], state)
    # bias-corrected first step is lr * g / (|g| + eps)
    np.testing.assert_allclose(p.data, [0.9, -1.9, 2.9], atol=1e-5)
    assert state.step_count == 1

def test_adam_step_matches_reference_formula():
    rng = np.random.default_rng(0)
    p = Tensor(rng.standard_normal(4), requires_grad=True)
    state = AdamState(lr=0.01, beta1=0.8, beta2=0.9, epsilon=1e-8)
    expected = p.data.copy()
    m = np.zeros(4)
    v = np.zeros(4)
    for t in range(1, 4):
        g = rng.standard_normal(4)
        p.grad = g.copy()
        adam_step([p], state)
        m = 0.8 * m + 0.2 * g
        v = 0.9 * v + 0.1 * g * g
        expected -= 0.01 * (m / (1 - 0.8 ** t)) / (np.sqrt(v / (1 - 0.9 ** t)) + 1e-8)
        np.testing.assert_allclose(p.data, expected, rtol=1e-10)

def test_adam_requires_gradients():
    p = Tensor(np.zeros(2), requires_grad=True, name='weight')
    p.grad = None
    with pytest.raises(Error, match='weight'):
        adam_step([p], AdamState())

def test_zero_gradients_leave_parameters_unchanged():
    rng = np.random.default_rng(3)
    p = Tensor(rng.standard_normal(5), requires_grad=True)
    before = p.data.copy()
    np.testing.assert_array_equal(p.grad, np.zeros(5))
    state = AdamState(lr=0.1)
    for _ in range(3):
        adam_step([p], state)
    np.testing.assert_array_equal(p.data, before)
    assert state.step_count == 3

def test_identical_runs_are_bit_identical():
    def run():
        rng = np.random.default_rng(11)
        p = Tensor(rng.standard_normal((3, 2)), requires_grad=True)
        state = AdamState(lr=0.05)
        for _ in range(4):
            p.grad = rng.standard_normal((3, 2))
            adam_step([p], state)
        return p.data
    assert run().tobytes() == run().tobytes()

def test_adam_state_must_match_parameters():
    a = Tensor(np.zeros(2), requires_grad=True)
    a.grad = np.ones(2)
    state = AdamState()
    adam_step([a], state)
    b = Tensor(np.zeros(3), requires_grad=True)
    b.grad = np.ones(3)
    with pytest.raises(Error):
        adam_step([b], state)

def test_adam_minimizes_a_quadratic():
    target = np.array([0.5, -1.5])
    x = Tensor(np.zeros(2), requires_grad=True)
    opt = Adam([x], learning_rate=0.05)
    for _ in range(500):
        opt.zero_grad()
        residual = add(x, Tensor(-target))
        loss = reshape(linear(reshape(residual, (1, 2)), Tensor(residual.data.reshape(1, 2))), ())
        backward(scale(loss, 1.0))
        opt.step()
    np.testing.assert_allclose(x.data, target, atol=1e-2)

def test_adam_save_and_load(tmp_path):
    p = Tensor(np.ones(3), requires_grad=True)
    p.grad = np.array([1.0, 2.0, 3.0])
    opt = Adam([p], learning_rate=0.01)
    opt.step()
    fn = str(tmp_path / 'opt.algo')
    opt.save(fn)
    other = Adam([Tensor(np.ones(3), requires_grad=True)])
    assert other.load(str(tmp_path / 'opt'))
    assert other.state.step_count == 1
    np.testing.assert_array_equal(other.state.m[0], opt.state.m[0])
    mismatched = Adam([Tensor(np.ones(4), requires_grad=True)])
    assert not mismatched.load(fn)
    assert not mismatched.load(str(tmp_path / 'missing.algo'))

def test_set_learning_rate():
    opt = Adam([Tensor(np.ones(1), requires_grad=True)], learning_rate=0.1)
    opt.set_learning_rate(0.05)
    assert opt.state.lr == 0.05
    opt.reset()
    assert opt.state.lr == 0.1
    assert opt.state.step_count == 0
