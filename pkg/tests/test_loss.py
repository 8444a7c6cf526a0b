import numpy as np
import pytest

from ciln.train.tensor import Tensor, backward, l1_mean
from ciln.train.loss import epi_gradient_loss, combined_loss
from ciln.util.utils import ShapeError
from conftest import numerical_gradient, relative_error

def toy():
    pred = np.array([[0.0, 1.0, 3.0], [2.0, 2.0, 5.0]]).reshape(2, 1, 1, 3, 1)
    gt = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]).reshape(2, 1, 1, 3, 1)
    return pred, gt

def test_epi_loss_toy_value():
    pred, gt = toy()
    # x differences contribute 6/4, s differences 2/3
    assert epi_gradient_loss(pred, gt).item() == pytest.approx(13.0 / 12.0)

def test_epi_loss_is_zero_for_offsets(small_lf):
    assert epi_gradient_loss(small_lf.views, small_lf.views).item() == 0.0
    offset = small_lf.views + 0.25
    assert epi_gradient_loss(offset, small_lf.views).item() == pytest.approx(0.0, abs=1e-6)

def test_epi_loss_rejects_bad_shapes():
    with pytest.raises(ShapeError):
        epi_gradient_loss(np.zeros((2, 2, 2, 2, 3)), np.zeros((2, 2, 2, 3, 3)))
    with pytest.raises(ShapeError):
        epi_gradient_loss(np.zeros((2, 2, 3)), np.zeros((2, 2, 3)))
    with pytest.raises(ShapeError):
        epi_gradient_loss(np.zeros((1, 1, 1, 1, 3)), np.zeros((1, 1, 1, 1, 3)))

def test_epi_loss_gradients(rng):
    pred = Tensor(rng.standard_normal((3, 2, 4, 5, 3)), requires_grad=True)
    gt = rng.standard_normal((3, 2, 4, 5, 3))
    backward(epi_gradient_loss(pred, gt))
    numeric = numerical_gradient(lambda: epi_gradient_loss(pred.data, gt).item(), pred.data, h=1e-6)
    assert relative_error(pred.grad, numeric) < 1e-4

def test_combined_loss_weights_terms(rng):
    pred = rng.uniform(0, 1, (3, 3, 4, 4, 3))
    gt = rng.uniform(0, 1, (3, 3, 4, 4, 3))
    l1 = l1_mean(Tensor(pred), Tensor(gt)).item()
    epi = epi_gradient_loss(pred, gt).item()
    assert combined_loss(pred, gt, 0.0).item() == l1
    assert combined_loss(pred, gt, 1.0).item() == pytest.approx(l1 + epi)
    assert combined_loss(pred, gt, 2.5).item() == pytest.approx(l1 + 2.5 * epi)
    with pytest.raises(ValueError):
        combined_loss(pred, gt, -1.0)

def test_combined_loss_gradients(rng):
    pred = Tensor(rng.uniform(0, 1, (2, 3, 3, 3, 3)), requires_grad=True)
    gt = rng.uniform(0, 1, (2, 3, 3, 3, 3))
    backward(combined_loss(pred, gt, 1.0))
    numeric = numerical_gradient(lambda: combined_loss(pred.data, gt, 1.0).item(), pred.data, h=1e-6)
    assert relative_error(pred.grad, numeric) < 1e-4

@pytest.mark.parametrize('lambda_epi', [0.0, 0.5, 2.0])
def test_combined_loss_is_symmetric(rng, lambda_epi):
    pred = rng.uniform(0, 1, (2, 3, 5, 4, 3))
    gt = rng.uniform(0, 1, (2, 3, 5, 4, 3))
    assert combined_loss(pred, gt, lambda_epi).item() == pytest.approx(combined_loss(gt, pred, lambda_epi).item(), rel=1e-12)

@pytest.mark.parametrize('offset', [-0.3, 0.125, 3.0])
def test_epi_loss_ignores_shared_offset(rng, offset):
    pred = rng.uniform(0, 1, (3, 2, 4, 5, 3))
    gt = rng.uniform(0, 1, (3, 2, 4, 5, 3))
    base = epi_gradient_loss(pred, gt).item()
    assert epi_gradient_loss(pred + offset, gt + offset).item() == pytest.approx(base, abs=1e-12)
