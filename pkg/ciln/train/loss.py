### Reconstruction losses on light fields laid out as [M(s), N(t), h(y), w(x), 3]

from .tensor import as_tensor, add, scale, diff, l1_mean
from ..util.utils import ShapeError

# (EPI orientation, differenced axis): horizontal EPIs vary (t, x), vertical EPIs vary (s, y)
EPI_AXES = (('horizontal', 3), ('horizontal', 1), ('vertical', 2), ('vertical', 0))

def epi_gradient_loss(pred, gt):
    """Mean L1 distance between forward-difference gradients of predicted and true EPIs.
        Every axis with at least two entries contributes one term; the terms are averaged.
    """
    pred = as_tensor(pred)
    gt = as_tensor(gt)
    if pred.ndim != 5 or pred.shape != gt.shape:
        raise ShapeError("epi_gradient_loss: expected matching [M,N,h,w,c] arrays, got {} and {}".format(pred.shape, gt.shape))
    terms = [ l1_mean(diff(pred, axis), diff(gt, axis)) for _, axis in EPI_AXES if pred.shape[axis] >= 2 ]
    if not terms:
        raise ShapeError("epi_gradient_loss: no axis of {} has two entries to difference".format(pred.shape))
    total = terms[0]
    for term in terms[1:]:
        total = add(total, term)
    return scale(total, 1.0 / len(terms))

def combined_loss(pred, gt, lambda_epi=1.0):
    """l1_mean(pred, gt) + lambda_epi * epi_gradient_loss(pred, gt)"""
    if lambda_epi < 0:
        raise ValueError("lambda_epi must be non-negative, got {}".format(lambda_epi))
    loss = l1_mean(pred, gt)
    if lambda_epi == 0:
        return loss
    return add(loss, scale(epi_gradient_loss(pred, gt), lambda_epi))
