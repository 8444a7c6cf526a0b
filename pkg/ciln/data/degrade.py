### Degradations applied to input view stacks: bicubic downsampling and pixel drop

import logging
import numpy as np

from .lightfield import ViewStack
from ..util.rng import make_rng
from ..util.utils import DataError

MIN_EXTENT = 8
CUBIC_A = -0.5

def cubic_kernel(x, a=CUBIC_A):
    """Keys cubic convolution kernel; a=-0.5 is Catmull-Rom"""
    x = np.abs(np.asarray(x, dtype=np.float64))
    near = ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    far = ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))

def reflect_index(index, size):
    """Mirror indices into [0, size) without repeating the edge sample"""
    if size == 1:
        return np.zeros_like(index)
    period = 2 * (size - 1)
    index = np.abs(index) % period
    return np.where(index >= size, period - index, index)

def bicubic_matrix(source, target):
    """[target, source] resampling weights with half-pixel centres and reflect borders"""
    position = (np.arange(target) + 0.5) * source / float(target) - 0.5
    base = np.floor(position).astype(np.int64)
    rows = np.arange(target)
    matrix = np.zeros((target, source), dtype=np.float64)
    for offset in range(-1, 3):
        index = base + offset
        weight = cubic_kernel(position - index)
        np.add.at(matrix, (rows, reflect_index(index, source)), weight)
    return matrix

def downsampled_extent(extent, factor):
    return int(np.floor(extent * factor + 0.5))

def downsample_views(stack, factor):
    """Resamples every view of the stack by `factor` in (0,1] with a bicubic kernel.
        Values are clamped to [0,1]. A recorded mask is resampled with the same
        weights and thresholded at 0.5; masked pixels stay zero.
    """
    if not (0.0 < factor <= 1.0):
        raise ValueError("downsampling factor must lie in (0,1], got {}".format(factor))
    height = downsampled_extent(stack.height, factor)
    width = downsampled_extent(stack.width, factor)
    if height < MIN_EXTENT or width < MIN_EXTENT:
        raise DataError("downsampling {}x{} by {} gives {}x{}, below the minimum of {} pixels".format(
            stack.height, stack.width, factor, height, width, MIN_EXTENT))
    ry = bicubic_matrix(stack.height, height)
    rx = bicubic_matrix(stack.width, width)
    data = np.matmul(np.matmul(ry, stack.data.astype(np.float64)), rx.T)
    data = np.clip(data, 0.0, 1.0).astype(np.float32)
    mask = None
    if stack.mask is not None:
        mask = (np.matmul(np.matmul(ry, stack.mask.astype(np.float64)), rx.T) >= 0.5).astype(np.uint8)
        views = data.reshape(stack.v, stack.channels, height, width)
        data = np.where(mask[:, None].astype(bool), views, np.float32(0.0)).reshape(data.shape)
    logging.debug("downsampled stack {}x{} -> {}x{}".format(stack.height, stack.width, height, width))
    return ViewStack(data, stack.pattern, stack.source_grid, mask=mask, channels=stack.channels)

def drop_pixels(stack, rate, seed):
    """Zeroes each pixel of each view independently with probability `rate`"""
    if not (0.0 <= rate <= 1.0):
        raise ValueError("drop rate must lie in [0,1], got {}".format(rate))
    rng = make_rng(seed)
    dropped = rng.random((stack.v, stack.height, stack.width)) < rate
    keep = ~dropped
    if stack.mask is not None:
        keep &= stack.mask.astype(bool)
    views = stack.data.reshape(stack.v, stack.channels, stack.height, stack.width)
    data = np.where(keep[:, None], views, np.float32(0.0)).reshape(stack.data.shape)
    return ViewStack(data, stack.pattern, stack.source_grid, mask=keep.astype(np.uint8), channels=stack.channels)
