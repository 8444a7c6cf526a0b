### Dense tensors with reverse-mode differentiation
#
# Only the operations the light field network needs are provided. Every op
# is a Function subclass: forward works on numpy arrays, backward maps the
# gradient of the output to gradients of the inputs.

import logging
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..util.utils import ShapeError

DEFAULT_DTYPE = np.float32
ROW_BLOCK = 256

_grad_enabled = True

class no_grad(object):
    """Context manager disabling graph recording, for inference"""

    def __enter__(self):
        global _grad_enabled
        self.previous = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self.previous
        return False

def is_grad_enabled():
    return _grad_enabled

class Tensor(object):
    """N-dimensional real array with optional gradient tracking.
        Attributes:
          data: numpy array holding the values (row-major)
          requires_grad: whether gradients are accumulated into this tensor
          grad: numpy array of the same shape; zeros for leaves that require gradients, else None
          creator: the Function that produced this tensor, None for leaves
          name: optional label used in diagnostics
    """

    def __init__(self, data, requires_grad=False, creator=None, name=None):
        data = np.asarray(data)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(DEFAULT_DTYPE)
        self.data = data
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad and creator is None else None
        self.creator = creator
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self):
        return self.data.copy()

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def backward(self):
        backward(self)

    def __add__(self, other):
        return add(self, other)

    def __repr__(self):
        label = " name={}".format(self.name) if self.name else ""
        return "Tensor(shape={}, dtype={}, requires_grad={}{})".format(self.shape, self.dtype, self.requires_grad, label)

def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)

class Function(object):
    """Base class for differentiable operations.
        Attributes:
          tensors: the input tensors, in argument order
    """

    def __init__(self, *tensors):
        self.tensors = tensors

    def forward(self, *arrays, **kwargs):
        raise NotImplementedError

    def backward(self, grad):
        """Returns one gradient array (or None) per input tensor"""
        raise NotImplementedError

    @classmethod
    def apply(cls, *tensors, **kwargs):
        tensors = tuple(as_tensor(t) for t in tensors)
        func = cls(*tensors)
        out_data = func.forward(*(t.data for t in tensors), **kwargs)
        requires_grad = _grad_enabled and any(t.requires_grad for t in tensors)
        return Tensor(out_data, requires_grad=requires_grad, creator=func if requires_grad else None)

def _check_same_shape(a, b, op):
    if a.shape != b.shape:
        raise ShapeError("{}: shape mismatch {} vs {}".format(op, a.shape, b.shape))

class Conv2d(Function):
    def forward(self, x, kernel, bias, pad=0):
        if x.ndim != 3 or kernel.ndim != 4:
            raise ShapeError("conv2d: expected input [C,H,W] and kernel [C_out,C_in,k,k], got {} and {}".format(x.shape, kernel.shape))
        c_out, c_in, kh, kw = kernel.shape
        if kh != kw or kh % 2 == 0:
            raise ShapeError("conv2d: kernel must be square with odd size, got {}x{}".format(kh, kw))
        if pad != (kh - 1) // 2:
            raise ShapeError("conv2d: padding {} does not keep the spatial size for kernel size {}".format(pad, kh))
        if c_in != x.shape[0]:
            raise ShapeError("conv2d: kernel expects {} input channels, input has {}".format(c_in, x.shape[0]))
        if bias.shape != (c_out,):
            raise ShapeError("conv2d: bias shape {} does not match {} output channels".format(bias.shape, c_out))
        self.pad = pad
        self.kernel = kernel
        self.spatial = x.shape[1:]
        xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad))) if pad else x
        # (C_in, H, W, k, k)
        self.windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))
        out = np.tensordot(kernel, self.windows, axes=([1, 2, 3], [0, 3, 4]))
        return out + bias[:, None, None]

    def backward(self, grad):
        x, kernel, bias = self.tensors
        k = self.kernel.shape[-1]
        height, width = self.spatial
        dx = dk = db = None
        if kernel.requires_grad:
            dk = np.tensordot(grad, self.windows, axes=([1, 2], [1, 2]))
        if bias.requires_grad:
            db = grad.sum(axis=(1, 2))
        if x.requires_grad:
            dxp = np.zeros((self.kernel.shape[1], height + 2 * self.pad, width + 2 * self.pad), dtype=grad.dtype)
            for i in range(k):
                for j in range(k):
                    dxp[:, i:i + height, j:j + width] += np.tensordot(self.kernel[:, :, i, j], grad, axes=([0], [0]))
            dx = dxp[:, self.pad:self.pad + height, self.pad:self.pad + width]
        return dx, dk, db

class Relu(Function):
    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, np.zeros_like(x))

    def backward(self, grad):
        return (grad * self.mask,)

def _rowwise_matmul(x, weight):
    """x [P,n] times weight.T [n,m] evaluated in fixed-shape row blocks.

    Every row goes through a product of identical shape, so its value does
    not depend on how many rows are evaluated together.
    """
    rows = x.shape[0]
    blocks = max(1, -(-rows // ROW_BLOCK))
    padded = np.zeros((blocks * ROW_BLOCK, x.shape[1]), dtype=np.result_type(x, weight))
    padded[:rows] = x
    out = np.matmul(padded.reshape(blocks, ROW_BLOCK, x.shape[1]), weight.T)
    return out.reshape(blocks * ROW_BLOCK, weight.shape[0])[:rows]

class Linear(Function):
    def forward(self, x, weight, bias=None):
        if weight.ndim != 2:
            raise ShapeError("linear: weight must be [m,n], got {}".format(weight.shape))
        if x.ndim not in (1, 2) or x.shape[-1] != weight.shape[1]:
            raise ShapeError("linear: input {} does not match weight {}".format(x.shape, weight.shape))
        if bias is not None and bias.shape != (weight.shape[0],):
            raise ShapeError("linear: bias {} does not match weight {}".format(bias.shape, weight.shape))
        self.vector = x.ndim == 1
        self.x = x.reshape(1, -1) if self.vector else x
        self.weight = weight
        out = _rowwise_matmul(self.x, weight)
        if bias is not None:
            out = out + bias
        return out[0] if self.vector else out

    def backward(self, grad):
        x, weight = self.tensors[:2]
        bias = self.tensors[2] if len(self.tensors) > 2 else None
        grad = grad.reshape(1, -1) if self.vector else grad
        dx = dw = db = None
        if x.requires_grad:
            dx = grad @ self.weight
            dx = dx[0] if self.vector else dx
        if weight.requires_grad:
            dw = grad.T @ self.x
        if bias is not None and bias.requires_grad:
            db = grad.sum(axis=0)
        return (dx, dw, db) if bias is not None else (dx, dw)

class Add(Function):
    def forward(self, a, b):
        _check_same_shape(a, b, "add")
        return a + b

    def backward(self, grad):
        return grad, grad

class Scale(Function):
    def forward(self, x, factor=1.0):
        self.factor = factor
        return x * factor

    def backward(self, grad):
        return (grad * self.factor,)

class Concat(Function):
    def forward(self, *parts, axis=0):
        if not parts:
            raise ShapeError("concat: nothing to concatenate")
        ndim = parts[0].ndim
        axis = axis % ndim
        for p in parts:
            if p.ndim != ndim or p.shape[:axis] + p.shape[axis + 1:] != parts[0].shape[:axis] + parts[0].shape[axis + 1:]:
                raise ShapeError("concat: part of shape {} does not fit {} along axis {}".format(p.shape, parts[0].shape, axis))
        self.axis = axis
        self.bounds = np.cumsum([0] + [p.shape[axis] for p in parts])
        return np.concatenate(parts, axis=axis)

    def backward(self, grad):
        index = [slice(None)] * grad.ndim
        grads = []
        for lo, hi in zip(self.bounds[:-1], self.bounds[1:]):
            index[self.axis] = slice(lo, hi)
            grads.append(grad[tuple(index)])
        return tuple(grads)

class Stack(Function):
    def forward(self, *parts):
        for p in parts:
            _check_same_shape(p, parts[0], "stack")
        return np.stack(parts, axis=0)

    def backward(self, grad):
        return tuple(grad[i] for i in range(grad.shape[0]))

class Take(Function):
    def forward(self, x, indices=None):
        self.indices = np.asarray(indices, dtype=np.int64)
        self.original = x.shape
        return x[self.indices]

    def backward(self, grad):
        dx = np.zeros(self.original, dtype=grad.dtype)
        np.add.at(dx, self.indices, grad)
        return (dx,)

class Reshape(Function):
    def forward(self, x, shape=None):
        self.original = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.original),)

class Transpose(Function):
    def forward(self, x, axes=None):
        self.axes = tuple(axes)
        return np.transpose(x, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)

class Diff(Function):
    def forward(self, x, axis=0):
        if x.shape[axis] < 2:
            raise ShapeError("diff: axis {} of shape {} has fewer than two entries".format(axis, x.shape))
        self.axis = axis
        self.original = x.shape
        return np.diff(x, axis=axis)

    def backward(self, grad):
        dx = np.zeros(self.original, dtype=grad.dtype)
        head = [slice(None)] * len(self.original)
        tail = [slice(None)] * len(self.original)
        head[self.axis] = slice(1, None)
        tail[self.axis] = slice(None, -1)
        dx[tuple(head)] += grad
        dx[tuple(tail)] -= grad
        return (dx,)

def interpolation_matrix(source, target, dtype=np.float64):
    """Align-corners linear interpolation weights, shape [target, source].

    Target sample i sits at source position i*(source-1)/(target-1); a single
    target sample sits at the source centre.
    """
    if target < 1 or source < 1:
        raise ShapeError("resize: extents must be positive, got source {} target {}".format(source, target))
    if target == 1:
        position = np.array([(source - 1) / 2.0])
    else:
        position = np.arange(target) * (source - 1) / (target - 1)
    lo = np.clip(np.floor(position).astype(np.int64), 0, source - 1)
    hi = np.minimum(lo + 1, source - 1)
    frac = position - lo
    matrix = np.zeros((target, source), dtype=np.float64)
    rows = np.arange(target)
    np.add.at(matrix, (rows, lo), 1.0 - frac)
    np.add.at(matrix, (rows, hi), frac)
    return matrix.astype(dtype)

class BilinearResize(Function):
    def forward(self, x, height=None, width=None):
        if x.ndim != 3:
            raise ShapeError("bilinear_resize: expected [C,H,W], got {}".format(x.shape))
        self.ry = interpolation_matrix(x.shape[1], height, x.dtype)
        self.rx = interpolation_matrix(x.shape[2], width, x.dtype)
        return np.matmul(np.matmul(self.ry, x), self.rx.T)

    def backward(self, grad):
        return (np.matmul(np.matmul(self.ry.T, grad), self.rx),)

class L1Mean(Function):
    def forward(self, a, b):
        _check_same_shape(a, b, "l1_mean")
        self.sign = np.sign(a - b)
        return np.asarray(np.mean(np.abs(a - b)), dtype=np.result_type(a, b))

    def backward(self, grad):
        g = grad * self.sign / self.sign.size
        return g, -g

def conv2d(x, kernel, bias, pad=0):
    """Same-size 2D convolution (cross-correlation) with zero padding"""
    return Conv2d.apply(x, kernel, bias, pad=pad)

def relu(x):
    return Relu.apply(x)

def linear(x, weight, bias=None):
    """weight @ x + bias for x of shape [n], or row-wise for x of shape [P,n]"""
    if bias is None:
        return Linear.apply(x, weight)
    return Linear.apply(x, weight, bias)

def add(a, b):
    return Add.apply(a, b)

def scale(x, factor):
    return Scale.apply(x, factor=float(factor))

def concat(parts, axis=0):
    return Concat.apply(*parts, axis=axis)

def concat_channels(parts):
    """Concatenates [C_i,H,W] tensors along the channel axis, in list order"""
    for p in parts:
        if as_tensor(p).ndim != 3:
            raise ShapeError("concat_channels: expected [C,H,W] parts, got {}".format(as_tensor(p).shape))
    return concat(parts, axis=0)

def stack(parts):
    return Stack.apply(*parts)

def take(x, indices):
    """Selects entries along the leading axis"""
    return Take.apply(x, indices=list(indices))

def reshape(x, shape):
    return Reshape.apply(x, shape=tuple(shape))

def transpose(x, axes):
    return Transpose.apply(x, axes=axes)

def diff(x, axis):
    return Diff.apply(x, axis=axis)

def bilinear_resize(x, height, width):
    """Align-corners bilinear resize of a [C,H,W] tensor to [C,height,width]"""
    if height < 1 or width < 1:
        raise ShapeError("bilinear_resize: target extent must be at least 1, got {}x{}".format(height, width))
    return BilinearResize.apply(x, height=int(height), width=int(width))

def l1_mean(a, b):
    return L1Mean.apply(a, b)

def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        if node.creator is not None:
            for inp in node.creator.tensors:
                if inp.requires_grad and id(inp) not in seen:
                    stack.append((inp, False))
    return order

def backward(loss):
    """Populates .grad of every requires_grad leaf reachable from a scalar loss.
        Gradients accumulate into existing .grad arrays; callers zero them between steps.
    """
    if not isinstance(loss, Tensor) or loss.shape != ():
        raise ShapeError("backward: loss must be a scalar tensor, got {}".format(getattr(loss, 'shape', type(loss))))
    if not loss.requires_grad:
        logging.debug("backward called on a loss that does not require gradients")
        return
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological(loss)):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node.creator is None:
            if node.grad is None:
                node.grad = np.array(grad, dtype=node.dtype, copy=True)
            else:
                node.grad += grad
            continue
        for inp, g in zip(node.creator.tensors, node.creator.backward(grad)):
            if g is None or not inp.requires_grad:
                continue
            if id(inp) in grads:
                grads[id(inp)] = grads[id(inp)] + g
            else:
                grads[id(inp)] = g
