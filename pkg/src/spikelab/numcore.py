"""
This file contains dense tensors over numpy arrays and reverse-mode automatic differentiation.
Only operations used by spiking layers are implemented; there is no graph optimizer.
Every gradient accumulation happens in a fixed sequential order, so results are bit-identical between runs.
"""
import logging
import threading
from contextlib import contextmanager
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .compatibility import sliding_window_view
from .exceptions import ShapeError
from .types import TArrayLike, TShape

__all__ = ['Tensor', 'Graph', 'no_grad', 'is_grad_enabled', 'parameter', 'as_tensor', 'backward',
           'finite_diff_grad', 'add', 'sub', 'mul', 'neg', 'scale', 'tensor_sum', 'tensor_mean', 'reshape',
           'transpose', 'select', 'stack', 'matmul', 'conv2d', 'max_pool2d', 'avg_pool2d', 'batch_norm',
           'log_softmax', 'spike', 'smooth_spike', 'arctan_surrogate', 'conv_output_size']

logger = logging.getLogger('spikelab')

_grad_state = threading.local()

TBackward = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def is_grad_enabled():  # type: () -> bool
    return getattr(_grad_state, 'enabled', True)


@contextmanager
def no_grad():
    """
    Disables graph recording inside the block (for the current thread only)
    """
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


class Tensor(object):
    """
    64-bit dense tensor. Tensors created by operations remember their parents and a closure,
    computing parent gradients from the output gradient.
    """
    __slots__ = ['data', 'requires_grad', 'grad', 'parents', 'backward_fn', 'op']

    def __init__(self, data, requires_grad=False):  # type: (TArrayLike, bool) -> None
        if isinstance(data, Tensor):
            data = data.data
        if isinstance(data, np.ndarray) and data.dtype == np.float64:
            self.data = data
        else:
            self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None  # type: Optional[np.ndarray]
        self.parents = ()  # type: Tuple[Tensor, ...]
        self.backward_fn = None  # type: Optional[TBackward]
        self.op = 'leaf'

    @property
    def shape(self):  # type: () -> TShape
        return self.data.shape

    @property
    def ndim(self):  # type: () -> int
        return self.data.ndim

    @property
    def size(self):  # type: () -> int
        return self.data.size

    @property
    def is_leaf(self):  # type: () -> bool
        return self.backward_fn is None

    def numpy(self):  # type: () -> np.ndarray
        return self.data

    def item(self):  # type: () -> float
        if self.data.size != 1:
            raise ShapeError("Only single element tensors can be converted to float, got shape %s" % (self.shape,))
        return float(self.data.reshape(()))

    def detach(self):  # type: () -> Tensor
        return Tensor(self.data)

    def zero_grad(self):  # type: () -> None
        self.grad = None

    def backward(self):  # type: () -> Dict[Tensor, np.ndarray]
        return backward(None, self)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)

    def __getitem__(self, key):
        return select(self, key)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (int, float)):
            raise TypeError("Tensors can only be divided by a number")
        return scale(self, 1.0 / other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __len__(self):
        return self.data.shape[0]

    def __repr__(self):
        return '<Tensor %s shape=%s requires_grad=%s>' % (self.op, self.shape, self.requires_grad)


def parameter(data):  # type: (TArrayLike) -> Tensor
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


def as_tensor(value):  # type: (Union[Tensor, TArrayLike]) -> Tensor
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data, parents, backward_fn, op):
    # type: (np.ndarray, Tuple[Tensor, ...], TBackward, str) -> Tensor
    out = Tensor(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.parents = parents
        out.backward_fn = backward_fn
        out.op = op
    return out


def _unbroadcast(grad, shape):  # type: (np.ndarray, TShape) -> np.ndarray
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Graph(object):
    """
    Operation records reachable from an output tensor, in topological order (parents first)
    """
    __slots__ = ['output', 'nodes', 'gradients']

    def __init__(self, output):  # type: (Tensor) -> None
        self.output = output
        self.nodes = self._topological_order(output)
        self.gradients = {}  # type: Dict[Tensor, np.ndarray]

    @staticmethod
    def _topological_order(output):  # type: (Tensor) -> List[Tensor]
        # Iterative post-order DFS: BPTT unrolls are deeper than the recursion limit
        order = []
        visited = set()
        stack = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in reversed(node.parents):
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def __len__(self):
        return len(self.nodes)


def backward(graph, loss_node):  # type: (Optional[Graph], Tensor) -> Dict[Tensor, np.ndarray]
    """
    Reverse topological sweep from loss_node.
    Leaf gradients are accumulated into leaf.grad: repeated calls without zero_grad() add up.
    :param graph: Graph built from loss_node. If None, it is built here.
    :param loss_node: Scalar tensor to differentiate
    :return: A dict {leaf tensor: its accumulated gradient}
    """
    if not isinstance(loss_node, Tensor):
        raise TypeError("loss_node must be a Tensor")
    if loss_node.size != 1:
        raise ShapeError("backward requires a scalar loss, got shape %s" % (loss_node.shape,))
    if not loss_node.requires_grad:
        raise ValueError("loss doesn't depend on any tensor requiring grad")
    if graph is None:
        graph = Graph(loss_node)
    elif graph.output is not loss_node:
        raise ValueError("graph was built from a different output node")

    pending = {id(loss_node): np.ones_like(loss_node.data)}
    result = {}
    for node in reversed(graph.nodes):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue

        if node.backward_fn is None:
            if node.requires_grad:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                result[node] = node.grad
            continue

        for parent, parent_grad in zip(node.parents, node.backward_fn(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pending[key] + parent_grad if key in pending else parent_grad

    graph.gradients = result
    return result


def finite_diff_grad(f, x, eps=1e-4):  # type: (Callable[[Tensor], Union[Tensor, float]], TArrayLike, float) -> Tensor
    """
    Central-difference gradient estimate of a scalar function, one element at a time
    :param f: Deterministic scalar-valued function of a tensor
    :param x: Point to estimate gradient at
    :param eps: Perturbation size
    :return: Tensor of x shape
    """
    if eps <= 0:
        raise ValueError("eps must be positive")

    def evaluate(values):
        value = f(Tensor(values))
        return value.item() if isinstance(value, Tensor) else float(value)

    base = np.array(as_tensor(x).data, dtype=np.float64)
    grad = np.zeros_like(base)
    with no_grad():
        for index in np.ndindex(*base.shape):
            plus = base.copy()
            plus[index] += eps
            minus = base.copy()
            minus[index] -= eps
            grad[index] = (evaluate(plus) - evaluate(minus)) / (2 * eps)
    return Tensor(grad)


# Elementwise

def add(a, b):  # type: (Union[Tensor, TArrayLike], Union[Tensor, TArrayLike]) -> Tensor
    a, b = as_tensor(a), as_tensor(b)
    return _result(a.data + b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), 'add')


def sub(a, b):  # type: (Union[Tensor, TArrayLike], Union[Tensor, TArrayLike]) -> Tensor
    a, b = as_tensor(a), as_tensor(b)
    return _result(a.data - b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)), 'sub')


def mul(a, b):  # type: (Union[Tensor, TArrayLike], Union[Tensor, TArrayLike]) -> Tensor
    a, b = as_tensor(a), as_tensor(b)
    return _result(a.data * b.data, (a, b),
                   lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)), 'mul')


def neg(a):  # type: (Tensor) -> Tensor
    return _result(-a.data, (a,), lambda g: (-g,), 'neg')


def scale(a, factor):  # type: (Tensor, float) -> Tensor
    factor = float(factor)
    return _result(a.data * factor, (a,), lambda g: (g * factor,), 'scale')


# Reductions and shapes

def _normalize_axes(axis, ndim):  # type: (Optional[Union[int, Iterable[int]]], int) -> Tuple[int, ...]
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def tensor_sum(a, axis=None, keepdims=False):
    # type: (Tensor, Optional[Union[int, Iterable[int]]], bool) -> Tensor
    axes = _normalize_axes(axis, a.ndim)

    def backward_fn(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return np.broadcast_to(g, a.shape),

    return _result(a.data.sum(axis=axes, keepdims=keepdims), (a,), backward_fn, 'sum')


def tensor_mean(a, axis=None, keepdims=False):
    # type: (Tensor, Optional[Union[int, Iterable[int]]], bool) -> Tensor
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return scale(tensor_sum(a, axis=axes, keepdims=keepdims), 1.0 / count)


def reshape(a, shape):  # type: (Tensor, TShape) -> Tensor
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), 'reshape')


def transpose(a, axes):  # type: (Tensor, TShape) -> Tensor
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), 'transpose')


def select(a, key):  # type: (Tensor, Union[int, slice, tuple]) -> Tensor
    """
    Basic (non-fancy) indexing
    """
    parts = key if isinstance(key, tuple) else (key,)
    for part in parts:
        if not (isinstance(part, (int, slice)) or part is Ellipsis):
            raise TypeError("Only integer, slice and ellipsis indices are supported")

    def backward_fn(g):
        full = np.zeros_like(a.data)
        full[key] = g
        return full,

    return _result(a.data[key], (a,), backward_fn, 'select')


def stack(tensors, axis=0):  # type: (Sequence[Tensor], int) -> Tensor
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise ValueError("stack requires at least one tensor")
    shape = tensors[0].shape
    for i, t in enumerate(tensors):
        if t.shape != shape:
            raise ShapeError("stack: tensor %d has shape %s, expected %s" % (i, t.shape, shape))

    def backward_fn(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _result(np.stack([t.data for t in tensors], axis=axis), tensors, backward_fn, 'stack')


def matmul(a, b):  # type: (Tensor, Tensor) -> Tensor
    """
    Batched matrix product a[..., M, K] @ b[..., K, N] with broadcasting leading dimensions
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul operands must be at least 2-D, got %s and %s" % (a.shape, b.shape))
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul inner dimension mismatch: %d != %d" % (a.shape[-1], b.shape[-2]))
    try:
        data = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeError("matmul batch dimensions %s and %s can't be broadcast" % (a.shape[:-2], b.shape[:-2]))

    def backward_fn(g):
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return _result(data, (a, b), backward_fn, 'matmul')


# Convolution and pooling

def conv_output_size(size, kernel_size, stride, padding):  # type: (int, int, int, int) -> int
    return (size + 2 * padding - kernel_size) // stride + 1


def _check_window(name, x, kernel_size, stride, padding):
    # type: (str, Tensor, int, int, int) -> None
    if x.ndim != 4:
        raise ShapeError("%s input must be 4-D [B,C,H,W], got shape %s" % (name, x.shape))
    if type(stride) is not int or stride <= 0:
        raise ValueError("%s stride must be positive integer" % name)
    if type(padding) is not int or padding < 0:
        raise ValueError("%s padding must be non negative integer" % name)
    for dim, extent in (('height', x.shape[2]), ('width', x.shape[3])):
        if kernel_size > extent + 2 * padding:
            raise ShapeError("%s kernel size %d exceeds padded input %s %d"
                             % (name, kernel_size, dim, extent + 2 * padding))


def _pad(data, padding, value=0.0):  # type: (np.ndarray, int, float) -> np.ndarray
    if not padding:
        return data
    return np.pad(data, ((0, 0), (0, 0), (padding, padding), (padding, padding)), constant_values=value)


def _windows(padded, kernel_size, stride):  # type: (np.ndarray, int, int) -> np.ndarray
    view = sliding_window_view(padded, (kernel_size, kernel_size), axis=(2, 3))
    return view[:, :, ::stride, ::stride]


def _window_slice(offset, stride, count):  # type: (int, int, int) -> slice
    return slice(offset, offset + stride * (count - 1) + 1, stride)


def conv2d(x, kernel, stride=1, padding=0, groups=1):
    # type: (Tensor, Tensor, int, int, int) -> Tensor
    """
    2-D cross-correlation over [B,C,H,W] input with [O, C/groups, k, k] kernel.
    groups == C makes it depth-wise.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if kernel.ndim != 4:
        raise ShapeError("conv2d kernel must be 4-D [O,C,k,k], got shape %s" % (kernel.shape,))
    out_channels, group_channels, k_h, k_w = kernel.shape
    if k_h != k_w:
        raise ShapeError("conv2d kernel must be square, got %dx%d" % (k_h, k_w))
    _check_window('conv2d', x, k_h, stride, padding)
    batch_size, channels, height, width = x.shape
    if type(groups) is not int or groups <= 0:
        raise ValueError("conv2d groups must be positive integer")
    if channels % groups or out_channels % groups:
        raise ShapeError("conv2d channel dimension (%d in, %d out) is not divisible by groups %d"
                         % (channels, out_channels, groups))
    if group_channels != channels // groups:
        raise ShapeError("conv2d channel dimension mismatch: input has %d channels per group, kernel expects %d"
                         % (channels // groups, group_channels))

    k = k_h
    out_h = conv_output_size(height, k, stride, padding)
    out_w = conv_output_size(width, k, stride, padding)
    padded = _pad(x.data, padding)
    windows = _windows(padded, k, stride)

    if groups == 1:
        data = np.tensordot(windows, kernel.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    else:
        per_out = out_channels // groups
        grouped = windows.reshape(batch_size, groups, group_channels, out_h, out_w, k, k)
        grouped_kernel = kernel.data.reshape(groups, per_out, group_channels, k, k)
        data = np.einsum('bgchwij,gocij->bgohw', grouped, grouped_kernel).reshape(
            batch_size, out_channels, out_h, out_w)

    def backward_fn(g):
        grad_padded = np.zeros_like(padded)
        if groups == 1:
            grad_kernel = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
            for i in range(k):
                for j in range(k):
                    contribution = np.tensordot(g, kernel.data[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
                    grad_padded[:, :, _window_slice(i, stride, out_h), _window_slice(j, stride, out_w)] += contribution
        else:
            g_grouped = g.reshape(batch_size, groups, per_out, out_h, out_w)
            grad_kernel = np.einsum('bgohw,bgchwij->gocij', g_grouped, grouped).reshape(kernel.shape)
            for i in range(k):
                for j in range(k):
                    contribution = np.einsum('bgohw,goc->bgchw', g_grouped, grouped_kernel[..., i, j]).reshape(
                        batch_size, channels, out_h, out_w)
                    grad_padded[:, :, _window_slice(i, stride, out_h), _window_slice(j, stride, out_w)] += contribution
        grad_x = grad_padded[:, :, padding:padding + height, padding:padding + width]
        return grad_x, grad_kernel

    return _result(np.ascontiguousarray(data), (x, kernel), backward_fn, 'conv2d')


def max_pool2d(x, kernel_size, stride=None, padding=0):
    # type: (Tensor, int, Optional[int], int) -> Tensor
    """
    Windowed maximum. Gradient is routed to the first maximal element in scan order.
    """
    x = as_tensor(x)
    stride = kernel_size if stride is None else stride
    _check_window('max_pool2d', x, kernel_size, stride, padding)
    k = kernel_size
    batch_size, channels, height, width = x.shape
    out_h = conv_output_size(height, k, stride, padding)
    out_w = conv_output_size(width, k, stride, padding)
    padded = _pad(x.data, padding, value=-np.inf)
    flat = _windows(padded, k, stride).reshape(batch_size, channels, out_h, out_w, k * k)
    argmax = flat.argmax(axis=-1)
    data = np.take_along_axis(flat, argmax[..., None], axis=-1)[..., 0]

    def backward_fn(g):
        grad_padded = np.zeros(padded.shape)
        for position in range(k * k):
            i, j = divmod(position, k)
            grad_padded[:, :, _window_slice(i, stride, out_h), _window_slice(j, stride, out_w)] += \
                np.where(argmax == position, g, 0.0)
        return grad_padded[:, :, padding:padding + height, padding:padding + width],

    return _result(np.ascontiguousarray(data), (x,), backward_fn, 'max_pool2d')


def avg_pool2d(x, kernel_size, stride=None, padding=0, count_include_pad=False):
    # type: (Tensor, int, Optional[int], int, bool) -> Tensor
    x = as_tensor(x)
    stride = kernel_size if stride is None else stride
    _check_window('avg_pool2d', x, kernel_size, stride, padding)
    k = kernel_size
    batch_size, channels, height, width = x.shape
    out_h = conv_output_size(height, k, stride, padding)
    out_w = conv_output_size(width, k, stride, padding)
    padded = _pad(x.data, padding)
    sums = _windows(padded, k, stride).sum(axis=(-2, -1))
    if count_include_pad:
        counts = np.full((out_h, out_w), float(k * k))
    else:
        ones = _pad(np.ones((1, 1, height, width)), padding)
        counts = _windows(ones, k, stride).sum(axis=(-2, -1))[0, 0]
    data = sums / counts

    def backward_fn(g):
        grad_padded = np.zeros(padded.shape)
        share = g / counts
        for i in range(k):
            for j in range(k):
                grad_padded[:, :, _window_slice(i, stride, out_h), _window_slice(j, stride, out_w)] += share
        return grad_padded[:, :, padding:padding + height, padding:padding + width],

    return _result(data, (x,), backward_fn, 'avg_pool2d')


# Normalization

def batch_norm(x, gamma, beta, eps=1e-5):
    # type: (Tensor, Tensor, Tensor, float) -> Tuple[Tensor, np.ndarray, np.ndarray]
    """
    Training-mode batch normalization over every axis except axis 1 (channels)
    :return: A tuple (output, batch mean, biased batch variance)
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim < 2:
        raise ShapeError("batch_norm input must have a channel axis, got shape %s" % (x.shape,))
    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeError("batch_norm affine parameters must have shape (%d,), got %s and %s"
                         % (channels, gamma.shape, beta.shape))

    axes = tuple(i for i in range(x.ndim) if i != 1)
    view = [1] * x.ndim
    view[1] = channels
    count = x.size // channels

    mean = x.data.mean(axis=axes)
    var = x.data.var(axis=axes)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mean.reshape(view)) * inv_std.reshape(view)
    data = gamma.data.reshape(view) * x_hat + beta.data.reshape(view)

    def backward_fn(g):
        grad_beta = g.sum(axis=axes)
        grad_gamma = (g * x_hat).sum(axis=axes)
        d_hat = g * gamma.data.reshape(view)
        grad_x = inv_std.reshape(view) / count * (
            count * d_hat
            - d_hat.sum(axis=axes, keepdims=True)
            - x_hat * (d_hat * x_hat).sum(axis=axes, keepdims=True)
        )
        return grad_x, grad_gamma, grad_beta

    return _result(data, (x, gamma, beta), backward_fn, 'batch_norm'), mean, var


def log_softmax(x, axis=-1):  # type: (Tensor, int) -> Tensor
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    data = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    probs = np.exp(data)
    return _result(data, (x,), lambda g: (g - probs * g.sum(axis=axis, keepdims=True),), 'log_softmax')


# Spiking nonlinearity

def arctan_surrogate(u, v_th, alpha):  # type: (np.ndarray, float, float) -> np.ndarray
    """
    Derivative of (1/pi)·arctan(pi·alpha·(u - v_th)/2) + 1/2
    """
    return alpha / (2.0 * (1.0 + (np.pi * alpha * (u - v_th) / 2.0) ** 2))


def spike(u, v_th, alpha):  # type: (Tensor, float, float) -> Tensor
    """
    Heaviside step H(u - v_th) with H(0) = 1. Backward uses the arctan surrogate derivative.
    """
    u = as_tensor(u)
    return _result((u.data >= v_th).astype(np.float64), (u,),
                   lambda g: (g * arctan_surrogate(u.data, v_th, alpha),), 'spike')


def smooth_spike(u, v_th, alpha):  # type: (Tensor, float, float) -> Tensor
    """
    The smooth arctan primitive itself, so forward and backward agree
    """
    u = as_tensor(u)
    data = np.arctan(np.pi * alpha * (u.data - v_th) / 2.0) / np.pi + 0.5
    return _result(data, (u,), lambda g: (g * arctan_surrogate(u.data, v_th, alpha),), 'smooth_spike')
