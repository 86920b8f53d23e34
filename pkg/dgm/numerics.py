"""Dense float64 tensors with tape-based reverse-mode differentiation

Operations on :class:`Tensor` objects are recorded on the active
:class:`ComputeGraph` (entered with a ``with`` block) whenever one of their
inputs requires a gradient. Outside of a graph the same operations run as
plain numpy arithmetic, which is what inference uses.

Examples
--------
>>> x = Tensor(2.0, requires_grad=True)
>>> y = Tensor(3.0, requires_grad=True)
>>> with ComputeGraph() as graph:
...     z = x * y
>>> backward(graph, z)
>>> float(x.grad), float(y.grad)
(3.0, 2.0)

"""

import contextvars

import numpy as np
from scipy.special import expit, logsumexp

import dgm
from dgm import NEG_INF


logger = dgm.logger.getChild(__name__)

_active_graph = contextvars.ContextVar('dgm_active_graph', default=None)


class Operation:
    """A recorded operation of a :class:`ComputeGraph`

    Parameters
    ----------
    name : str
    inputs : tuple of Tensor
    output : Tensor
    backward : callable
        Receives the gradient of the output and accumulates gradients
        into the inputs

    """

    __slots__ = ('name', 'inputs', 'output', 'backward')

    def __init__(self, name, inputs, output, backward):

        self.name = name
        self.inputs = inputs
        self.output = output
        self.backward = backward

    def __repr__(self):

        return 'Operation({}, out={})'.format(self.name, self.output.shape)


class ComputeGraph:
    """Ordered tape of the operations of one forward pass

    Operations are appended in execution order, so the tape is always in
    topological order. A graph is bound to the current context while its
    ``with`` block runs; graphs of different threads are independent.

    """

    def __init__(self):

        self._operations = []
        self._tokens = []

        self.logger = logger.getChild(self.__class__.__name__)

    def __enter__(self):

        self._tokens.append(_active_graph.set(self))

        return self

    def __exit__(self, *args):

        _active_graph.reset(self._tokens.pop())

    def __len__(self):

        return len(self._operations)

    @property
    def operations(self):

        return list(self._operations)

    def record(self, name, inputs, output, backward):

        self._operations.append(Operation(name, inputs, output, backward))

    def backward(self, loss):
        """Populates the gradients of every tracked tensor of this graph

        Parameters
        ----------
        loss : Tensor
            Scalar tensor produced by this graph

        """

        if not isinstance(loss, Tensor) or loss.data.size != 1:
            raise ValueError("backward requires a scalar loss")

        if not loss.requires_grad:
            self.logger.warning("Loss does not depend on tracked tensors")
            return

        loss.grad = np.ones_like(loss.data)

        for op in reversed(self._operations):

            if op.output.grad is None:
                continue

            op.backward(op.output.grad)

        self.logger.debug(
            "Back-propagated through {} operations".format(
                len(self._operations)))


def backward(graph, loss):
    """Reverse traversal of `graph` starting from the scalar `loss`

    Gradients accumulate additively into ``grad`` of every tensor that
    requires one.

    Parameters
    ----------
    graph : ComputeGraph
    loss : Tensor

    """

    graph.backward(loss)


def active_graph():

    return _active_graph.get()


def _unbroadcast(grad, shape):

    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)

    for i, extent in enumerate(shape):
        if extent == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)

    return grad


def _accumulate(tensor, grad):

    if not tensor.requires_grad:
        return

    if tensor.grad is None:
        tensor.grad = np.array(grad, dtype=np.float64).reshape(tensor.shape)
    else:
        tensor.grad = tensor.grad + grad


def _as_tensor(x):

    return x if isinstance(x, Tensor) else Tensor(x)


def _make(name, data, inputs, backward_fn):
    """Creates an operation output and records it on the active graph"""

    requires_grad = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires_grad)

    graph = _active_graph.get()

    if requires_grad and graph is not None:
        graph.record(name, inputs, out, backward_fn)

    return out


class Tensor:
    """Dense double-precision array with an optional gradient

    Parameters
    ----------
    data : array_like
    requires_grad : bool, optional
        Track gradients of this tensor

    """

    __array_ufunc__ = None

    def __init__(self, data, requires_grad=False):

        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None

    def __repr__(self):

        return 'Tensor(shape={}, requires_grad={})'.format(
            self.shape, self.requires_grad)

    @property
    def shape(self):

        return self.data.shape

    @property
    def ndim(self):

        return self.data.ndim

    @property
    def size(self):

        return self.data.size

    def numpy(self):

        return self.data.copy()

    def item(self):

        return float(self.data)

    def zero_grad(self):

        self.grad = None

    def __add__(self, other):

        other = _as_tensor(other)

        def _backward(g):
            _accumulate(self, _unbroadcast(g, self.shape))
            _accumulate(other, _unbroadcast(g, other.shape))

        return _make('add', self.data + other.data, (self, other), _backward)

    def __radd__(self, other):

        return _as_tensor(other) + self

    def __neg__(self):

        def _backward(g):
            _accumulate(self, -g)

        return _make('neg', -self.data, (self,), _backward)

    def __sub__(self, other):

        return self + (-_as_tensor(other))

    def __rsub__(self, other):

        return _as_tensor(other) + (-self)

    def __mul__(self, other):

        other = _as_tensor(other)

        def _backward(g):
            _accumulate(self, _unbroadcast(g * other.data, self.shape))
            _accumulate(other, _unbroadcast(g * self.data, other.shape))

        return _make('mul', self.data * other.data, (self, other), _backward)

    def __rmul__(self, other):

        return _as_tensor(other) * self

    def __truediv__(self, other):

        if isinstance(other, Tensor):
            raise TypeError("Division is only defined by constants")

        return self * (1.0 / other)

    def __matmul__(self, other):

        other = _as_tensor(other)

        if self.ndim != 2 or other.ndim != 2:
            raise ValueError("matmul requires two-dimensional operands")

        if self.shape[1] != other.shape[0]:
            raise ValueError(
                "shape mismatch in matmul: {} @ {}".format(
                    self.shape, other.shape))

        def _backward(g):
            _accumulate(self, g @ other.data.T)
            _accumulate(other, self.data.T @ g)

        return _make('matmul', self.data @ other.data, (self, other),
                     _backward)

    def __rmatmul__(self, other):

        return _as_tensor(other) @ self

    def __getitem__(self, index):

        def _backward(g):
            full = np.zeros_like(self.data)
            np.add.at(full, index, g)
            _accumulate(self, full)

        return _make('getitem', self.data[index], (self,), _backward)

    @property
    def T(self):

        def _backward(g):
            _accumulate(self, g.T)

        return _make('transpose', self.data.T, (self,), _backward)

    def reshape(self, *shape):

        old_shape = self.shape

        def _backward(g):
            _accumulate(self, g.reshape(old_shape))

        return _make('reshape', self.data.reshape(*shape), (self,), _backward)

    def sum(self, axis=None, keepdims=False):

        def _backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            _accumulate(self, np.broadcast_to(g, self.shape))

        return _make('sum', self.data.sum(axis=axis, keepdims=keepdims),
                     (self,), _backward)

    def mean(self, axis=None, keepdims=False):

        if axis is None:
            count = self.data.size
        else:
            count = self.shape[axis]

        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def relu(self):

        def _backward(g):
            _accumulate(self, g * (self.data > 0))

        return _make('relu', np.maximum(self.data, 0.0), (self,), _backward)

    def sigmoid(self):

        s = expit(self.data)

        def _backward(g):
            _accumulate(self, g * s * (1.0 - s))

        return _make('sigmoid', s, (self,), _backward)


def concat(tensors, axis=-1):
    """Concatenates tensors along `axis`

    Parameters
    ----------
    tensors : sequence of Tensor
    axis : int, optional

    Returns
    -------
    Tensor

    """

    tensors = [_as_tensor(t) for t in tensors]

    if len(tensors) == 0:
        raise ValueError("concat requires at least one tensor")

    ndim = tensors[0].ndim
    axis = axis % ndim
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def _backward(g):
        for t, start, end in zip(tensors, bounds[:-1], bounds[1:]):
            index = [slice(None)] * ndim
            index[axis] = slice(start, end)
            _accumulate(t, g[tuple(index)])

    data = np.concatenate([t.data for t in tensors], axis=axis)

    return _make('concat', data, tuple(tensors), _backward)


def relu(x):

    return _as_tensor(x).relu()


def sigmoid(x):

    return _as_tensor(x).sigmoid()


def log_softmax(logits):
    """Log-softmax over the last axis

    Parameters
    ----------
    logits : Tensor

    Returns
    -------
    Tensor

    """

    logits = _as_tensor(logits)

    out = logits.data - logsumexp(logits.data, axis=-1, keepdims=True)
    p = np.exp(out)

    def _backward(g):
        _accumulate(logits, g - p * g.sum(axis=-1, keepdims=True))

    return _make('log_softmax', out, (logits,), _backward)


def softmax(logits):
    """Softmax over the last axis"""

    logits = _as_tensor(logits)

    return masked_softmax(logits, np.zeros(logits.shape))


def masked_softmax(logits, mask):
    """Softmax over the last axis with an additive mask

    Entries of `mask` are 0 (attend) or :data:`dgm.NEG_INF` (masked).
    Masked positions receive exactly 0 and a row with every position masked
    returns the all-zero row.

    Parameters
    ----------
    logits : Tensor
    mask : array_like
        Broadcastable against `logits` with matching trailing dimension

    Returns
    -------
    Tensor

    Raises
    ------
    ValueError
        If the trailing dimensions of `logits` and `mask` differ

    """

    logits = _as_tensor(logits)
    mask = np.asarray(mask, dtype=np.float64)

    if mask.ndim == 0 or logits.ndim == 0 or \
            mask.shape[-1] != logits.shape[-1]:
        raise ValueError(
            "shape mismatch between logits {} and mask {}".format(
                logits.shape, mask.shape))

    visible = np.broadcast_to(mask > NEG_INF / 2, logits.shape)

    z = np.where(visible, logits.data + mask, -np.inf)
    z_max = z.max(axis=-1, keepdims=True)
    z_max = np.where(np.isfinite(z_max), z_max, 0.0)

    e = np.where(visible, np.exp(z - z_max), 0.0)
    total = e.sum(axis=-1, keepdims=True)

    p = np.divide(e, total, out=np.zeros_like(e), where=total > 0)

    def _backward(g):
        _accumulate(logits, p * (g - (g * p).sum(axis=-1, keepdims=True)))

    return _make('masked_softmax', p, (logits,), _backward)


def cross_entropy(logits, targets):
    """Mean negative log-likelihood of `targets` under softmax(`logits`)

    Parameters
    ----------
    logits : Tensor
        Array of shape (n, k)
    targets : array_like of int
        n class indices

    Returns
    -------
    Tensor
        Scalar loss

    """

    logits = _as_tensor(logits)
    targets = np.asarray(targets, dtype=int)

    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ValueError(
            "shape mismatch between logits {} and targets {}".format(
                logits.shape, targets.shape))

    log_p = log_softmax(logits)
    picked = log_p[(np.arange(len(targets)), targets)]

    return -picked.mean()


def finite_difference_gradient(f, params, eps=1e-6, coordinates=None):
    """Central finite-difference gradient of a scalar function

    Each coordinate of each parameter is perturbed in place by ``+eps`` and
    ``-eps`` and restored afterwards.

    Parameters
    ----------
    f : callable
        Deterministic function of no arguments returning a float
    params : sequence of Tensor or numpy.ndarray
        Parameters `f` depends on
    eps : float, optional
        Step size
    coordinates : sequence of array_like of int, optional
        Flat indices to evaluate for each parameter. Coordinates not
        evaluated are NaN in the result. The default evaluates all.

    Returns
    -------
    list of numpy.ndarray

    Raises
    ------
    ValueError
        If `eps` is not positive
    RuntimeError
        If `f` returns a non-finite value

    """

    if not eps > 0:
        raise ValueError("eps must be positive")

    grads = []

    for n, param in enumerate(params):

        array = param.data if isinstance(param, Tensor) else param
        flat = array.reshape(-1)

        if coordinates is None:
            indices = range(flat.size)
            grad = np.zeros(array.shape)
        else:
            indices = np.asarray(coordinates[n], dtype=int)
            grad = np.full(array.shape, np.nan)

        grad_flat = grad.reshape(-1)

        for i in indices:
            original = flat[i]

            flat[i] = original + eps
            f_plus = f()
            flat[i] = original - eps
            f_minus = f()
            flat[i] = original

            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                logger.error(
                    "f computed a non-finite value at parameter {}, "
                    "coordinate {}".format(n, i))
                raise RuntimeError("Non-finite value computed")

            grad_flat[i] = (f_plus - f_minus) / (2 * eps)

        grads.append(grad)

    return grads


def relative_error(analytic, numeric, floor=0.0):
    """Relative error between two gradient arrays

    NaN entries of `numeric` (coordinates not evaluated) are ignored.

    Parameters
    ----------
    analytic, numeric : array_like
    floor : float, optional
        Lower bound of the normalizing scale, so that vanishing gradients
        are compared in absolute terms

    Returns
    -------
    float

    """

    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)

    keep = np.isfinite(numeric)
    a = analytic[keep]
    n = numeric[keep]

    scale = max(np.linalg.norm(a) + np.linalg.norm(n), floor)

    if scale == 0:
        return 0.0

    return float(np.linalg.norm(a - n) / scale)
