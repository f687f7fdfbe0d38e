# Licensed under the BSD 3-Clause License.

"""Reverse-mode automatic differentiation over dense float64 numpy arrays.

Every operation returns a new Tensor that remembers its parents and a backward
rule mapping the upstream gradient to one gradient per parent. backward()
orders the recorded operations topologically (the computation tape) and
replays them in reverse, accumulating into the leaves that require grad.
"""

from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from skelgnn.errors import AxisOutOfRange, DetachedFromTape, NotScalar, ShapeMismatch

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = ""

    # shape helpers
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else None

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op='{self._op}', data={self.data!r})"

    # operators
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p: float):
        return power(self, p)

    def sum(self, axis=None, keepdims: bool = False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes if axes else None)


class Parameter(Tensor):
    """Named trainable leaf.

    A constant 0/1 mask, when given, marks the entries that are trainable;
    layers multiply the parameter by its mask in their forward pass so masked
    entries never receive gradient.
    """

    __slots__ = ("name", "mask")

    def __init__(self, data, name: str = "", mask: Optional[np.ndarray] = None):
        super().__init__(data, requires_grad=True)
        self.name = name
        if mask is not None:
            mask = np.array(mask, dtype=np.float64)
            assert mask.shape == self.data.shape, (
                f"mask shape {mask.shape} does not match parameter shape "
                f"{self.data.shape}"
            )
        self.mask = mask

    @property
    def num_trainable(self) -> int:
        if self.mask is None:
            return int(self.data.size)
        return int(np.count_nonzero(self.mask))

    def masked(self) -> Tensor:
        if self.mask is None:
            return self
        return mul(self, self.mask)

    def __repr__(self):
        return f"Parameter(name='{self.name}', shape={self.shape})"


def as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(
    data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn, op: str
) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out._op = op
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward_fn
    else:
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sums grad over the axes that broadcasting expanded to reach its shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeMismatch(f"{op}: shapes {a.shape} and {b.shape} differ") from e


def _normalize_axis(axis: int, ndim: int, op: str) -> int:
    if not (-ndim <= axis < ndim):
        raise AxisOutOfRange(f"{op}: axis {axis} out of range for {ndim} dims")
    return axis % ndim


# ---------------------------------------------------------------------------
# computation tape
# ---------------------------------------------------------------------------


class TapeEntry(NamedTuple):
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: Optional[BackwardFn]


class ComputationTape:
    """Operations leading to an output, in an order where every operation's
    inputs come before it."""

    def __init__(self, entries: List[TapeEntry]):
        self.entries = entries

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_output(cls, output: Tensor) -> "ComputationTape":
        order: List[Tensor] = []
        visited = set()
        stack = [(output, False)]
        while stack:
            t, expanded = stack.pop()
            if expanded:
                order.append(t)
                continue
            if id(t) in visited:
                continue
            visited.add(id(t))
            stack.append((t, True))
            for p in t._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        return cls([TapeEntry(t._parents, t, t._backward) for t in order])


def backward(loss: Tensor):
    """Populates .grad of every leaf requiring grad with dLoss/dLeaf.

    Gradients accumulate across calls until the leaves are reset.
    """
    if loss.data.size != 1:
        raise NotScalar(f"backward needs a scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        raise DetachedFromTape("loss does not depend on any tensor requiring grad")
    tape = ComputationTape.from_output(loss)
    grads = {id(loss): np.ones_like(loss.data)}
    for entry in reversed(tape.entries):
        out = entry.output
        g = grads.pop(id(out), None)
        if g is None:
            continue
        if entry.backward is None:
            if out.requires_grad:
                out.grad = np.array(g) if out.grad is None else out.grad + g
            continue
        for parent, pg in zip(entry.inputs, entry.backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            prev = grads.get(id(parent))
            grads[id(parent)] = pg if prev is None else prev + pg


# ---------------------------------------------------------------------------
# elementwise and shape operations
# ---------------------------------------------------------------------------


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _record(a.data + b.data, (a, b), _backward, "add")


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _record(a.data - b.data, (a, b), _backward, "sub")


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def _backward(g):
        return (
            _unbroadcast(g * b.data, a.shape) if a.requires_grad else None,
            _unbroadcast(g * a.data, b.shape) if b.requires_grad else None,
        )

    return _record(a.data * b.data, (a, b), _backward, "mul")


def scale(a: ArrayLike, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _record(a.data * c, (a,), lambda g: (g * c,), "scale")


def neg(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _record(-a.data, (a,), lambda g: (-g,), "neg")


def power(a: ArrayLike, p: float) -> Tensor:
    a = as_tensor(a)
    p = float(p)
    out = a.data**p
    return _record(out, (a,), lambda g: (g * p * a.data ** (p - 1.0),), "pow")


def tanh(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _record(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def leaky_relu(a: ArrayLike, alpha: float = 0.2) -> Tensor:
    """max(x, alpha * x); the derivative at exactly 0 is alpha."""
    a = as_tensor(a)
    slope = np.where(a.data > 0, 1.0, alpha)
    return _record(a.data * slope, (a,), lambda g: (g * slope,), "leaky_relu")


def abs_(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    sign = np.sign(a.data)
    return _record(np.abs(a.data), (a,), lambda g: (g * sign,), "abs")


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Matrix product over the last two axes, broadcasting leading axes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatch(f"matmul needs matrices, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"matmul: inner dims of {a.shape} and {b.shape} differ")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeMismatch(f"matmul: {a.shape} and {b.shape} do not broadcast") from e

    def _backward(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return _record(out, (a, b), _backward, "matmul")


def concat(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    assert len(tensors) > 0, "concat needs at least one tensor"
    ndim = tensors[0].ndim
    axis = _normalize_axis(axis, ndim, "concat")
    ref = list(tensors[0].shape)
    for t in tensors[1:]:
        other = list(t.shape)
        if t.ndim != ndim or ref[:axis] + ref[axis + 1 :] != other[:axis] + other[
            axis + 1 :
        ]:
            raise ShapeMismatch(
                f"concat along axis {axis}: {tuple(ref)} and {t.shape} differ"
            )
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        return tuple(np.split(g, splits, axis=axis))

    out = np.concatenate([t.data for t in tensors], axis=axis)
    return _record(out, tensors, _backward, "concat")


def _reduced_axes(axis, ndim: int, op: str) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(_normalize_axis(ax, ndim, op) for ax in axis))


def sum_(a: ArrayLike, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _reduced_axes(axis, a.ndim, "sum")
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def _backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape),)

    return _record(out, (a,), _backward, "sum")


def mean(a: ArrayLike, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _reduced_axes(axis, a.ndim, "mean")
    count = float(np.prod([a.shape[ax] for ax in axes])) if axes else 1.0
    out = a.data.mean(axis=axes, keepdims=keepdims)

    def _backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, a.shape),)

    return _record(out, (a,), _backward, "mean")


def transpose(a: ArrayLike, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(_normalize_axis(ax, a.ndim, "transpose") for ax in axes)
    if sorted(axes) != list(range(a.ndim)):
        raise AxisOutOfRange(f"transpose: {axes} is not a permutation")
    inverse = tuple(np.argsort(axes))
    return _record(
        np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),), "T"
    )


def reshape(a: ArrayLike, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeMismatch(f"cannot reshape {a.shape} into {tuple(shape)}") from e
    return _record(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def take(a: ArrayLike, indices, axis: int) -> Tensor:
    """np.take along one axis; a scalar index drops the axis."""
    a = as_tensor(a)
    axis = _normalize_axis(axis, a.ndim, "take")
    out = np.take(a.data, indices, axis=axis)

    def _backward(g):
        full = np.zeros_like(a.data)
        index = [slice(None)] * a.ndim
        index[axis] = indices
        np.add.at(full, tuple(index), g)
        return (full,)

    return _record(out, (a,), _backward, "take")
