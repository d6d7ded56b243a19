"""Dense tensors with reverse-mode automatic differentiation.

A :class:`Tensor` wraps a numpy array. Every differentiable operation
returns a new tensor that remembers its inputs and a closure mapping the
output gradient to input gradients. :class:`Tape` linearises that graph
into topological order and :func:`backward` walks it in reverse.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterator, Sequence

import numpy as np

from ..errors import ContractError, NumericalError, ShapeError

_GRAD_ENABLED = True

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


def _as_float_array(data, dtype=None) -> np.ndarray:
    arr = np.asarray(data)
    if dtype is None:
        dtype = arr.dtype if arr.dtype in (np.float32, np.float64) else np.float32
    return arr.astype(dtype, copy=False)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        self.data = _as_float_array(data, dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None
        self.op = "leaf"

    # -- introspection -----------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op}{flag})"

    # -- operators ---------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("division by a tensor is not supported")
        return mul(self, 1.0 / other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None):
        return tsum(self, axis)

    def mean(self, axis=None):
        return mean(self, axis)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def relu(self):
        return relu(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)


def make_result(data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn, op: str) -> Tensor:
    """Wrap an op's forward value and register it on the graph."""
    if not np.all(np.isfinite(data)):
        raise NumericalError(f"{op}: forward produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.op = op
    needs = _GRAD_ENABLED and any(p.requires_grad for p in parents)
    out.requires_grad = needs
    out._parents = tuple(parents) if needs else ()
    out._backward = backward_fn if needs else None
    return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Operations behind a root tensor, in topological order (inputs first)."""

    def __init__(self, nodes: list[Tensor]):
        self.nodes = nodes

    @classmethod
    def record(cls, root: Tensor) -> "Tape":
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.nodes)

    def leaves(self) -> list[Tensor]:
        return [n for n in self.nodes if n.is_leaf and n.requires_grad]


def backward(loss: Tensor, tape: Tape | None = None) -> Tape:
    """Populate ``.grad`` of every leaf that requires grad with d(loss)/d(leaf).

    Gradients accumulate into existing ``.grad`` buffers, so call
    ``zero_grad`` between independent passes.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss does not depend on any tensor that requires grad")
    if tape is None:
        tape = Tape.record(loss)
    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            pg = np.asarray(pg, dtype=parent.data.dtype)
            if pg.shape != parent.shape:
                raise ShapeError(f"{node.op}: gradient shape {pg.shape} != input shape {parent.shape}")
            if not np.all(np.isfinite(pg)):
                raise NumericalError(f"{node.op}: non-finite gradient")
            key = id(parent)
            pending[key] = pg if key not in pending else pending[key] + pg
    return tape


# -- elementwise and structural ops ------------------------------------------


def _broadcasts_last_axis(a_shape, b_shape, op: str) -> bool:
    if a_shape == b_shape:
        return False
    if len(b_shape) == 1 and len(a_shape) >= 1 and b_shape[0] == a_shape[-1]:
        return True
    raise ShapeError(f"{op}: shapes {a_shape} and {b_shape} are incompatible")


def _reduce_to_last_axis(g: np.ndarray) -> np.ndarray:
    return g.reshape(-1, g.shape[-1]).sum(axis=0)


def add(a: Tensor, b) -> Tensor:
    """a + b for equal shapes, a last-axis bias vector, or a python scalar."""
    if not isinstance(b, Tensor):
        if np.ndim(b) == 0:
            return make_result(a.data + a.data.dtype.type(b), (a,), lambda g: (g,), "add_scalar")
        b = Tensor(b, dtype=a.dtype)
    bias = _broadcasts_last_axis(a.shape, b.shape, "add")

    def _backward(g):
        return g, (_reduce_to_last_axis(g) if bias else g)

    return make_result(a.data + b.data, (a, b), _backward, "add")


def add_constant(a: Tensor, c: np.ndarray) -> Tensor:
    """a + c where c is a non-differentiable array broadcastable to a's shape."""
    c = np.asarray(c, dtype=a.dtype)
    data = a.data + c
    if data.shape != a.shape:
        raise ShapeError(f"add_constant: constant {c.shape} would expand {a.shape}")
    return make_result(data, (a,), lambda g: (g,), "add_constant")


def neg(a: Tensor) -> Tensor:
    return make_result(-a.data, (a,), lambda g: (-g,), "neg")


def sub(a: Tensor, b) -> Tensor:
    if isinstance(b, Tensor):
        return add(a, neg(b))
    return add(a, -np.asarray(b))


def mul(a: Tensor, b) -> Tensor:
    """Elementwise product with a tensor, a constant array of equal shape, or a scalar."""
    if not isinstance(b, Tensor):
        if np.ndim(b) == 0:
            s = a.data.dtype.type(b)
            return make_result(a.data * s, (a,), lambda g: (g * s,), "mul_scalar")
        c = np.asarray(b, dtype=a.dtype)
        if c.shape != a.shape:
            raise ShapeError(f"mul: constant shape {c.shape} != {a.shape}")
        return make_result(a.data * c, (a,), lambda g: (g * c,), "mul_constant")
    gain = _broadcasts_last_axis(a.shape, b.shape, "mul")

    def _backward(g):
        gb = g * a.data
        return g * b.data, (_reduce_to_last_axis(gb) if gain else gb)

    return make_result(a.data * b.data, (a, b), _backward, "mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; 2-D, or batched with identical leading extents."""
    if a.ndim < 2 or b.ndim < 2 or a.ndim != b.ndim:
        raise ShapeError(f"matmul: unsupported ranks {a.shape} @ {b.shape}")
    if a.shape[:-2] != b.shape[:-2] or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not align")

    def _backward(g):
        return g @ np.swapaxes(b.data, -1, -2), np.swapaxes(a.data, -1, -2) @ g

    return make_result(a.data @ b.data, (a, b), _backward, "matmul")


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x[..., k] @ weight[k, n] (+ bias[n])."""
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise ShapeError(f"linear: input {x.shape} does not match weight {weight.shape}")
    k, n = weight.shape
    if bias is not None and bias.shape != (n,):
        raise ShapeError(f"linear: bias {bias.shape} != ({n},)")
    flat = x.data.reshape(-1, k)
    out = flat @ weight.data
    if bias is not None:
        out = out + bias.data
    out = out.reshape(x.shape[:-1] + (n,))

    def _backward(g):
        g2 = g.reshape(-1, n)
        gx = (g2 @ weight.data.T).reshape(x.shape)
        gw = flat.T @ g2
        if bias is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_result(out, parents, _backward, "linear")


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return make_result(np.where(mask, a.data, 0).astype(a.dtype), (a,), lambda g: (g * mask,), "relu")


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return make_result(out, (a,), lambda g: (g * out,), "exp")


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return make_result(out, (a,), lambda g: (g / a.data,), "log")


def tsum(a: Tensor, axis=None) -> Tensor:
    out = np.asarray(a.data.sum(axis=axis), dtype=a.dtype)

    def _backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return make_result(out, (a,), _backward, "sum")


def mean(a: Tensor, axis=None) -> Tensor:
    count = a.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(tsum(a, axis), 1.0 / float(count))


def reshape(a: Tensor, shape) -> Tensor:
    out = a.data.reshape(shape)
    return make_result(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a: Tensor, axes=None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    out = np.transpose(a.data, axes)
    return make_result(out, (a,), lambda g: (np.transpose(g, inverse),), "transpose")
