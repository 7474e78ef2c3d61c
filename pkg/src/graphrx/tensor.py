"""Dense float32 tensors with a tape-based reverse-mode differentiator.

Every operation executes eagerly on numpy arrays. When a :class:`Tape` is
active on the current thread and at least one operand is tracked (a
:class:`Parameter` or the output of an earlier recorded op), the operation
is appended to the tape together with the closure that maps the output
gradient back onto its inputs.

Broadcasting is deliberately narrow: binary operations accept equal shapes,
a scalar against anything, or a single row (``(d,)`` or ``(1, d)``) against
an ``(n, d)`` matrix.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError, DimensionError, DomainError, GraphIndexError, NumericError

DTYPE = np.float32

_local = threading.local()


def _dt():
    return getattr(_local, "dtype", DTYPE)


class float64_evaluation:
    """Evaluate forward passes in float64 on this thread.

    Only the finite-difference oracle uses this; models always train in
    float32.
    """

    def __enter__(self):
        self._prev = _dt()
        _local.dtype = np.float64
        return self

    def __exit__(self, *exc):
        _local.dtype = self._prev


def _tape_stack() -> list["Tape"]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


def active_tape() -> "Tape | None":
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Immutable float32 array, optionally tied to a node on a tape."""

    __slots__ = ("_data", "_tape", "_node")

    def __init__(self, data) -> None:
        arr = np.array(data, dtype=_dt())
        arr.flags.writeable = False
        self._data = arr
        self._tape: Tape | None = None
        self._node: int | None = None

    @classmethod
    def _wrap(cls, arr: np.ndarray, tape: "Tape | None" = None, node: int | None = None) -> "Tensor":
        t = cls.__new__(cls)
        arr = np.asarray(arr, dtype=_dt(), order="C")
        arr.flags.writeable = False
        t._data = arr
        t._tape = tape
        t._node = node
        return t

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def numpy(self) -> np.ndarray:
        return self._data.copy()

    def item(self) -> float:
        if self._data.size != 1:
            raise DimensionError(f"item() needs a single value, got shape {self.shape}")
        return float(self._data.reshape(()))

    def tolist(self):
        return self._data.tolist()

    def __len__(self) -> int:
        return self._data.shape[0]

    def __repr__(self) -> str:
        tracked = ", tracked" if self._node is not None else ""
        return f"Tensor(shape={self.shape}{tracked}, data={self._data.tolist()!r})"

    # operator sugar; semantics live in the module-level functions
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


class Parameter(Tensor):
    """A trainable leaf. Its value is replaced (never mutated) on update."""

    __slots__ = ("name", "grad", "state")

    def __init__(self, data, name: str = "param") -> None:
        super().__init__(data)
        self.name = name
        self.grad = np.zeros(self._data.shape, dtype=_dt())
        self.state: dict[str, object] = {}

    def assign(self, value) -> None:
        arr = np.array(value, dtype=_dt())
        if arr.shape != self._data.shape:
            raise DimensionError(f"cannot assign shape {arr.shape} to parameter {self.name!r} of shape {self.shape}")
        arr.flags.writeable = False
        self._data = arr

    def zero_grad(self) -> None:
        self.grad = np.zeros(self._data.shape, dtype=_dt())

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class _Node:
    kind: str
    inputs: tuple[int | None, ...]
    vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None
    shape: tuple[int, ...]
    param: Parameter | None = None


@dataclass
class Tape:
    """Append-only record of tracked operations on one thread."""

    nodes: list[_Node] = field(default_factory=list)
    gradients: dict[int, np.ndarray] = field(default_factory=dict)
    _leaves: dict[int, int] = field(default_factory=dict, repr=False)

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise ContractError("tape exited out of order or from another thread")
        stack.pop()

    def _node_of(self, x: Tensor) -> int | None:
        if isinstance(x, Parameter):
            key = id(x)
            node = self._leaves.get(key)
            if node is None:
                node = len(self.nodes)
                self.nodes.append(_Node("leaf", (), None, x.shape, param=x))
                self._leaves[key] = node
            return node
        if x._tape is self:
            return x._node
        return None

    def _record(self, kind: str, inputs: tuple[int | None, ...], vjp, shape) -> int:
        self.nodes.append(_Node(kind, inputs, vjp, tuple(shape)))
        return len(self.nodes) - 1

    def grad(self, x: Tensor) -> np.ndarray | None:
        """Accumulated gradient of a tensor recorded on this tape."""
        if isinstance(x, Parameter):
            node = self._leaves.get(id(x))
        else:
            node = x._node if x._tape is self else None
        if node is None:
            return None
        return self.gradients.get(node)

    def backward(self, loss: Tensor) -> None:
        if loss.shape != ():
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        start = self._node_of(loss) if isinstance(loss, Parameter) else (loss._node if loss._tape is self else None)
        if start is None:
            raise ContractError("loss is not tracked on this tape")
        pending: dict[int, np.ndarray] = {start: np.ones((), dtype=_dt())}
        for nid in range(start, -1, -1):
            g = pending.pop(nid, None)
            if g is None:
                continue
            node = self.nodes[nid]
            prev = self.gradients.get(nid)
            self.gradients[nid] = g if prev is None else prev + g
            if node.param is not None:
                node.param.grad = (node.param.grad + g).astype(_dt())
                continue
            for inp, gi in zip(node.inputs, node.vjp(g)):
                if inp is None or gi is None:
                    continue
                gi = np.asarray(gi, dtype=_dt()).reshape(self.nodes[inp].shape)
                acc = pending.get(inp)
                pending[inp] = gi if acc is None else acc + gi


def _apply(kind: str, out: np.ndarray, inputs: Sequence[Tensor], vjp) -> Tensor:
    tape = active_tape()
    if tape is None:
        return Tensor._wrap(out)
    ids = tuple(tape._node_of(x) for x in inputs)
    if all(i is None for i in ids):
        return Tensor._wrap(out)
    node = tape._record(kind, ids, vjp, np.shape(out))
    return Tensor._wrap(out, tape, node)


def backward(loss: Tensor) -> None:
    """Run the reverse sweep on the tape that recorded ``loss``."""
    tape = loss._tape if loss._tape is not None else active_tape()
    if tape is None:
        raise ContractError("loss is not tracked on any tape")
    tape.backward(loss)


# ---------------------------------------------------------------- broadcasting

def _is_scalar(shape) -> bool:
    return len(shape) == 0 or shape == (1,)


def _is_row_of(row, mat) -> bool:
    return len(mat) == 2 and (row == (mat[1],) or row == (1, mat[1]))


def _broadcast(a: Tensor, b: Tensor, op: str):
    """Output shape plus per-operand gradient reducers."""
    sa, sb = a.shape, b.shape
    ident = lambda g: g  # noqa: E731
    if sa == sb:
        return sa, ident, ident
    if _is_scalar(sa):
        return sb, (lambda g: g.sum().reshape(sa)), ident
    if _is_scalar(sb):
        return sa, ident, (lambda g: g.sum().reshape(sb))
    if _is_row_of(sa, sb):
        return sb, (lambda g: g.sum(axis=0).reshape(sa)), ident
    if _is_row_of(sb, sa):
        return sa, ident, (lambda g: g.sum(axis=0).reshape(sb))
    raise DimensionError(f"{op}: incompatible shapes {sa} and {sb}")


def _binary_inputs(a, b, op):
    a, b = as_tensor(a), as_tensor(b)
    shape, ra, rb = _broadcast(a, b, op)
    return a, b, ra, rb


def add(a, b) -> Tensor:
    a, b, ra, rb = _binary_inputs(a, b, "add")
    return _apply("add", a.data + b.data, (a, b), lambda g: (ra(g), rb(g)))


def sub(a, b) -> Tensor:
    a, b, ra, rb = _binary_inputs(a, b, "sub")
    return _apply("sub", a.data - b.data, (a, b), lambda g: (ra(g), rb(-g)))


def mul(a, b) -> Tensor:
    a, b, ra, rb = _binary_inputs(a, b, "mul")
    x, y = a.data, b.data
    return _apply("mul", x * y, (a, b), lambda g: (ra(g * y), rb(g * x)))


# ---------------------------------------------------------------- unary ops

def neg(x) -> Tensor:
    x = as_tensor(x)
    return _apply("neg", -x.data, (x,), lambda g: (-g,))


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return _apply("relu", np.where(mask, x.data, 0), (x,), lambda g: (g * mask,))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    v = x.data.astype(np.float64)
    out = np.where(v >= 0, 1 / (1 + np.exp(-np.abs(v))), np.exp(-np.abs(v)) / (1 + np.exp(-np.abs(v))))
    out = out.astype(_dt())
    return _apply("sigmoid", out, (x,), lambda g: (g * out * (1 - out),))


def exp(x) -> Tensor:
    x = as_tensor(x)
    with np.errstate(over="ignore"):
        out = np.exp(x.data)
    if not np.isfinite(out).all():
        raise NumericError("exp overflowed float32 range")
    return _apply("exp", out, (x,), lambda g: (g * out,))


def log(x) -> Tensor:
    x = as_tensor(x)
    if (x.data <= 0).any():
        bad = float(x.data[x.data <= 0].flat[0])
        raise DomainError(f"log of non-positive value {bad}")
    v = x.data
    return _apply("log", np.log(v), (x,), lambda g: (g / v,))


def softplus(x) -> Tensor:
    """log(1 + exp(x)), evaluated without overflow."""
    x = as_tensor(x)
    v = x.data
    out = np.maximum(v, 0) + np.log1p(np.exp(-np.abs(v)))
    sig = sigmoid(Tensor._wrap(v)).data
    return _apply("softplus", out, (x,), lambda g: (g * sig,))


def abs_(x) -> Tensor:
    x = as_tensor(x)
    s = np.sign(x.data)
    return _apply("abs", np.abs(x.data), (x,), lambda g: (g * s,))


def sqrt(x) -> Tensor:
    x = as_tensor(x)
    if (x.data < 0).any():
        raise DomainError("sqrt of negative value")
    out = np.sqrt(x.data)
    # the derivative at 0 is taken as 0 so zero-distance scores stay finite
    with np.errstate(divide="ignore"):
        d = np.where(out > 0, 0.5 / np.where(out > 0, out, 1), 0)
    return _apply("sqrt", out, (x,), lambda g: (g * d,))


def cos(x) -> Tensor:
    x = as_tensor(x)
    v = x.data
    return _apply("cos", np.cos(v), (x,), lambda g: (-g * np.sin(v),))


def sin(x) -> Tensor:
    x = as_tensor(x)
    v = x.data
    return _apply("sin", np.sin(v), (x,), lambda g: (g * np.cos(v),))


_UNARY = {
    "relu": relu, "sigmoid": sigmoid, "exp": exp, "log": log, "neg": neg,
    "abs": abs_, "sqrt": sqrt, "softplus": softplus, "cos": cos, "sin": sin,
}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(op: str, *args) -> Tensor:
    if op in _BINARY:
        if len(args) != 2:
            raise ContractError(f"{op} takes two operands")
        return _BINARY[op](*args)
    if op in _UNARY:
        if len(args) != 1:
            raise ContractError(f"{op} takes one operand")
        return _UNARY[op](args[0])
    raise ContractError(f"unknown elementwise op {op!r}")


# ---------------------------------------------------------------- linear algebra and reductions

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not chain")
    x, y = a.data, b.data
    return _apply("matmul", x @ y, (a, b), lambda g: (g @ y.T, x.T @ g))


def _check_axis(x: Tensor, axis: int | None) -> int | None:
    if axis is None:
        return None
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"axis {axis} out of range for shape {x.shape}")
    return axis % x.ndim


def reduce(op: str, x, axis: int | None = None) -> Tensor:
    x = as_tensor(x)
    ax = _check_axis(x, axis)
    v = x.data
    shape = x.shape
    if op == "sum":
        out = v.sum(axis=ax)
        return _apply("sum", out, (x,), lambda g: (np.broadcast_to(_expand(g, ax, shape), shape),))
    if op == "mean":
        count = v.size if ax is None else shape[ax]
        if count == 0:
            raise DimensionError("mean over an empty extent")
        out = v.mean(axis=ax, dtype=np.float64).astype(_dt())
        return _apply("mean", out, (x,), lambda g: (np.broadcast_to(_expand(g, ax, shape), shape) / count,))
    if op == "max":
        if v.size == 0:
            raise DimensionError("max over an empty tensor")
        if ax is None:
            flat = np.argmax(v)
            out = v.reshape(-1)[flat]

            def vjp(g):
                grad = np.zeros(v.size, dtype=_dt())
                grad[flat] = g
                return (grad.reshape(shape),)
        else:
            arg = np.expand_dims(np.argmax(v, axis=ax), ax)
            out = np.take_along_axis(v, arg, axis=ax).squeeze(ax)

            def vjp(g):
                grad = np.zeros(shape, dtype=_dt())
                np.put_along_axis(grad, arg, np.expand_dims(g, ax), axis=ax)
                return (grad,)
        return _apply("max", np.asarray(out), (x,), vjp)
    raise ContractError(f"unknown reduction {op!r}")


def _expand(g: np.ndarray, ax: int | None, shape) -> np.ndarray:
    if ax is None:
        return np.reshape(g, (1,) * len(shape))
    return np.expand_dims(g, ax)


def sum_(x, axis: int | None = None) -> Tensor:
    return reduce("sum", x, axis)


def mean(x, axis: int | None = None) -> Tensor:
    return reduce("mean", x, axis)


def max_(x, axis: int | None = None) -> Tensor:
    return reduce("max", x, axis)


# ---------------------------------------------------------------- indexing

def _as_index(idx, n: int) -> np.ndarray:
    arr = np.asarray(idx, dtype=np.int64).reshape(-1)
    if arr.size:
        bad = arr[(arr < 0) | (arr >= n)]
        if bad.size:
            raise GraphIndexError(f"index {int(bad[0])} out of range for {n} rows")
    return arr


def gather_rows(x, idx) -> Tensor:
    x = as_tensor(x)
    if x.ndim == 0:
        raise DimensionError("gather_rows needs at least one dimension")
    n = x.shape[0]
    ix = _as_index(idx, n)
    shape = x.shape

    def vjp(g):
        grad = np.zeros(shape, dtype=_dt())
        np.add.at(grad, ix, g)
        return (grad,)

    return _apply("gather_rows", x.data[ix], (x,), vjp)


def scatter_add_rows(src, idx, n: int) -> Tensor:
    src = as_tensor(src)
    if src.ndim == 0:
        raise DimensionError("scatter_add_rows needs at least one dimension")
    ix = _as_index(idx, n)
    if ix.size != src.shape[0]:
        raise DimensionError(f"scatter_add_rows: {ix.size} indices for {src.shape[0]} rows")
    out = np.zeros((n,) + src.shape[1:], dtype=_dt())
    np.add.at(out, ix, src.data)
    return _apply("scatter_add_rows", out, (src,), lambda g: (g[ix],))


def scale_rows(x, w) -> Tensor:
    """Multiply row i of ``x`` by the scalar ``w[i]``."""
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim == 0 or w.shape != (x.shape[0],):
        raise DimensionError(f"scale_rows: weights {w.shape} do not match rows of {x.shape}")
    wv = w.data.reshape((-1,) + (1,) * (x.ndim - 1))
    xv = x.data

    def vjp(g):
        gw = (g * xv).reshape(xv.shape[0], -1).sum(axis=1)
        return (g * wv, gw)

    return _apply("scale_rows", xv * wv, (x, w), vjp)


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    old = x.shape
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError as exc:
        raise DimensionError(f"cannot reshape {old} to {tuple(shape)}") from exc
    return _apply("reshape", out, (x,), lambda g: (g.reshape(old),))


def slice_cols(x, start: int, stop: int | None = None, step: int = 1) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 2:
        raise DimensionError(f"slice_cols needs a matrix, got shape {x.shape}")
    sl = slice(start, stop, step)
    shape = x.shape

    def vjp(g):
        grad = np.zeros(shape, dtype=_dt())
        grad[:, sl] = g
        return (grad,)

    return _apply("slice_cols", x.data[:, sl], (x,), vjp)


def detach(x) -> Tensor:
    return Tensor._wrap(as_tensor(x).data)


# ---------------------------------------------------------------- optimizers

def zero_grad(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


def optimizer_step(kind: str, params: Iterable[Parameter], lr: float = 1e-3,
                   betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> None:
    """Apply one in-place SGD or Adam update using each parameter's gradient."""
    params = list(params)
    for p in params:
        if not np.isfinite(p.grad).all():
            raise NumericError(f"non-finite gradient in parameter {p.name!r}")
    if kind == "sgd":
        for p in params:
            p.assign(p.data - _dt()(lr) * p.grad)
            p.state["step"] = int(p.state.get("step", 0)) + 1
    elif kind == "adam":
        b1, b2 = betas
        for p in params:
            g = p.grad.astype(_dt())
            t = int(p.state.get("step", 0)) + 1
            m = p.state.get("m")
            v = p.state.get("v")
            if m is None:
                m = np.zeros_like(g)
                v = np.zeros_like(g)
            m = (_dt()(b1) * m + _dt()(1 - b1) * g).astype(_dt())
            v = (_dt()(b2) * v + _dt()(1 - b2) * g * g).astype(_dt())
            m_hat = m / _dt()(1 - b1 ** t)
            v_hat = v / _dt()(1 - b2 ** t)
            p.assign(p.data - _dt()(lr) * m_hat / (np.sqrt(v_hat) + _dt()(eps)))
            p.state.update(step=t, m=m, v=v)
    else:
        raise ContractError(f"unknown optimizer {kind!r}")


class Optimizer:
    """Holds hyperparameters and a parameter list; state stays on the parameters."""

    def __init__(self, kind: str, params: Iterable[Parameter], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        if kind not in ("sgd", "adam"):
            raise ContractError(f"unknown optimizer {kind!r}")
        self.kind = kind
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps

    def zero_grad(self) -> None:
        zero_grad(self.params)

    def step(self) -> None:
        optimizer_step(self.kind, self.params, lr=self.lr, betas=self.betas, eps=self.eps)
