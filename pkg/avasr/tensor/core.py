"""Dense tensor with reverse-mode gradient record."""

from __future__ import annotations

import contextlib
import threading
from collections.abc import Callable, Iterator, Sequence
from typing import Any

import numpy as np

from avasr.exceptions import ConfigurationError, ContractError


_PRECISIONS: dict[str, type[np.floating[Any]]] = {
    "float32": np.float32,
    "float64": np.float64,
}

_default_dtype: type[np.floating[Any]] = np.float32
_grad_state = threading.local()

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


def get_default_dtype() -> type[np.floating[Any]]:
    """Return the dtype new tensors are created with."""
    return _default_dtype


def set_default_dtype(precision: str) -> None:
    """Select the process-wide tensor precision ("float32" or "float64")."""
    global _default_dtype
    if precision not in _PRECISIONS:
        raise ConfigurationError(
            f"Unknown precision: {precision}",
            error_code="INVALID_PRECISION",
            details={"precision": precision, "allowed": sorted(_PRECISIONS)},
        )
    _default_dtype = _PRECISIONS[precision]


@contextlib.contextmanager
def default_dtype(precision: str) -> Iterator[None]:
    """Temporarily switch precision, e.g. to float64 for gradient checks."""
    previous = _default_dtype
    set_default_dtype(precision)
    try:
        yield
    finally:
        _set_dtype_object(previous)


def _set_dtype_object(dtype: type[np.floating[Any]]) -> None:
    global _default_dtype
    _default_dtype = dtype


def is_grad_enabled() -> bool:
    """Graph recording is on unless the current thread is inside :func:`no_grad`."""
    return getattr(_grad_state, "enabled", True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Build no gradient graph inside the block (inference, finite differences)."""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


class Tensor:
    """n-dimensional array that records how it was produced.

    Graph nodes keep references to their parents and a backward function
    mapping the output gradient to one gradient per parent. Only leaves
    (tensors created directly with ``requires_grad=True``) store ``grad``;
    calling :func:`backward` twice without :meth:`zero_grad` accumulates.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        dtype: Any = None,
        name: str | None = None,
    ):
        if isinstance(data, Tensor):
            data = data.data
        self.data: np.ndarray = np.asarray(data, dtype=dtype or _default_dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None

    @classmethod
    def from_op(
        cls,
        data: np.ndarray,
        parents: Sequence[Tensor],
        backward: BackwardFn,
    ) -> Tensor:
        """Create an op output; the graph edge is recorded only when needed."""
        out = cls(data, dtype=data.dtype)
        if is_grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> Tensor:
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    # Operator sugar delegates to the differentiable primitives.
    def __add__(self, other: Any) -> Tensor:
        from avasr.tensor import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Any) -> Tensor:
        from avasr.tensor import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        from avasr.tensor import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        from avasr.tensor import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> Tensor:
        from avasr.tensor import ops

        return ops.div(self, other)

    def __neg__(self) -> Tensor:
        from avasr.tensor import ops

        return ops.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from avasr.tensor import ops

        return ops.matmul(self, other)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every trainable leaf reachable from ``loss``.

    Raises:
        ContractError: If ``loss`` is not a scalar.
    """
    if loss.data.ndim != 0:
        raise ContractError(
            f"backward() needs a scalar loss, got shape {loss.shape}",
            error_code="NON_SCALAR_LOSS",
            details={"shape": list(loss.shape)},
        )
    if not loss.requires_grad:
        return

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node._backward is None:
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue
        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = parent_grad
