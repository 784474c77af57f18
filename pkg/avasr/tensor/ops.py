"""Differentiable primitives.

Every function takes and returns :class:`Tensor` objects and records a
backward closure producing one gradient per input.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np

from avasr.exceptions import DimensionError
from avasr.tensor.core import Tensor


def as_tensor(value: Any, like: Tensor | None = None) -> Tensor:
    """Wrap constants; python scalars adopt the dtype of ``like``."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(value, dtype=dtype)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` back down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shapes(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise DimensionError(
            f"{op}: shapes {a.shape} and {b.shape} do not broadcast",
            details={"left": list(a.shape), "right": list(b.shape)},
        ) from e


def add(a: Any, b: Any) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    _broadcast_shapes(a, b, "add")

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), _backward)


def sub(a: Any, b: Any) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    _broadcast_shapes(a, b, "sub")

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), _backward)


def neg(a: Tensor) -> Tensor:
    return Tensor.from_op(-a.data, (a,), lambda g: (-g,))


def mul(a: Any, b: Any) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    _broadcast_shapes(a, b, "mul")

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), _backward)


def div(a: Any, b: Any) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    _broadcast_shapes(a, b, "div")
    out = a.data / b.data

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * out / b.data, b.shape),
        )

    return Tensor.from_op(out, (a, b), _backward)


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a python constant."""
    return Tensor.from_op(a.data * factor, (a,), lambda g: (g * factor,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    return Tensor.from_op(np.log(a.data), (a,), lambda g: (g / a.data,))


def sin(a: Tensor) -> Tensor:
    return Tensor.from_op(np.sin(a.data), (a,), lambda g: (g * np.cos(a.data),))


def relu(a: Tensor) -> Tensor:
    positive = a.data > 0
    return Tensor.from_op(
        np.where(positive, a.data, 0).astype(a.dtype),
        (a,),
        lambda g: (g * positive,),
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product ``[..., m, k] @ [..., k, n] -> [..., m, n]``.

    Leading batch dimensions broadcast as in numpy.

    Raises:
        DimensionError: If inner dimensions or batch dimensions disagree.
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul: cannot multiply shapes {a.shape} and {b.shape}",
            details={"left": list(a.shape), "right": list(b.shape)},
        )
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError as e:
        raise DimensionError(
            f"matmul: batch dimensions of {a.shape} and {b.shape} do not broadcast",
            details={"left": list(a.shape), "right": list(b.shape)},
        ) from e

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return Tensor.from_op(np.matmul(a.data, b.data), (a, b), _backward)


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    """Permute axes; the default swaps the last two."""
    if axes is None:
        axes = list(range(a.ndim))
        axes[-2], axes[-1] = axes[-1], axes[-2]
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return Tensor.from_op(
        np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),)
    )


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    original = a.shape
    return Tensor.from_op(
        a.data.reshape(tuple(shape)), (a,), lambda g: (g.reshape(original),)
    )


def sum(  # noqa: A001
    a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False
) -> Tensor:
    original = a.shape

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, original).copy(),)

    return Tensor.from_op(
        np.asarray(a.data.sum(axis=axis, keepdims=keepdims)), (a,), _backward
    )


def mean(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.data.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[i] for i in axes]))
    return scale(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically safe softmax (max-subtraction) along ``axis``."""
    _check_axis(x, axis)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op(out, (x,), _backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    _check_axis(x, axis)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return Tensor.from_op(out, (x,), _backward)


def _check_axis(x: Tensor, axis: int) -> None:
    if not -x.ndim <= axis < max(x.ndim, 1):
        raise DimensionError(
            f"axis {axis} is invalid for shape {x.shape}",
            details={"shape": list(x.shape), "axis": axis},
        )


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the final axis, then apply learnable gain and bias."""
    if gain.shape != (x.shape[-1],) or bias.shape != (x.shape[-1],):
        raise DimensionError(
            f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match input {x.shape}",
            details={"input": list(x.shape), "gain": list(gain.shape)},
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std
    width = x.shape[-1]
    lead = tuple(range(x.ndim - 1))

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        gxhat = g * gain.data
        grad_x = (
            inv_std
            / width
            * (
                width * gxhat
                - gxhat.sum(axis=-1, keepdims=True)
                - xhat * (gxhat * xhat).sum(axis=-1, keepdims=True)
            )
        )
        return grad_x, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return Tensor.from_op(xhat * gain.data + bias.data, (x, gain, bias), _backward)


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: scaled at train time, identity at inference."""
    if not training or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return Tensor.from_op(x.data * keep, (x,), lambda g: (g * keep,))


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of ``table`` for integer ``ids`` of any shape."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError(
            f"embedding: ids outside [0, {table.shape[0]})",
            details={"rows": table.shape[0], "min": int(ids.min()), "max": int(ids.max())},
        )

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        return (grad,)

    return Tensor.from_op(table.data[ids], (table,), _backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise DimensionError("concat: no tensors given")
    ndim = tensors[0].ndim
    norm_axis = axis % ndim
    for t in tensors:
        if t.ndim != ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != norm_axis
        ):
            raise DimensionError(
                f"concat: shapes {[t.shape for t in tensors]} disagree off axis {axis}",
                details={"shapes": [list(t.shape) for t in tensors]},
            )
    bounds = np.cumsum([t.shape[norm_axis] for t in tensors])[:-1]

    def _backward(g: np.ndarray) -> list[np.ndarray]:
        return np.split(g, bounds, axis=norm_axis)

    return Tensor.from_op(
        np.concatenate([t.data for t in tensors], axis=norm_axis), tuple(tensors), _backward
    )


def narrow(x: Tensor, index: int, axis: int = 1) -> Tensor:
    """Select one position along ``axis`` keeping the axis (length 1)."""
    norm_axis = axis % x.ndim
    slicer = [slice(None)] * x.ndim
    slicer[norm_axis] = slice(index, index + 1) if index != -1 else slice(-1, None)
    key = tuple(slicer)

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros_like(x.data)
        grad[key] = g
        return (grad,)

    return Tensor.from_op(x.data[key], (x,), _backward)
