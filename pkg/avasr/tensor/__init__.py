"""Minimal dense tensors with reverse-mode automatic differentiation."""

from avasr.tensor import ops
from avasr.tensor.core import (
    Tensor,
    backward,
    default_dtype,
    get_default_dtype,
    is_grad_enabled,
    no_grad,
    set_default_dtype,
)
from avasr.tensor.gradcheck import (
    analytic_grad,
    finite_diff_grad,
    max_relative_error,
    relative_error,
    sample_coords,
)

__all__ = [
    "Tensor",
    "ops",
    "backward",
    "no_grad",
    "is_grad_enabled",
    "default_dtype",
    "get_default_dtype",
    "set_default_dtype",
    "finite_diff_grad",
    "analytic_grad",
    "relative_error",
    "max_relative_error",
    "sample_coords",
]
