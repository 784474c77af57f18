"""Finite-difference gradient oracle."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from avasr.tensor.core import Tensor, backward, no_grad


def _evaluate(f: Callable[[], Tensor | float]) -> float:
    value = f()
    return float(value.data) if isinstance(value, Tensor) else float(value)


def finite_diff_grad(
    f: Callable[[], Tensor | float],
    params: Sequence[Tensor],
    h: float = 1e-5,
    coords: Sequence[np.ndarray] | None = None,
) -> list[np.ndarray]:
    """Central-difference estimate ``(f(p+h) - f(p-h)) / 2h`` per coordinate.

    ``f`` must be deterministic (dropout disabled) and read the parameters
    in place; each coordinate is perturbed and restored. ``coords`` limits
    the estimate to the given flat indices of each parameter (other entries
    stay zero).
    """
    estimates: list[np.ndarray] = []
    with no_grad():
        for n, param in enumerate(params):
            grad = np.zeros(param.shape, dtype=np.float64)
            if not param.data.flags.c_contiguous:
                param.data = np.ascontiguousarray(param.data)
            flat = param.data.reshape(-1)
            indices = range(flat.size) if coords is None else coords[n]
            for i in indices:
                original = flat[i]
                flat[i] = original + h
                plus = _evaluate(f)
                flat[i] = original - h
                minus = _evaluate(f)
                flat[i] = original
                grad.reshape(-1)[i] = (plus - minus) / (2.0 * h)
            estimates.append(grad)
    return estimates


def analytic_grad(f: Callable[[], Tensor], params: Sequence[Tensor]) -> list[np.ndarray]:
    """Run backward() on ``f()`` and collect gradients (zeros where untouched)."""
    for param in params:
        param.zero_grad()
    backward(f())
    return [
        np.zeros(p.shape) if p.grad is None else p.grad.astype(np.float64) for p in params
    ]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-12) -> float:
    """``||a - n|| / (||a|| + ||n||)``; zero when both vanish."""
    denom = float(np.linalg.norm(analytic) + np.linalg.norm(numeric))
    if denom < floor:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / denom


def sample_coords(
    params: Sequence[Tensor], per_param: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Up to ``per_param`` distinct flat indices of every parameter."""
    return [
        rng.choice(p.data.size, size=min(per_param, p.data.size), replace=False)
        for p in params
    ]


def max_relative_error(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    coords: Sequence[np.ndarray] | None = None,
) -> float:
    """Largest per-parameter relative error between backward() and central differences.

    With ``coords`` only the sampled entries of each gradient are compared.
    """
    analytic = analytic_grad(f, params)
    numeric = finite_diff_grad(f, params, h, coords)
    if coords is not None:
        analytic = [a.reshape(-1)[idx] for a, idx in zip(analytic, coords)]
        numeric = [n.reshape(-1)[idx] for n, idx in zip(numeric, coords)]
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))
