"""Adam, learning-rate schedules and gradient clipping."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence

import numpy as np

from avasr.exceptions import ConfigurationError, ContractError
from avasr.nn import Parameter


logger = logging.getLogger(__name__)


def lr_schedule(
    step: int, base_lr: float, warmup: int, kind: str = "warmup_inv_sqrt"
) -> float:
    """Learning rate for a 1-based ``step``.

    ``warmup_inv_sqrt`` ramps linearly to ``base_lr`` at ``step == warmup``
    and decays as ``sqrt(warmup / step)`` afterwards; ``constant`` always
    returns ``base_lr``.

    Examples:
        >>> lr_schedule(4000, 1e-3, 8000)
        0.0005
        >>> lr_schedule(32000, 1e-3, 8000)
        0.0005
    """
    if step < 1:
        raise ContractError(f"step must be >= 1, got {step}", error_code="INVALID_STEP")
    if kind == "constant":
        return base_lr
    if kind != "warmup_inv_sqrt":
        raise ConfigurationError(f"Unknown schedule: {kind}", error_code="INVALID_SCHEDULE")
    return base_lr * min(step / warmup, math.sqrt(warmup / step))


def clip_grad_norm(params: Iterable[Parameter], max_norm: float) -> float:
    """Rescale gradients so their global L2 norm is at most ``max_norm``.

    Returns:
        The norm before clipping
    """
    grads = [p.grad for p in params if p.grad is not None]
    total = math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads))
    if math.isfinite(total) and total > max_norm:
        factor = max_norm / (total + 1e-12)
        for g in grads:
            g *= factor
    return total


class Adam:
    """Adam with bias correction.

    A step whose gradients contain NaN or inf leaves parameters and moments
    untouched and increments :attr:`skipped`. Parameters without a gradient
    are not updated.

    Args:
        named_params: ``(name, parameter)`` pairs; names key the saved moments
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator offset
    """

    def __init__(
        self,
        named_params: Sequence[tuple[str, Parameter]],
        beta1: float = 0.9,
        beta2: float = 0.98,
        eps: float = 1e-9,
    ):
        self.params = dict(named_params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self.steps = 0
        self.skipped = 0

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()

    def step(self, lr: float) -> bool:
        """Apply one update; returns False when the step was skipped."""
        grads = {name: p.grad for name, p in self.params.items() if p.grad is not None}
        bad = [name for name, g in grads.items() if not np.all(np.isfinite(g))]
        if bad:
            self.skipped += 1
            logger.warning(
                "Skipping optimizer step: non-finite gradients in %s (skipped=%d)",
                ", ".join(bad[:5]),
                self.skipped,
            )
            return False

        self.steps += 1
        correction1 = 1.0 - self.beta1**self.steps
        correction2 = 1.0 - self.beta2**self.steps
        for name, grad in grads.items():
            param = self.params[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(grad)
            update = lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            param.data = (param.data - update).astype(param.data.dtype)
        return True

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {f"m.{name}": m for name, m in self.m.items()}
        state.update({f"v.{name}": v for name, v in self.v.items()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray], steps: int, skipped: int = 0) -> None:
        for name, param in self.params.items():
            for key, store in (("m", self.m), ("v", self.v)):
                arr = state.get(f"{key}.{name}")
                if arr is None or arr.shape != param.data.shape:
                    raise ContractError(
                        f"Optimizer state for {name} is missing or mis-shaped",
                        error_code="BAD_OPTIMIZER_STATE",
                    )
                store[name] = arr.astype(param.data.dtype)
        self.steps = steps
        self.skipped = skipped
