"""Base class for parameterized layers."""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np

from avasr.tensor import Tensor, get_default_dtype


class Parameter(Tensor):
    """A trainable leaf tensor."""

    __slots__ = ()

    def __init__(self, data: np.ndarray, name: str | None = None):
        super().__init__(data, requires_grad=True, dtype=get_default_dtype(), name=name)


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Module:
    """Base class for layers.

    Attributes that are :class:`Parameter`, :class:`Module` or lists of
    modules are discovered automatically, in assignment order. A module
    referenced from two places (e.g. a tied layer) is reported once, under
    its first name.
    """

    def __init__(self) -> None:
        self.training = True

    def _children(self) -> Iterator[tuple[str, Module | Parameter]]:
        for name, value in vars(self).items():
            if isinstance(value, (Module, Parameter)):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield f"{name}.{i}", item

    def named_parameters(
        self, prefix: str = "", _seen: set[int] | None = None
    ) -> Iterator[tuple[str, Parameter]]:
        seen = set() if _seen is None else _seen
        for name, child in self._children():
            full = f"{prefix}{name}"
            if id(child) in seen:
                continue
            seen.add(id(child))
            if isinstance(child, Parameter):
                yield full, child
            else:
                yield from child.named_parameters(f"{full}.", seen)

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator[Module]:
        yield self
        for _, child in self._children():
            if isinstance(child, Module):
                yield from child.modules()

    def train(self, mode: bool = True) -> Module:
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> Module:
        return self.train(False)

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def num_parameters(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))
