"""Basic layers: linear, layer norm, embedding, dropout, feed-forward."""

from __future__ import annotations

import numpy as np

from avasr.nn.module import Module, Parameter, xavier_uniform
from avasr.tensor import Tensor, ops


class Linear(Module):
    """``y = x W + b`` with ``W`` of shape ``[in_dim, out_dim]``."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(xavier_uniform(rng, in_dim, out_dim))
        self.bias = Parameter(np.zeros(out_dim)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = ops.matmul(x, self.weight)
        return ops.add(y, self.bias) if self.bias is not None else y


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.gain = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gain, self.bias, self.eps)


class Embedding(Module):
    def __init__(self, num_embeddings: int, dim: int, rng: np.random.Generator):
        super().__init__()
        self.weight = Parameter(rng.normal(0.0, dim**-0.5, size=(num_embeddings, dim)))

    def __call__(self, ids: np.ndarray) -> Tensor:
        return ops.embedding(self.weight, ids)


class Dropout(Module):
    """Inverted dropout drawing from the run's shared generator."""

    def __init__(self, rate: float, rng: np.random.Generator):
        super().__init__()
        self.rate = rate
        self.rng = rng

    def __call__(self, x: Tensor) -> Tensor:
        return ops.dropout(x, self.rate, self.rng, self.training)


class FeedForward(Module):
    """Position-wise ``d_model -> d_ff -> d_model`` with ReLU."""

    def __init__(self, d_model: int, d_ff: int, dropout: float, rng: np.random.Generator):
        super().__init__()
        self.w1 = Linear(d_model, d_ff, rng)
        self.w2 = Linear(d_ff, d_model, rng)
        self.dropout = Dropout(dropout, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.w2(self.dropout(ops.relu(self.w1(x))))
