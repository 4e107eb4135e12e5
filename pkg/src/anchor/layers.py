"""Minimal layer protocol with hand-written backward passes.

A layer owns ``params`` and matching ``grads`` dictionaries, may own child
layers, and keeps the cache of its most recent forward call. ``backward``
consumes that cache: calling it twice, or after a newer forward, raises
:class:`~anchor.errors.UsageError`.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .errors import UsageError, ValidationError


class Cache:
    __slots__ = ("owner", "generation", "data", "consumed")

    def __init__(self, owner: "Layer", generation: int, data: dict):
        self.owner = owner
        self.generation = generation
        self.data = data
        self.consumed = False


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.children: dict[str, Layer] = {}
        self._generation = 0
        self._cache: Cache | None = None

    def add_param(self, name: str, value: np.ndarray) -> None:
        self.params[name] = np.asarray(value, dtype=np.float64)
        self.grads[name] = np.zeros_like(self.params[name])

    def parameters(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray, np.ndarray]]:
        """Yield ``(qualified_name, param, grad)`` over this layer and its children."""
        for name, value in self.params.items():
            yield prefix + name, value, self.grads[name]
        for cname, child in self.children.items():
            yield from child.parameters(f"{prefix}{cname}.")

    def num_parameters(self) -> int:
        return sum(p.size for _, p, _ in self.parameters())

    def zero_grad(self) -> None:
        for _, _, g in self.parameters():
            g.fill(0.0)

    def _save(self, **data) -> Cache:
        self._generation += 1
        self._cache = Cache(self, self._generation, data)
        return self._cache

    def _take(self, cache: Cache | None = None) -> dict:
        cache = self._cache if cache is None else cache
        if cache is None:
            raise UsageError(f"{type(self).__name__}.backward called before forward")
        if cache.owner is not self or cache.generation != self._generation:
            raise UsageError(f"stale cache passed to {type(self).__name__}.backward")
        if cache.consumed:
            raise UsageError(f"{type(self).__name__}.backward already consumed this cache")
        cache.consumed = True
        return cache.data

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    __call__ = forward


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Pointwise(Layer):
    """1x1 convolution on (B, C_in, L)."""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator | None = None,
                 zero_init: bool = False):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        if zero_init or rng is None:
            w = np.zeros((out_channels, in_channels))
        else:
            w = uniform_init(rng, (out_channels, in_channels), in_channels)
        self.add_param("weight", w)
        self.add_param("bias", np.zeros(out_channels))

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ValidationError(
                f"pointwise conv expects (B, {self.in_channels}, L), got {x.shape}")
        self._save(x=x)
        return np.einsum("oi,bil->bol", self.params["weight"], x) + self.params["bias"][:, None]

    def backward(self, dy):
        x = self._take()["x"]
        self.grads["weight"] += np.einsum("bol,bil->oi", dy, x)
        self.grads["bias"] += dy.sum(axis=(0, 2))
        return np.einsum("oi,bol->bil", self.params["weight"], dy)


class Linear(Layer):
    """Dense map on (B, F)."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator | None = None,
                 zero_init: bool = False):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        if zero_init or rng is None:
            w = np.zeros((out_features, in_features))
        else:
            w = uniform_init(rng, (out_features, in_features), in_features)
        self.add_param("weight", w)
        self.add_param("bias", np.zeros(out_features))

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValidationError(f"linear layer expects (B, {self.in_features}), got {x.shape}")
        self._save(x=x)
        return x @ self.params["weight"].T + self.params["bias"]

    def backward(self, dy):
        x = self._take()["x"]
        self.grads["weight"] += dy.T @ x
        self.grads["bias"] += dy.sum(axis=0)
        return dy @ self.params["weight"]
