"""Period-anchored 1-D deformable convolution.

Tap ``n`` of the kernel centred on output position ``p0`` reads the input at

    p_n = p0 + period * n + offset_n(p0)

through an :class:`~anchor.interpolation.InterpKernel`. Offsets come from one
of three sources (``offset_mode``):

``"predicted"``
    a pointwise convolution of the input, one offset per tap and position,
    shared across input channels;
``"free"``
    one learnable offset per tap, shared over positions;
``"none"``
    no offsets; with bilinear sampling this is an ordinary dilated convolution.

The output keeps the input length. Padding is implicit: samples that fall
outside the sequence read zeros.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AnchorRuntimeError, ConfigError, ValidationError
from .interpolation import InterpKernel, sample
from .layers import Cache, Layer, uniform_init

OFFSET_MODES = ("predicted", "free", "none")


@dataclass(frozen=True)
class DefOpConfig:
    in_channels: int
    out_channels: int
    kernel_size: int = 3
    period: int = 1
    interp: InterpKernel = field(default_factory=InterpKernel.bilinear)
    offset_mode: str = "predicted"

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd and >= 1, got {self.kernel_size}")
        if self.period < 1:
            raise ConfigError(f"period must be >= 1, got {self.period}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ConfigError("channel counts must be positive")
        if self.offset_mode not in OFFSET_MODES:
            raise ConfigError(f"offset_mode must be one of {OFFSET_MODES}, got {self.offset_mode!r}")

    @property
    def tap_indices(self) -> np.ndarray:
        half = self.kernel_size // 2
        return np.arange(-half, half + 1)

    @property
    def span(self) -> int:
        return (self.kernel_size - 1) * self.period


def sampling_positions(p0: int, config: DefOpConfig, offsets) -> np.ndarray:
    offsets = np.asarray(offsets, dtype=np.float64)
    if offsets.shape != (config.kernel_size,):
        raise ValidationError(f"need {config.kernel_size} offsets, got shape {offsets.shape}")
    if not np.all(np.isfinite(offsets)):
        raise ValidationError("offsets must be finite")
    return p0 + config.period * config.tap_indices + offsets


class DefOp(Layer):
    """Deformable convolution with parameters ``weight`` (O, I, S), ``bias`` (O),
    and, depending on the offset mode, ``offset_weight`` (S, I) and
    ``offset_bias`` (S)."""

    def __init__(self, config: DefOpConfig, rng: np.random.Generator | None = None):
        super().__init__()
        self.config = config
        O, I, S = config.out_channels, config.in_channels, config.kernel_size
        if rng is None:
            w = np.zeros((O, I, S))
        else:
            w = uniform_init(rng, (O, I, S), I * S)
        self.add_param("weight", w)
        self.add_param("bias", np.zeros(O))
        if config.offset_mode == "predicted":
            self.add_param("offset_weight", np.zeros((S, I)))
        if config.offset_mode in ("predicted", "free"):
            self.add_param("offset_bias", np.zeros(S))

    def offsets(self, x: np.ndarray) -> np.ndarray:
        """Offsets of shape (B, S, L) for input ``x`` of shape (B, I, L)."""
        B, _, L = x.shape
        S = self.config.kernel_size
        mode = self.config.offset_mode
        if mode == "predicted":
            return (np.einsum("si,bil->bsl", self.params["offset_weight"], x)
                    + self.params["offset_bias"][None, :, None])
        if mode == "free":
            return np.broadcast_to(self.params["offset_bias"][None, :, None], (B, S, L)).copy()
        return np.zeros((B, S, L))

    def forward(self, x):
        cfg = self.config
        if x.ndim != 3 or x.shape[1] != cfg.in_channels:
            raise ConfigError(f"DefOp expects (B, {cfg.in_channels}, L) input, got {x.shape}")
        L = x.shape[2]
        if cfg.span >= 4 * L:
            warnings.warn(f"DefOp span {cfg.span} exceeds 4x the sequence length {L}",
                          stacklevel=2)
        off = self.offsets(x)
        base = np.arange(L)[None, :] + cfg.period * cfg.tap_indices[:, None]
        pos = base[None] + off
        s = sample(x, pos, cfg.interp)
        W = self.params["weight"]
        y = np.broadcast_to(self.params["bias"][None, :, None], (x.shape[0], cfg.out_channels, L)).copy()
        for n in range(cfg.kernel_size):
            y += np.matmul(W[:, :, n], s.values[:, :, n, :])
        if not np.all(np.isfinite(y)):
            b, o, p = (int(i) for i in np.argwhere(~np.isfinite(y))[0])
            raise AnchorRuntimeError(
                f"non-finite DefOp activation at batch {b}, channel {o}, position {p}")
        self._save(x=x, sampled=s, positions=pos)
        return y

    def backward(self, dy, cache: Cache | None = None):
        data = self._take(cache)
        x, s = data["x"], data["sampled"]
        W = self.params["weight"]
        self.grads["bias"] += dy.sum(axis=(0, 2))
        self.grads["weight"] += np.einsum("bol,bisl->ois", dy, s.values)
        grad_values = np.einsum("ois,bol->bisl", W, dy)
        dx, dpos = s.backward(grad_values)
        # d p_n / d offset_n == 1
        mode = self.config.offset_mode
        if mode in ("predicted", "free"):
            self.grads["offset_bias"] += dpos.sum(axis=(0, 2))
        if mode == "predicted":
            self.grads["offset_weight"] += np.einsum("bsl,bil->si", dpos, x)
            dx += np.einsum("si,bsl->bil", self.params["offset_weight"], dpos)
        return dx

    @property
    def last_positions(self) -> np.ndarray | None:
        """Sampling positions (B, S, L) used by the most recent forward."""
        return None if self._cache is None else self._cache.data["positions"]


def defop_forward(x, op: DefOp) -> tuple[np.ndarray, Cache]:
    y = op.forward(np.asarray(x, dtype=np.float64))
    return y, op._cache


def defop_backward(cache: Cache, dy) -> np.ndarray:
    return cache.owner.backward(np.asarray(dy, dtype=np.float64), cache)

