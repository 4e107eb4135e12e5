"""Hierarchical backbone: stem, stages of residual FGDM blocks, task head.

Between stages the sequence is downsampled by strided averaging and the
global period prior is floor-divided by the cumulative stride (minimum 1),
so every stage is anchored to the same spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError
from .fgdm import ENERGY_ASC_KERNEL, FGDM, FgdmConfig, assign_routes
from .interpolation import InterpKernel
from .layers import Layer, Linear, Pointwise
from .spectral import SpectralPrior

TASKS = ("forecast", "reconstruction", "classification")


@dataclass(frozen=True)
class StageConfig:
    blocks: int
    width: int
    downsample: int = 1


@dataclass(frozen=True)
class BackboneConfig:
    in_channels: int
    input_length: int
    stem_width: int
    stages: tuple[StageConfig, ...]
    partitions: int = 2
    kernel_schedule: tuple[int, ...] = (3,)
    interp: InterpKernel = field(default_factory=InterpKernel.gaussian)
    routing_order: str = ENERGY_ASC_KERNEL
    offset_mode: str = "predicted"
    task: str = "forecast"
    horizon: int = 1
    num_classes: int = 2

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.stages:
            raise ConfigError("backbone needs at least one stage")
        stages = tuple(s if isinstance(s, StageConfig) else StageConfig(*s) for s in self.stages)
        object.__setattr__(self, "stages", stages)
        length = self.input_length
        for s in stages:
            if s.blocks < 0 or s.downsample < 1:
                raise ConfigError(f"invalid stage {s}")
            if s.width % self.partitions:
                raise ConfigError(f"stage width {s.width} is not divisible by {self.partitions}")
            if length % s.downsample:
                raise ConfigError(
                    f"length {length} is not divisible by downsample factor {s.downsample}")
            length //= s.downsample
        if self.task == "forecast" and self.horizon < 1:
            raise ConfigError("forecast horizon must be >= 1")
        if self.task == "classification" and self.num_classes < 2:
            raise ConfigError("classification needs at least 2 classes")

    @property
    def total_stride(self) -> int:
        return int(np.prod([s.downsample for s in self.stages]))

    def fgdm_config(self, width: int) -> FgdmConfig:
        return FgdmConfig(width, self.partitions, self.kernel_schedule, self.interp,
                          self.routing_order, None, self.offset_mode)


class Sequential(Layer):
    def __init__(self, layers: list[tuple[str, Layer]]):
        super().__init__()
        for name, layer in layers:
            self.children[name] = layer

    def forward(self, x):
        for layer in self.children.values():
            x = layer.forward(x)
        return x

    def backward(self, dy):
        for layer in reversed(list(self.children.values())):
            dy = layer.backward(dy)
        return dy


class Residual(Layer):
    def __init__(self, inner: Layer):
        super().__init__()
        self.children["inner"] = inner

    def forward(self, x):
        return x + self.children["inner"].forward(x)

    def backward(self, dy):
        return dy + self.children["inner"].backward(dy)


class AvgPool(Layer):
    def __init__(self, factor: int):
        super().__init__()
        self.factor = factor

    def forward(self, x):
        B, C, L = x.shape
        if L % self.factor:
            raise ValidationError(f"length {L} not divisible by pooling factor {self.factor}")
        self._save()
        return x.reshape(B, C, L // self.factor, self.factor).mean(axis=-1)

    def backward(self, dy):
        self._take()
        return np.repeat(dy, self.factor, axis=-1) / self.factor


class Upsample(Layer):
    def __init__(self, factor: int):
        super().__init__()
        self.factor = factor

    def forward(self, x):
        self._save()
        return np.repeat(x, self.factor, axis=-1)

    def backward(self, dy):
        self._take()
        B, C, L = dy.shape
        return dy.reshape(B, C, L // self.factor, self.factor).sum(axis=-1)


class ForecastHead(Layer):
    """Flatten (B, W, L') and project to (B, C_in, H)."""

    def __init__(self, width: int, length: int, in_channels: int, horizon: int, rng):
        super().__init__()
        self.out_shape = (in_channels, horizon)
        self.children["linear"] = Linear(width * length, in_channels * horizon, rng)

    def forward(self, x):
        self._save(shape=x.shape)
        out = self.children["linear"].forward(x.reshape(x.shape[0], -1))
        return out.reshape(x.shape[0], *self.out_shape)

    def backward(self, dy):
        shape = self._take()["shape"]
        dx = self.children["linear"].backward(dy.reshape(dy.shape[0], -1))
        return dx.reshape(shape)


class ClassifierHead(Layer):
    """Global average pool over time, then a linear layer to class logits."""

    def __init__(self, width: int, num_classes: int, rng):
        super().__init__()
        self.children["linear"] = Linear(width, num_classes, rng)

    def forward(self, x):
        self._save(length=x.shape[-1])
        return self.children["linear"].forward(x.mean(axis=-1))

    def backward(self, dy):
        L = self._take()["length"]
        d = self.children["linear"].backward(dy)
        return np.repeat(d[:, :, None] / L, L, axis=-1)


class Backbone(Sequential):
    def __init__(self, config: BackboneConfig, prior: SpectralPrior | None,
                 rng: np.random.Generator | None = None):
        layers: list[tuple[str, Layer]] = [("stem", Pointwise(config.in_channels,
                                                              config.stem_width, rng))]
        width = config.stem_width
        stride = 1
        self.route_assignments = []
        for s, stage in enumerate(config.stages):
            if stage.downsample > 1:
                stride *= stage.downsample
                layers.append((f"pool{s}", AvgPool(stage.downsample)))
            if stage.width != width:
                layers.append((f"proj{s}", Pointwise(width, stage.width, rng)))
                width = stage.width
            stage_prior = None if prior is None else prior.rescaled(stride)
            fcfg = config.fgdm_config(width)
            routes = assign_routes(stage_prior, fcfg)
            self.route_assignments.append(routes)
            for b in range(stage.blocks):
                layers.append((f"stage{s}_block{b}", Residual(FGDM(fcfg, routes, rng))))
        out_len = config.input_length // stride
        if config.task == "forecast":
            head = ForecastHead(width, out_len, config.in_channels, config.horizon, rng)
            layers.append(("head", head))
        elif config.task == "reconstruction":
            if stride > 1:
                layers.append(("upsample", Upsample(stride)))
            layers.append(("head", Pointwise(width, config.in_channels, rng)))
        else:
            layers.append(("head", ClassifierHead(width, config.num_classes, rng)))
        super().__init__(layers)
        self.config = config

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        cfg = self.config
        if x.ndim != 3 or x.shape[1:] != (cfg.in_channels, cfg.input_length):
            raise ValidationError(
                f"backbone expects (B, {cfg.in_channels}, {cfg.input_length}), got {x.shape}")
        return super().forward(x)
