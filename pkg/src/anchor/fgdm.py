"""Frequency-guided deformable module (FGDM) and its cost model.

The block splits channels into ``N`` equal partitions ``x_0 .. x_{N-1}`` and
runs ``N - 1`` cascaded stages. Stage ``i`` holds a deformable operator
``D_i`` (kernel ``K_i``, dilation from the routed period) and three pointwise
convolutions:

    d     = D_i(y_{i-1})                         width i*g -> i*g
    left  = phi_c(x_i) + d                       phi_c: g -> i*g
    right = d * phi_v(y_{i-1})                   phi_v: i*g -> i*g
    y_i   = phi_f([left || right])               phi_f: 2*i*g -> (i+1)*g

with ``g = C / N`` and ``y_0 = x_0``. The fusion ``phi_f`` keeps the width of
``y_i`` at ``(i + 1) * g`` so the block output has ``C`` channels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .deform import DefOp, DefOpConfig
from .errors import AnchorRuntimeError, ConfigError
from .interpolation import InterpKernel
from .layers import Layer, Pointwise
from .spectral import SpectralPrior

ENERGY_ASC_KERNEL = "energy_asc_kernel"
ENERGY_DESC_KERNEL = "energy_desc_kernel"
ROUTING_ORDERS = (ENERGY_ASC_KERNEL, ENERGY_DESC_KERNEL)


@dataclass(frozen=True)
class FgdmConfig:
    channels: int
    partitions: int = 2
    kernel_schedule: tuple[int, ...] = (3,)
    interp: InterpKernel = field(default_factory=InterpKernel.gaussian)
    routing_order: str = ENERGY_ASC_KERNEL
    topk: int | None = None
    offset_mode: str = "predicted"

    def __post_init__(self):
        N = self.partitions
        if N < 2:
            raise ConfigError(f"FGDM needs at least 2 partitions, got {N}")
        if self.channels % N:
            raise ConfigError(f"channel count {self.channels} is not divisible by {N} partitions")
        ks = tuple(int(k) for k in self.kernel_schedule)
        object.__setattr__(self, "kernel_schedule", ks)
        if len(ks) != N - 1:
            raise ConfigError(f"kernel schedule needs {N - 1} entries, got {len(ks)}")
        if any(k < 1 or k % 2 == 0 for k in ks):
            raise ConfigError(f"kernel sizes must be odd positive integers, got {ks}")
        if any(a >= b for a, b in zip(ks, ks[1:])):
            raise ConfigError(f"kernel schedule must be strictly increasing, got {ks}")
        if self.routing_order not in ROUTING_ORDERS:
            raise ConfigError(f"routing_order must be one of {ROUTING_ORDERS}")
        topk = N - 1 if self.topk is None else self.topk
        if topk != N - 1:
            raise ConfigError(f"topk must equal partitions - 1 = {N - 1}, got {topk}")
        object.__setattr__(self, "topk", topk)

    @property
    def group(self) -> int:
        return self.channels // self.partitions


@dataclass(frozen=True)
class Route:
    stage: int
    kernel: int
    period: int
    energy: float


@dataclass(frozen=True)
class RouteAssignment:
    routes: tuple[Route, ...]
    warnings: tuple[str, ...] = ()

    @property
    def periods(self) -> tuple[int, ...]:
        return tuple(r.period for r in self.routes)

    @property
    def kernels(self) -> tuple[int, ...]:
        return tuple(r.kernel for r in self.routes)


def channel_split(x: np.ndarray, partitions: int) -> list[np.ndarray]:
    """Split (B, C, L) or (C, L) into ``partitions`` contiguous channel slices."""
    if partitions < 2:
        raise ConfigError(f"partitions must be >= 2, got {partitions}")
    C = x.shape[-2]
    if C % partitions:
        raise ConfigError(f"{C} channels cannot be split into {partitions} equal partitions")
    g = C // partitions
    return [x[..., i * g:(i + 1) * g, :] for i in range(partitions)]


def assign_routes(prior: SpectralPrior | None, config: FgdmConfig) -> RouteAssignment:
    """Pair the energy-ranked periods with the kernel schedule.

    ``energy_asc_kernel`` gives the highest-energy period to the smallest
    kernel; ``energy_desc_kernel`` reverses the pairing. ``prior=None`` means
    the input showed no periodicity and every stage falls back to period 1.
    """
    stages = config.partitions - 1
    notes: list[str] = []
    if prior is None:
        ranked = [(1, 0.0)] * stages
        notes.append("no periodicity in the input; all stages use period 1")
    else:
        pairs = list(zip(prior.periods, (float(e) for e in prior.top_energies)))
        if len(pairs) < stages:
            notes.append(f"prior has {len(pairs)} periods for {stages} stages; periods are cycled")
        ranked = [pairs[j % len(pairs)] for j in range(stages)]
    if config.routing_order == ENERGY_DESC_KERNEL:
        ranked = ranked[::-1]
    for note in notes:
        warnings.warn(note, stacklevel=2)
    routes = tuple(Route(i + 1, k, p, e)
                   for i, (k, (p, e)) in enumerate(zip(config.kernel_schedule, ranked)))
    return RouteAssignment(routes, tuple(notes))


class FGDM(Layer):
    def __init__(self, config: FgdmConfig, routes: RouteAssignment,
                 rng: np.random.Generator | None = None, zero_fusion: bool = True):
        super().__init__()
        if len(routes.routes) != config.partitions - 1:
            raise ConfigError("route assignment does not match the number of stages")
        self.config = config
        self.routes = routes
        g = config.group
        last = config.partitions - 1
        for route in routes.routes:
            i = route.stage
            self.children[f"defop{i}"] = DefOp(
                DefOpConfig(i * g, i * g, route.kernel, route.period, config.interp,
                            config.offset_mode), rng)
            self.children[f"phi_c{i}"] = Pointwise(g, i * g, rng)
            self.children[f"phi_v{i}"] = Pointwise(i * g, i * g, rng)
            self.children[f"phi_f{i}"] = Pointwise(2 * i * g, (i + 1) * g, rng,
                                                   zero_init=zero_fusion and i == last)

    def stage(self, i: int) -> tuple[DefOp, Pointwise, Pointwise, Pointwise]:
        c = self.children
        return c[f"defop{i}"], c[f"phi_c{i}"], c[f"phi_v{i}"], c[f"phi_f{i}"]

    def forward(self, x):
        cfg = self.config
        if x.ndim != 3 or x.shape[1] != cfg.channels:
            raise ConfigError(f"FGDM expects (B, {cfg.channels}, L), got {x.shape}")
        g = cfg.group
        parts = channel_split(x, cfg.partitions)
        y = parts[0]
        saved = []
        for i in range(1, cfg.partitions):
            defop, phi_c, phi_v, phi_f = self.stage(i)
            d = defop.forward(y)
            gate = phi_v.forward(y)
            left = phi_c.forward(parts[i]) + d
            right = d * gate
            y = phi_f.forward(np.concatenate([left, right], axis=1))
            if y.shape[1] != (i + 1) * g:
                raise AnchorRuntimeError(
                    f"width law violated at stage {i}: {y.shape[1]} != {(i + 1) * g}")
            saved.append((d, gate))
        self._save(saved=saved)
        return y

    def backward(self, dy):
        saved = self._take()["saved"]
        g = self.config.group
        dparts = [None] * self.config.partitions
        for i in range(self.config.partitions - 1, 0, -1):
            defop, phi_c, phi_v, phi_f = self.stage(i)
            d, gate = saved[i - 1]
            dcat = phi_f.backward(dy)
            dleft, dright = dcat[:, :i * g], dcat[:, i * g:]
            dparts[i] = phi_c.backward(dleft)
            dd = dleft + dright * gate
            dy = phi_v.backward(dright * d) + defop.backward(dd)
        dparts[0] = dy
        return np.concatenate(dparts, axis=1)


@dataclass(frozen=True)
class CostReport:
    cost_baseline: int
    cost_spatial: Fraction
    rfft_cost: float

    @property
    def ratio(self) -> float:
        return float(self.cost_spatial / self.cost_baseline)

    @property
    def ratio_exact(self) -> Fraction:
        return self.cost_spatial / self.cost_baseline

    @property
    def rfft_fraction(self) -> float:
        """RFFT cost relative to the partitioned spatial cost."""
        return self.rfft_cost / float(self.cost_spatial)


def cost_model(channels: int, length: int, partitions: int, kernel_schedule) -> CostReport:
    """Multiply-accumulate counts of full-width multi-branch convolution versus the
    partitioned cascade, plus the ``C * L * log2(L)`` cost of the prior."""
    if partitions < 2:
        raise ConfigError(f"partitions must be >= 2, got {partitions}")
    if channels < 1 or length < 2:
        raise ConfigError("channels must be >= 1 and length >= 2")
    ks = [int(k) for k in kernel_schedule]
    if not ks or any(k < 1 for k in ks):
        raise ConfigError(f"invalid kernel schedule {kernel_schedule}")
    baseline = length * channels ** 2 * sum(ks)
    spatial = length * Fraction(channels ** 2, partitions ** 2) * sum(
        i * i * k for i, k in enumerate(ks, start=1))
    return CostReport(baseline, spatial, channels * length * math.log2(length))
