"""Sub-pixel sampling of 1-D feature sequences.

Two rules are provided: piecewise-linear ("bilinear", C0) and a normalised
Gaussian radial-basis kernel (C-infinity). Both expose the exact value, the
derivative with respect to the sampling coordinate, and the per-grid-point
weights that form the derivative with respect to the features.

Grid points outside ``[0, L)`` behave as zero padding: they contribute a
feature value of 0 and receive no feature gradient. For the Gaussian rule
they keep their weight in the normaliser unless the kernel is built with
``renormalize_in_range=True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ValidationError

BILINEAR = "bilinear"
GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class InterpKernel:
    kind: str
    sigma: float | None = None
    window_radius: int | None = None
    renormalize_in_range: bool = False

    def __post_init__(self):
        if self.kind == BILINEAR:
            object.__setattr__(self, "sigma", None)
            object.__setattr__(self, "window_radius", None)
            return
        if self.kind != GAUSSIAN:
            raise ConfigError(f"unknown interpolation kind {self.kind!r}")
        sigma = 1.0 if self.sigma is None else float(self.sigma)
        if not sigma > 0 or not math.isfinite(sigma):
            raise ConfigError(f"Gaussian sigma must be positive, got {self.sigma}")
        radius = default_radius(sigma) if self.window_radius is None else self.window_radius
        if int(radius) != radius or radius < 1:
            raise ConfigError(f"window radius must be an integer >= 1, got {radius}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "window_radius", int(radius))

    @classmethod
    def bilinear(cls) -> "InterpKernel":
        return cls(BILINEAR)

    @classmethod
    def gaussian(cls, sigma: float = 1.0, window_radius: int | None = None,
                 renormalize_in_range: bool = False) -> "InterpKernel":
        return cls(GAUSSIAN, sigma, window_radius, renormalize_in_range)

    @property
    def taps(self) -> int:
        """Grid points touched per sample."""
        return 2 if self.kind == BILINEAR else 2 * self.window_radius + 1

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma, "window_radius": self.window_radius,
                "renormalize_in_range": self.renormalize_in_range}


def default_radius(sigma: float) -> int:
    # ceil(3 sigma) covers > 99.7 % of the mass
    return max(2, math.ceil(3.0 * sigma))


@dataclass
class Sampled:
    """Result of sampling ``x`` of shape (B, C, L) at positions (B, S, P).

    ``idx``/``valid``/``alpha`` have shape (B, S, P, J); ``values`` and
    ``dvalue_dp`` have shape (B, C, S, P).
    """

    idx: np.ndarray
    valid: np.ndarray
    alpha: np.ndarray
    values: np.ndarray
    dvalue_dp: np.ndarray
    length: int

    def backward(self, grad_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Push ``dL/dvalues`` back to ``(dL/dx, dL/dpositions)``."""
        B, C = grad_values.shape[:2]
        L = self.length
        dpos = np.einsum("bcsp,bcsp->bsp", grad_values, self.dvalue_dp)
        contrib = grad_values[..., None] * self.alpha[:, None]
        flat = (np.arange(B)[:, None, None, None, None] * C
                + np.arange(C)[None, :, None, None, None]) * L + self.idx[:, None]
        mask = np.broadcast_to(self.valid[:, None], flat.shape)
        dx = np.bincount(flat[mask], weights=contrib[mask], minlength=B * C * L)
        return dx.reshape(B, C, L), dpos


def sample(x: np.ndarray, positions: np.ndarray, kernel: InterpKernel) -> Sampled:
    """Sample every channel of ``x`` (B, C, L) at ``positions`` (B, S, P)."""
    B, C, L = x.shape
    pos = positions
    if kernel.kind == BILINEAR:
        q_left = np.floor(pos)
        d = pos - q_left
        idx = np.stack([q_left, q_left + 1.0], axis=-1).astype(np.int64)
        alpha = np.stack([1.0 - d, d], axis=-1)
    else:
        radius = kernel.window_radius
        offsets = np.arange(-radius, radius + 1, dtype=np.float64)
        centre = np.floor(pos + 0.5)
        q = centre[..., None] + offsets
        dist = pos[..., None] - q
        w = np.exp(-(dist * dist) / (2.0 * kernel.sigma ** 2))
        idx = q.astype(np.int64)
    valid = (idx >= 0) & (idx < L)
    if kernel.kind == GAUSSIAN:
        if kernel.renormalize_in_range:
            w = np.where(valid, w, 0.0)
        total = w.sum(axis=-1, keepdims=True)
        alpha = np.divide(w, total, out=np.zeros_like(w), where=total > 0)

    safe = np.where(valid, idx, 0)
    gathered = x[np.arange(B)[:, None, None, None, None],
                 np.arange(C)[None, :, None, None, None],
                 safe[:, None]]
    gathered = np.where(valid[:, None], gathered, 0.0)
    values = np.einsum("bcspj,bspj->bcsp", gathered, alpha)

    if kernel.kind == BILINEAR:
        dvalue_dp = gathered[..., 1] - gathered[..., 0]
    else:
        # mean-shift form: (1/sigma^2) sum_q alpha_q (q - p) (x(q) - x(p))
        shift = (alpha * (-dist))[:, None]
        dvalue_dp = np.einsum("bcspj,bcspj->bcsp", shift, gathered - values[..., None])
        dvalue_dp /= kernel.sigma ** 2
    return Sampled(idx, valid, alpha, values, dvalue_dp, L)


@dataclass(frozen=True)
class InterpResult:
    value: float
    dvalue_dp: float
    weights: list[tuple[int, float]]


def _sample_scalar(x, p: float, kernel: InterpKernel) -> Sampled:
    seq = np.asarray(x, dtype=np.float64)
    if seq.ndim != 1 or seq.size < 1:
        raise ValidationError(f"expected a non-empty 1-D sequence, got shape {seq.shape}")
    if not math.isfinite(p):
        raise ValidationError(f"sampling coordinate must be finite, got {p}")
    return sample(seq[None, None, :], np.array([[[float(p)]]]), kernel)


def _result(s: Sampled) -> InterpResult:
    weights = [(int(q), float(a)) for q, a in zip(s.idx[0, 0, 0], s.alpha[0, 0, 0])]
    return InterpResult(float(s.values[0, 0, 0, 0]), float(s.dvalue_dp[0, 0, 0, 0]), weights)


def interp_bilinear(x, p: float) -> InterpResult:
    """Linear blend of ``x[floor(p)]`` and ``x[floor(p) + 1]``.

    At integer ``p`` the position derivative is the right-hand one,
    ``x[p + 1] - x[p]``.
    """
    return _result(_sample_scalar(x, p, InterpKernel.bilinear()))


def interp_gaussian(x, p: float, kernel: InterpKernel | None = None) -> InterpResult:
    kernel = InterpKernel.gaussian() if kernel is None else kernel
    if kernel.kind != GAUSSIAN:
        raise ConfigError("interp_gaussian needs a Gaussian kernel")
    return _result(_sample_scalar(x, p, kernel))


def interp_grad_features(x, p: float, kernel: InterpKernel) -> list[tuple[int, float]]:
    """``d value / d x[q]`` for every in-range grid point the sample touches."""
    s = _sample_scalar(x, p, kernel)
    return [(int(q), float(a))
            for q, a, ok in zip(s.idx[0, 0, 0], s.alpha[0, 0, 0], s.valid[0, 0, 0]) if ok]
