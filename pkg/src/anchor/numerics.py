"""Dense-array substrate: the batch container, seeded RNG, real FFT and the
central finite-difference oracle used by every gradient check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError

DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class SeriesBatch:
    """Read-only ``(B, C, L)`` float64 array of time series."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 3:
            raise ValidationError(f"SeriesBatch needs a rank-3 array, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValidationError(f"SeriesBatch dims must all be >= 1, got {arr.shape}")
        check_finite(arr, "SeriesBatch")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def batch(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    @property
    def length(self) -> int:
        return self.data.shape[2]

    def __getitem__(self, idx):
        return self.data[idx]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def as_array(batch) -> np.ndarray:
    """Return the float64 ndarray behind a SeriesBatch or array-like."""
    if isinstance(batch, SeriesBatch):
        return batch.data
    return np.asarray(batch, dtype=np.float64)


def check_finite(arr: np.ndarray, what: str = "input") -> None:
    if not np.all(np.isfinite(arr)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
        raise ValidationError(f"{what} contains a non-finite value at index {bad}")


@dataclass(frozen=True)
class ComplexSpectrum:
    bins: np.ndarray
    origin_length: int

    def __post_init__(self):
        if len(self.bins) != self.origin_length // 2 + 1:
            raise ValidationError(
                f"spectrum of a length-{self.origin_length} signal needs "
                f"{self.origin_length // 2 + 1} bins, got {len(self.bins)}"
            )

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)


def rfft(signal) -> ComplexSpectrum:
    """Unnormalised forward real DFT, ``sum_t x[t] exp(-2 pi i f t / L)``."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValidationError(f"rfft expects a 1-D signal of length >= 2, got shape {x.shape}")
    check_finite(x, "signal")
    return ComplexSpectrum(np.fft.rfft(x), x.size)


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator backed by PCG64, whose stream is platform independent."""
    if seed < 0 or seed >= 2**64:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def finite_diff_grad(
    f: Callable[[np.ndarray], float], x, h: float = DEFAULT_FD_STEP
) -> np.ndarray:
    """Central-difference gradient of a scalar function.

    ``x`` may have any shape; the result has the same shape. ``f`` receives a
    perturbed copy, never ``x`` itself.
    """
    if not h > 0:
        raise ValidationError(f"finite-difference step must be positive, got {h}")
    x = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        fp = float(f(x))
        flat[k] = orig - h
        fm = float(f(x))
        flat[k] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValidationError(f"non-finite function value while perturbing component {k}")
        gflat[k] = (fp - fm) / (2.0 * h)
    return grad
