"""Period priors from the batch-averaged amplitude spectrum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NoPeriodicityError, ValidationError
from .numerics import as_array, check_finite


@dataclass(frozen=True)
class SpectralPrior:
    energies: np.ndarray
    top_freqs: tuple[int, ...]
    periods: tuple[int, ...]
    window_length: int

    @property
    def k(self) -> int:
        return len(self.periods)

    @property
    def top_energies(self) -> np.ndarray:
        return self.energies[list(self.top_freqs)]

    def rescaled(self, factor: int) -> "SpectralPrior":
        """Prior for a feature map downsampled by ``factor`` (periods floor-divided, min 1)."""
        periods = tuple(max(1, p // factor) for p in self.periods)
        return SpectralPrior(self.energies, self.top_freqs, periods, self.window_length)


def spectral_energy(batch) -> np.ndarray:
    """Mean amplitude spectrum over batch and channels with the DC bin zeroed.

    Bins whose energy sits at floating-point noise level relative to the
    input scale are flushed to zero so that a constant batch yields an
    exactly zero vector.
    """
    x = as_array(batch)
    if x.ndim != 3:
        raise ValidationError(f"expected a (B, C, L) batch, got shape {x.shape}")
    L = x.shape[-1]
    if L < 4:
        raise ValidationError(f"spectral energy needs L >= 4, got {L}")
    check_finite(x, "batch")
    mag = np.abs(np.fft.rfft(x, axis=-1))
    energies = mag.reshape(-1, mag.shape[-1]).mean(axis=0)
    energies[0] = 0.0
    floor = 64 * np.finfo(np.float64).eps * L * float(np.max(np.abs(x)))
    energies[energies <= floor] = 0.0
    return energies


def topk_periods(energies, k: int, length: int) -> SpectralPrior:
    """Pick the ``k`` strongest non-DC bins and map each to ``floor(L / f)``.

    Equal energies are ordered by lower frequency first.
    """
    a = np.asarray(energies, dtype=np.float64)
    if a.shape != (length // 2 + 1,):
        raise ValidationError(
            f"energy vector for L={length} must have {length // 2 + 1} entries, got {a.shape}"
        )
    if not 1 <= k <= length // 2:
        raise ConfigError(f"top-k must lie in [1, {length // 2}] for L={length}, got {k}")
    if a[0] != 0:
        raise ValidationError("DC bin must be removed (energies[0] == 0) before ranking")
    if not np.any(a[1:] > 0):
        raise NoPeriodicityError("no spectral energy outside DC; input has no periodicity")
    freqs = np.arange(1, a.size)
    order = np.lexsort((freqs, -a[1:]))
    top = tuple(int(f) for f in freqs[order[:k]])
    periods = tuple(length // f for f in top)
    return SpectralPrior(a.copy(), top, periods, length)


def extract_prior(batch, k: int) -> SpectralPrior:
    x = as_array(batch)
    return topk_periods(spectral_energy(x), k, x.shape[-1])
