"""Deterministic synthetic signals and CSV ingestion."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ValidationError
from .numerics import SeriesBatch, make_rng

KINDS = ("fractional_sine", "multi_tone", "trend_plus_season", "anomaly_injected", "pulse_train")

# three base scales x three nonzero fractional parts
DEFAULT_FRACTIONAL_PERIODS = (8.3, 8.5, 8.7, 12.25, 12.5, 12.75, 20.2, 20.5, 20.8)


@dataclass(frozen=True)
class Component:
    period: float
    amplitude: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class SignalSpec:
    kind: str
    length: int
    components: tuple[Component, ...]
    noise_std: float = 0.0
    seed: int = 0
    channels: int = 1
    trend: float = 0.0
    anomaly_positions: tuple[int, ...] = ()
    anomaly_magnitudes: tuple[float, ...] = ()
    kernel_size: int = 3
    pulse_width: float = 1.5
    logistic_r: float = 3.8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"signal kind must be one of {KINDS}, got {self.kind!r}")
        comps = tuple(c if isinstance(c, Component) else Component(*c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ConfigError("signal needs at least one component")
        if self.kind in ("fractional_sine", "pulse_train") and len(comps) != 1:
            raise ConfigError(f"{self.kind} takes exactly one component")
        if self.kind == "pulse_train" and not (self.pulse_width > 0 and 0 < self.logistic_r <= 4):
            raise ConfigError("pulse_train needs pulse_width > 0 and 0 < logistic_r <= 4")
        if any(not c.period > 1 for c in comps):
            raise ConfigError("component periods must be > 1")
        if self.length < 4 or self.channels < 1:
            raise ConfigError("length must be >= 4 and channels >= 1")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be non-negative")
        if len(self.anomaly_positions) != len(self.anomaly_magnitudes):
            raise ConfigError("anomaly positions and magnitudes must pair up")
        if any(not 0 <= p < self.length for p in self.anomaly_positions):
            raise ConfigError("anomaly positions must lie inside the signal")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError("kernel_size must be odd and positive")
        longest = max(c.period for c in comps)
        if self.length < 4 * longest:
            warnings.warn(f"length {self.length} holds fewer than 4 cycles of period {longest}",
                          stacklevel=3)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Generated:
    batch: SeriesBatch
    true_periods: tuple[float, ...]
    integer_periods: tuple[int, ...]
    theoretical_offsets: dict[float, list[float]]
    anomaly_labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def metadata(self) -> dict:
        return {"true_periods": list(self.true_periods),
                "integer_periods": list(self.integer_periods),
                "theoretical_offsets": {str(k): v for k, v in self.theoretical_offsets.items()},
                "anomaly_positions": np.flatnonzero(self.anomaly_labels).tolist()}


def theoretical_offsets(period: float, kernel_size: int) -> list[float]:
    """Per-tap offsets that move the integer grid ``floor(T) * n`` onto ``T * n``."""
    frac = period - math.floor(period)
    half = kernel_size // 2
    return [n * frac for n in range(-half, half + 1)]


def _pulse_train(spec: SignalSpec, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Gaussian pulses every ``period`` samples whose heights follow the logistic
    map ``a <- r a (1 - a)``, so the next height is a quadratic function of the
    current one."""
    c = spec.components[0]
    shift = c.phase / (2 * np.pi) * c.period
    n = int(np.ceil(spec.length / c.period)) + 2
    heights = np.empty(n)
    heights[0] = rng.uniform(0.2, 0.8)
    for k in range(1, n):
        heights[k] = spec.logistic_r * heights[k - 1] * (1.0 - heights[k - 1])
    centres = np.arange(-1, n - 1) * c.period + shift
    bumps = np.exp(-((t[None, :] - centres[:, None]) ** 2) / (2 * spec.pulse_width ** 2))
    return c.amplitude * heights @ bumps


def generate(spec: SignalSpec) -> Generated:
    rng = make_rng(spec.seed)
    t = np.arange(spec.length, dtype=np.float64)
    if spec.kind == "pulse_train":
        clean = _pulse_train(spec, t, rng)
    else:
        clean = np.zeros(spec.length)
        for c in spec.components:
            clean += c.amplitude * np.sin(2 * np.pi * t / c.period + c.phase)
    if spec.kind == "trend_plus_season":
        clean += spec.trend * t
    data = np.repeat(clean[None, None, :], spec.channels, axis=1)
    if spec.noise_std > 0:
        data = data + rng.normal(0.0, spec.noise_std, size=data.shape)
    labels = np.zeros(spec.length, dtype=bool)
    if spec.kind == "anomaly_injected":
        for pos, mag in zip(spec.anomaly_positions, spec.anomaly_magnitudes):
            data[:, :, pos] += mag
            labels[pos] = True
    periods = tuple(c.period for c in spec.components)
    return Generated(
        SeriesBatch(data), periods, tuple(math.floor(p) for p in periods),
        {p: theoretical_offsets(p, spec.kernel_size) for p in periods}, labels)


@dataclass
class CsvMeta:
    names: list[str] | None
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    @property
    def standardized(self) -> bool:
        return self.mean is not None


def load_csv(path, header: bool = False, standardize: bool = False) -> tuple[SeriesBatch, CsvMeta]:
    """Read a CSV with one column per channel and one row per time step.

    Returns a ``(1, C, T)`` batch. With ``standardize`` each channel is shifted
    to zero mean and unit variance; the statistics are kept in the metadata
    for :func:`inverse_standardize`.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"CSV file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    names = None
    if header and rows:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise ValidationError(f"CSV file {path} holds no data rows")
    width = len(rows[0])
    values = np.empty((len(rows), width))
    first_data_row = 2 if header else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(
                f"ragged CSV: row {i + first_data_row} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ValidationError(
                    f"non-numeric cell {cell!r} at row {i + first_data_row}, column {j + 1}"
                ) from None
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"CSV file {path} contains non-finite values")
    data = values.T[None]
    meta = CsvMeta(names)
    if standardize:
        data, meta.mean, meta.std = standardize_channels(data)
    return SeriesBatch(data), meta


def standardize_channels(data: np.ndarray):
    mean = data.mean(axis=(0, 2))
    std = data.std(axis=(0, 2))
    std = np.where(std > 0, std, 1.0)
    return (data - mean[None, :, None]) / std[None, :, None], mean, std


def inverse_standardize(data, meta: CsvMeta) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if not meta.standardized:
        return data
    return data * meta.std[None, :, None] + meta.mean[None, :, None]


def sliding_windows(series: np.ndarray, lookback: int, horizon: int = 0,
                    stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Cut a (C, T) series into ``(N, C, lookback)`` inputs and ``(N, C, horizon)`` targets."""
    C, T = series.shape
    if lookback + horizon > T:
        raise ValidationError(f"series of length {T} is shorter than lookback + horizon")
    starts = range(0, T - lookback - horizon + 1, stride)
    X = np.stack([series[:, s:s + lookback] for s in starts])
    Y = np.stack([series[:, s + lookback:s + lookback + horizon] for s in starts])
    return X, Y
