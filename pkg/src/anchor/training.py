"""Losses, metrics, optimisers, the training loop and the gradient checker."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AnchorRuntimeError, ConfigError, ValidationError
from .layers import Layer
from .numerics import DEFAULT_FD_STEP, make_rng


def _check_shapes(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch: prediction {pred.shape} vs target {target.shape}")
    return pred, target


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient with respect to ``pred``."""
    pred, target = _check_shapes(pred, target)
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def smape(pred, target) -> float:
    """``200 * mean(|p - t| / (|p| + |t|))``; terms with ``p == t == 0`` count as 0."""
    pred, target = _check_shapes(pred, target)
    num = np.abs(pred - target)
    den = np.abs(pred) + np.abs(target)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(200.0 * terms.mean())


def metric_suite(pred, target) -> dict[str, float]:
    pred, target = _check_shapes(pred, target)
    diff = pred - target
    return {"mse": float(np.mean(diff ** 2)), "mae": float(np.mean(np.abs(diff))),
            "smape": smape(pred, target)}


class Optimizer:
    def __init__(self, lr: float):
        if not lr >= 0:
            raise ConfigError(f"learning rate must be non-negative, got {lr}")
        self.lr = lr
        self.state: dict[str, dict[str, np.ndarray]] = {}
        self.steps = 0

    def step(self, model: Layer) -> None:
        self.steps += 1
        for name, p, g in model.parameters():
            st = self.state.get(name)
            if st is None:
                st = self.state[name] = self._init_state(p)
            self._update(p, g, st)

    def _init_state(self, p):
        raise NotImplementedError

    def _update(self, p, g, st):
        raise NotImplementedError


class SGD(Optimizer):
    kind = "sgd"

    def __init__(self, lr: float = 1e-2, momentum: float = 0.9):
        super().__init__(lr)
        if not 0 <= momentum < 1:
            raise ConfigError(f"momentum must lie in [0, 1), got {momentum}")
        self.momentum = momentum

    def _init_state(self, p):
        return {"velocity": np.zeros_like(p)}

    def _update(self, p, g, st):
        v = st["velocity"]
        v *= self.momentum
        v += g
        p -= self.lr * v


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        super().__init__(lr)
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1 and eps > 0):
            raise ConfigError("Adam needs 0 <= beta1, beta2 < 1 and eps > 0")
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def _init_state(self, p):
        return {"m": np.zeros_like(p), "v": np.zeros_like(p)}

    def _update(self, p, g, st):
        m, v = st["m"], st["v"]
        m *= self.beta1
        m += (1 - self.beta1) * g
        v *= self.beta2
        v += (1 - self.beta2) * g * g
        m_hat = m / (1 - self.beta1 ** self.steps)
        v_hat = v / (1 - self.beta2 ** self.steps)
        p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind: str, lr: float | None = None, **kwargs) -> Optimizer:
    if kind == "adam":
        return Adam(1e-3 if lr is None else lr, **kwargs)
    if kind == "sgd":
        return SGD(1e-2 if lr is None else lr, **kwargs)
    raise ConfigError(f"unknown optimizer {kind!r}")


@dataclass
class TrainRecord:
    epoch: int
    train_loss: float
    val_metrics: dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0
    seed: int = 0


def predict(model: Layer, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
    outs = [model.forward(x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
    return np.concatenate(outs, axis=0)


def train(model: Layer, data: tuple[np.ndarray, np.ndarray], optimizer: Optimizer, epochs: int,
          seed: int, batch_size: int = 32, val_data: tuple[np.ndarray, np.ndarray] | None = None,
          loss_fn: Callable = mse_loss) -> list[TrainRecord]:
    """Minibatch training with a seeded shuffle per epoch.

    Parameters are updated in place. Returns one record per epoch; the
    training loss is the mean minibatch loss over the epoch.
    """
    if epochs < 0:
        raise ConfigError(f"epochs must be non-negative, got {epochs}")
    X, Y = (np.asarray(a, dtype=np.float64) for a in data)
    if len(X) != len(Y) or len(X) == 0:
        raise ValidationError("training inputs and targets must be non-empty and equally long")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValidationError("training data contains non-finite values")
    rng = make_rng(seed)
    records = []
    for epoch in range(1, epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(len(X))
        losses = []
        for step, i in enumerate(range(0, len(X), batch_size)):
            idx = order[i:i + batch_size]
            model.zero_grad()
            pred = model.forward(X[idx])
            loss, dpred = loss_fn(pred, Y[idx])
            if not np.isfinite(loss):
                raise AnchorRuntimeError(f"loss diverged at epoch {epoch}, step {step}")
            model.backward(dpred)
            optimizer.step(model)
            losses.append(loss)
        val = metric_suite(predict(model, val_data[0]), val_data[1]) if val_data else {}
        records.append(TrainRecord(epoch, float(np.mean(losses)), val,
                                   time.perf_counter() - start, seed))
    return records


@dataclass
class GradcheckEntry:
    name: str
    max_rel_error: float
    max_abs_error: float
    passed: bool


@dataclass
class GradcheckReport:
    entries: list[GradcheckEntry]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def worst(self) -> GradcheckEntry:
        return max(self.entries, key=lambda e: e.max_rel_error)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-12) -> float:
    """Max absolute deviation scaled by the larger of the two gradients' max magnitude."""
    scale = max(np.max(np.abs(analytic), initial=0.0), np.max(np.abs(numeric), initial=0.0))
    err = np.max(np.abs(analytic - numeric), initial=0.0)
    return float(err / max(scale, floor))


MAX_GRADCHECK_PARAMS = 10_000


def gradcheck_model(model: Layer, x, tolerance: float = 1e-5, h: float = DEFAULT_FD_STEP,
                    seed: int = 0, grad_hook: Callable | None = None) -> GradcheckReport:
    """Compare ``model.backward`` against central differences for every parameter
    group and the input.

    The scalar probed is ``sum(r * model(x))`` for a fixed random ``r``.
    ``grad_hook(name, grad)`` may rewrite analytic gradients before comparison,
    which is how the harness is fault-tested.
    """
    x = np.array(x, dtype=np.float64)
    n_params = model.num_parameters()
    if n_params > MAX_GRADCHECK_PARAMS:
        raise ConfigError(f"model has {n_params} parameters; gradcheck is capped at "
                          f"{MAX_GRADCHECK_PARAMS}")
    y = model.forward(x)
    r = make_rng(seed).standard_normal(y.shape)
    model.zero_grad()
    dx = model.backward(r)
    analytic = {name: g.copy() for name, _, g in model.parameters()}
    analytic["input"] = dx

    def probe() -> float:
        return float(np.sum(r * model.forward(x)))

    entries = []
    for name, p, _ in model.parameters():
        numeric = np.zeros_like(p)
        flat, nflat = p.reshape(-1), numeric.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            fp = probe()
            flat[k] = orig - h
            fm = probe()
            flat[k] = orig
            nflat[k] = (fp - fm) / (2 * h)
        entries.append(_entry(name, analytic[name], numeric, tolerance, grad_hook))

    numeric = np.zeros_like(x)
    xf, nf = x.reshape(-1), numeric.reshape(-1)
    for k in range(xf.size):
        orig = xf[k]
        xf[k] = orig + h
        fp = probe()
        xf[k] = orig - h
        fm = probe()
        xf[k] = orig
        nf[k] = (fp - fm) / (2 * h)
    entries.append(_entry("input", analytic["input"], numeric, tolerance, grad_hook))
    return GradcheckReport(entries, tolerance)


def _entry(name, analytic, numeric, tolerance, hook) -> GradcheckEntry:
    if hook is not None:
        analytic = hook(name, analytic.copy())
    rel = relative_error(analytic, numeric)
    abs_err = float(np.max(np.abs(analytic - numeric), initial=0.0))
    return GradcheckEntry(name, rel, abs_err, bool(rel <= tolerance))
