"""Desk-scale experiments. Each returns ``(rows, summary)``: a list of flat
dicts (one per case, CSV-ready) and a dict of aggregate values."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .backbone import Backbone, BackboneConfig, StageConfig
from .deform import DefOp, DefOpConfig
from .errors import ConfigError, NoPeriodicityError, ValidationError
from .fgdm import (ENERGY_ASC_KERNEL, ENERGY_DESC_KERNEL, FGDM, FgdmConfig, assign_routes,
                   cost_model)
from .interpolation import InterpKernel, interp_gaussian
from .numerics import as_array, finite_diff_grad, make_rng
from .spectral import extract_prior, spectral_energy, topk_periods
from .synth import (DEFAULT_FRACTIONAL_PERIODS, Component, SignalSpec, generate, load_csv,
                    sliding_windows, theoretical_offsets)
from .training import Adam, gradcheck_model, metric_suite, predict, train


def _map_cases(fn, cases, threads: int = 1):
    if threads <= 1:
        return [fn(c) for c in cases]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, cases))


# ---------------------------------------------------------------- periods

def extract_periods(batch, k: int = 3):
    x = as_array(batch)
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    prior = topk_periods(spectral_energy(x), k, x.shape[-1])
    rows = [{"rank": r + 1, "frequency": f, "period": p, "energy": float(prior.energies[f])}
            for r, (f, p) in enumerate(zip(prior.top_freqs, prior.periods))]
    return rows, {"length": x.shape[-1], "k": k, "periods": list(prior.periods)}


# ---------------------------------------------------------------- cost

def cost_report(channels: int = 8, length: int = 96, partitions: int = 4,
                kernels=(3, 5, 7)):
    rep = cost_model(channels, length, partitions, kernels)
    row = {"channels": channels, "length": length, "partitions": partitions,
           "kernels": " ".join(str(k) for k in kernels), "cost_baseline": rep.cost_baseline,
           "cost_spatial": float(rep.cost_spatial), "ratio": rep.ratio,
           "rfft_cost": rep.rfft_cost, "rfft_fraction": rep.rfft_fraction}
    return [row], {"ratio": rep.ratio, "ratio_exact": str(rep.ratio_exact),
                   "rfft_fraction": rep.rfft_fraction}


# ---------------------------------------------------------------- gradcheck

GRADCHECK_SCOPES = ("interp", "defop", "fgdm", "backbone")
DEFAULT_TOLERANCE = {"interp": 1e-6, "defop": 1e-5, "fgdm": 1e-5, "backbone": 1e-4}


def interp_gradcheck_cases(n_cases: int = 1000, seed: int = 0, length: int = 16):
    """Seeded random Gaussian-interpolation cases for the position-gradient check."""
    rng = make_rng(seed)
    for _ in range(n_cases):
        x = rng.standard_normal(length)
        p = rng.uniform(1.0, length - 2.0)
        sigma = rng.uniform(0.3, 2.0)
        radius = int(rng.choice([2, 3, 4]))
        yield x, p, InterpKernel.gaussian(sigma, radius)


def _check_interp(seed: int, tolerance: float, inject_fault: bool, n_cases: int = 1000):
    worst_rel, worst_abs, failures = 0.0, 0.0, 0
    abs_floor, small = 1e-9, 1e-3
    for x, p, kern in interp_gradcheck_cases(n_cases, seed):
        analytic = interp_gaussian(x, p, kern).dvalue_dp
        if inject_fault:
            analytic = analytic * (1 + 1e-3) + 1e-6
        numeric = finite_diff_grad(lambda v: interp_gaussian(x, v[0], kern).value, [p])[0]
        err = abs(analytic - numeric)
        if abs(numeric) < small:
            worst_abs = max(worst_abs, err)
            failures += err > abs_floor
        else:
            rel = err / abs(numeric)
            worst_rel = max(worst_rel, rel)
            failures += rel > tolerance
    return [{"group": "interp.dvalue_dp", "max_rel_error": worst_rel,
             "max_abs_error_small": worst_abs, "tolerance": tolerance,
             "cases": n_cases, "failures": int(failures), "passed": failures == 0}]


def _randomize_offsets(model, rng, scale=0.3):
    for name, p, _ in model.parameters():
        if "offset" in name or "phi_f" in name:
            p[...] = rng.normal(0.0, scale, p.shape)


def toy_defop(kind: str, seed: int = 0):
    rng = make_rng(seed)
    kern = InterpKernel.bilinear() if kind == "bilinear" else InterpKernel.gaussian(1.0)
    op = DefOp(DefOpConfig(2, 2, 3, 4, kern, "predicted"), rng)
    _randomize_offsets(op, rng, 0.5)
    op.params["bias"][:] = rng.normal(size=2)
    x = rng.standard_normal((1, 2, 24))
    return op, x


def toy_fgdm(kind: str = "gaussian", seed: int = 0, partitions: int = 2, channels: int = 4,
             length: int = 16):
    rng = make_rng(seed)
    kern = InterpKernel.bilinear() if kind == "bilinear" else InterpKernel.gaussian(1.0)
    t = np.arange(length)
    x = np.sin(2 * np.pi * t / 5.3)[None, None] + 0.3 * rng.standard_normal((1, channels, length))
    cfg = FgdmConfig(channels, partitions, tuple(range(3, 2 * partitions + 1, 2)), kern)
    block = FGDM(cfg, assign_routes(extract_prior(x, partitions - 1), cfg), rng, zero_fusion=False)
    _randomize_offsets(block, rng)
    return block, x


def toy_backbone(seed: int = 0, task: str = "forecast"):
    rng = make_rng(seed)
    t = np.arange(16)
    x = np.sin(2 * np.pi * t / 4.3)[None, None] + 0.1 * rng.standard_normal((2, 1, 16))
    cfg = BackboneConfig(1, 16, 4, (StageConfig(1, 4, 1), StageConfig(1, 4, 2)), 2, (3,),
                         InterpKernel.gaussian(1.0), task=task, horizon=4)
    model = Backbone(cfg, extract_prior(x, 1), rng)
    _randomize_offsets(model, rng)
    return model, x


def gradcheck_suite(scope: str = "interp", seed: int = 0, tolerance: float | None = None,
                    inject_fault: bool = False):
    if scope not in GRADCHECK_SCOPES:
        raise ConfigError(f"scope must be one of {GRADCHECK_SCOPES}, got {scope!r}")
    tol = DEFAULT_TOLERANCE[scope] if tolerance is None else tolerance
    if scope == "interp":
        rows = _check_interp(seed, tol, inject_fault)
    else:
        hook = None
        if inject_fault:
            def hook(name, g):
                return g + 1e-3 * max(1.0, float(np.max(np.abs(g))))
        targets = {"defop": lambda: [("bilinear", toy_defop("bilinear", seed)),
                                     ("gaussian", toy_defop("gaussian", seed))],
                   "fgdm": lambda: [("bilinear", toy_fgdm("bilinear", seed)),
                                    ("gaussian", toy_fgdm("gaussian", seed))],
                   "backbone": lambda: [("gaussian", toy_backbone(seed))]}[scope]()
        rows = []
        for label, (model, x) in targets:
            rep = gradcheck_model(model, x, tol, seed=seed, grad_hook=hook)
            rows += [{"group": f"{scope}[{label}].{e.name}", "max_rel_error": e.max_rel_error,
                      "max_abs_error": e.max_abs_error, "tolerance": tol, "passed": e.passed}
                     for e in rep.entries]
    worst = max(r["max_rel_error"] for r in rows)
    return rows, {"scope": scope, "passed": all(r["passed"] for r in rows),
                  "max_rel_error": worst, "tolerance": tol}


# ---------------------------------------------------------------- compensation bench

def _fit_offsets(x: np.ndarray, period: float, kern: InterpKernel, steps: int, lr: float,
                 kernel_size: int) -> np.ndarray:
    """Learn free per-tap offsets that align taps one period apart.

    Each tap feeds its own output channel through a learnable gain and bias,
    and is trained by MSE to reproduce the centre sample ``x[p0]``. The taps
    are anchored at ``floor(period) * n``, so the loss is minimised by moving
    tap ``n`` onto ``period * n``. Only interior positions, whose windows never
    touch the padding, enter the loss.
    """
    S, T, L = kernel_size, math.floor(period), x.shape[-1]
    op = DefOp(DefOpConfig(1, S, S, T, kern, "free"))
    diag = np.zeros((S, 1, S))
    diag[np.arange(S), 0, np.arange(S)] = 1.0
    op.params["weight"][...] = diag
    reach = (S // 2) * (T + 1) + (kern.window_radius or 1) + 1
    mask = np.zeros(L)
    mask[reach:L - reach] = 1.0
    target = np.repeat(x, S, axis=1)
    count = mask.sum() * S
    opt = Adam(lr)
    for _ in range(steps):
        op.zero_grad()
        y = op.forward(x)
        op.backward(2.0 * (y - target) * mask / count)
        op.grads["weight"] *= diag
        opt.step(op)
    return op.params["offset_bias"].copy()


def compensation_bench(periods=DEFAULT_FRACTIONAL_PERIODS, steps: int = 500, lr: float = 1e-2,
                       sigma: float = 1.0, radius: int | None = None, seed: int = 0,
                       length: int = 512, kernel_size: int = 3, threads: int = 1):
    """Offset-compensation accuracy of linear vs Gaussian sampling on fractional periods.

    Returns one row per period with the learned offsets' MAE against
    ``n * frac(period)`` under each sampling rule and the ratio
    ``eta = mae_linear / mae_gaussian``.
    """
    periods = [float(p) for p in periods]
    if not periods:
        raise ConfigError("period set is empty")
    for p in periods:
        if p == math.floor(p):
            raise ValidationError(f"period {p} is an integer; compensation needs fractional periods")
    if steps < 0 or not lr > 0:
        raise ConfigError("steps must be >= 0 and lr > 0")
    gauss = InterpKernel.gaussian(sigma, radius)
    phases = make_rng(seed).uniform(0.0, 2 * np.pi, size=len(periods))

    def case(i):
        period = periods[i]
        spec = SignalSpec("fractional_sine", length, (Component(period, 1.0, phases[i]),),
                          kernel_size=kernel_size)
        gen = generate(spec)
        x = np.array(gen.batch.data)
        theo = np.array(theoretical_offsets(period, kernel_size))
        lin = _fit_offsets(x, period, InterpKernel.bilinear(), steps, lr, kernel_size)
        gau = _fit_offsets(x, period, gauss, steps, lr, kernel_size)
        mae_l = float(np.mean(np.abs(lin - theo)))
        mae_g = float(np.mean(np.abs(gau - theo)))
        return {"period": period, "integer_period": math.floor(period),
                "theoretical_offsets": " ".join(f"{v:.6g}" for v in theo),
                "learned_linear": " ".join(f"{v:.12g}" for v in lin),
                "learned_gaussian": " ".join(f"{v:.12g}" for v in gau),
                "mae_linear": mae_l, "mae_gaussian": mae_g,
                "eta": mae_l / mae_g if mae_g > 0 else math.inf}

    rows = _map_cases(case, range(len(periods)), threads)
    etas = [r["eta"] for r in rows]
    return rows, {"cases": len(rows), "eta_gt_1": int(sum(e > 1 for e in etas)),
                  "mean_eta": float(np.mean(etas)), "median_eta": float(np.median(etas)),
                  "steps": steps, "lr": lr, "sigma": sigma,
                  "radius": gauss.window_radius}


# ---------------------------------------------------------------- forecasting tasks

VARIANTS = {
    "anchor-1d": ("none", "bilinear"),
    "anchor-bl": ("predicted", "bilinear"),
    "anchor-gaussian": ("predicted", "gaussian"),
}


def forecast_task(periods=(10.4, 23.7), amplitudes=(1.0, 0.6), length: int = 1200,
                  noise_std: float = 0.1, lookback: int = 96, horizon: int = 16,
                  stride: int = 2, seed: int = 0, train_fraction: float = 0.8,
                  kind: str = "multi_tone"):
    """Windows from a synthetic series, split chronologically."""
    comps = tuple(Component(p, a, 0.0) for p, a in zip(periods, amplitudes))
    series = generate(SignalSpec(kind, length, comps, noise_std, seed)).batch.data[0]
    cut = int(length * train_fraction)
    Xtr, Ytr = sliding_windows(series[:, :cut], lookback, horizon, stride)
    Xva, Yva = sliding_windows(series[:, cut - lookback:], lookback, horizon, stride)
    return (Xtr, Ytr), (Xva, Yva)


def _forecast_model(variant: str, prior, lookback, horizon, width, partitions, kernels,
                    sigma, seed, blocks):
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; choose from {list(VARIANTS)}")
    mode, kind = VARIANTS[variant]
    interp = InterpKernel.bilinear() if kind == "bilinear" else InterpKernel.gaussian(sigma)
    cfg = BackboneConfig(1, lookback, width, (StageConfig(blocks, width, 1),), partitions,
                         tuple(kernels), interp, offset_mode=mode, task="forecast",
                         horizon=horizon)
    return Backbone(cfg, prior, make_rng(seed))


def ablation(variants=tuple(VARIANTS), period: float = 10.4, noise_std: float = 0.05,
             length: int = 1500, lookback: int = 96, horizon: int = 16, width: int = 4,
             partitions: int = 2, kernels=(5,), blocks: int = 2, sigma: float = 1.0,
             epochs: int = 40, lr: float = 1e-2, batch_size: int = 32, repeats: int = 3,
             seed: int = 0, threads: int = 1):
    """Train standard-conv, bilinear-deformable and Gaussian-deformable variants.

    The task forecasts a pulse train with period ``period`` whose pulse heights
    follow a logistic map, so a good forecast needs nonlinear features of
    samples one period apart. Every repeat uses one data seed and one
    initialisation seed shared by all variants; metrics are averaged over
    repeats.
    """
    variants = list(variants)
    if not variants or repeats < 1:
        raise ConfigError("need at least one variant and one repeat")
    seeds = [seed + r for r in range(repeats)]
    tasks = {}
    for s in seeds:
        train_set, val_set = forecast_task((period,), (1.0,), length, noise_std, lookback,
                                           horizon, seed=s, kind="pulse_train")
        tasks[s] = (train_set, val_set, extract_prior(train_set[0], partitions - 1))

    def case(item):
        variant, s = item
        (Xtr, Ytr), (Xva, Yva), prior = tasks[s]
        model = _forecast_model(variant, prior, lookback, horizon, width, partitions, kernels,
                                sigma, s, blocks)
        recs = train(model, (Xtr, Ytr), Adam(lr), epochs, s, batch_size)
        return {"train_loss": recs[-1].train_loss if recs else math.nan,
                **metric_suite(predict(model, Xva), Yva)}

    items = [(v, s) for v in variants for s in seeds]
    results = dict(zip(items, _map_cases(case, items, threads)))
    rows = []
    for v in variants:
        per = [results[(v, s)] for s in seeds]
        rows.append({"variant": v, "epochs": epochs, "repeats": repeats,
                     **{k: float(np.mean([r[k] for r in per]))
                        for k in ("train_loss", "mse", "mae", "smape")}})
    return rows, {"period": period, "prior_periods": list(tasks[seeds[0]][2].periods),
                  "mse": {r["variant"]: r["mse"] for r in rows}}


def topk_sweep(ks=(1, 2, 3, 4, 5, 6), periods=(12.0, 19.2, 32.0), amplitudes=(1.0, 0.7, 0.5),
               noise_std: float = 0.1, length: int = 1200, lookback: int = 96,
               horizon: int = 16, group: int = 1, stages: int = 6, sigma: float = 1.0,
               epochs: int = 8, lr: float = 3e-3, batch_size: int = 32, seed: int = 0,
               threads: int = 1):
    """Train one fixed architecture while varying how many spectral periods feed it.

    The block has ``stages`` cascade stages; with ``k < stages`` the ``k``
    periods are cycled over the stages.
    """
    ks = [int(k) for k in ks]
    if not ks:
        raise ConfigError("k range is empty")
    (Xtr, Ytr), (Xva, Yva) = forecast_task(periods, amplitudes, length, noise_std, lookback,
                                           horizon, seed=seed)
    notes = []
    kmax = lookback // 2
    partitions = stages + 1
    width = group * partitions
    kernels = tuple(range(3, 3 + 2 * stages, 2))

    def case(k):
        if k < 1:
            raise ConfigError(f"k must be >= 1, got {k}")
        if k > kmax:
            notes.append(f"k={k} clamped to {kmax}")
            warnings.warn(f"k={k} exceeds {kmax}; clamped", stacklevel=2)
        kk = min(k, kmax)
        prior = extract_prior(Xtr, kk)
        cfg = BackboneConfig(1, lookback, width, (StageConfig(1, width, 1),), partitions,
                             kernels, InterpKernel.gaussian(sigma), task="forecast",
                             horizon=horizon)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = Backbone(cfg, prior, make_rng(seed))
        train(model, (Xtr, Ytr), Adam(lr), epochs, seed, batch_size)
        metrics = metric_suite(predict(model, Xva), Yva)
        return {"k": kk, "periods": " ".join(map(str, prior.periods)), **metrics}

    rows = _map_cases(case, ks, threads)
    mses = [r["mse"] for r in rows]
    return rows, {"ks": ks, "mse_max_over_min": float(max(mses) / min(mses)), "notes": notes}


# ---------------------------------------------------------------- anomaly routing

def anomaly_task(periods=(9.6, 16.0, 32.0), amplitudes=(1.0, 0.6, 0.4), length: int = 2400,
                 noise_std: float = 0.05, n_anomalies: int = 24, magnitude: float = 2.5,
                 seed: int = 0, train_fraction: float = 0.5):
    """A clean training prefix and a test suffix with injected spikes."""
    rng = make_rng(seed + 1)
    cut = int(length * train_fraction)
    pos = np.sort(rng.choice(np.arange(cut, length), size=n_anomalies, replace=False))
    mags = magnitude * rng.choice([-1.0, 1.0], size=n_anomalies)
    comps = tuple(Component(p, a, 0.0) for p, a in zip(periods, amplitudes))
    gen = generate(SignalSpec("anomaly_injected", length, comps, noise_std, seed,
                              anomaly_positions=tuple(int(p) for p in pos),
                              anomaly_magnitudes=tuple(float(m) for m in mags)))
    series = gen.batch.data[0]
    return series[:, :cut], series[:, cut:], gen.anomaly_labels[cut:]


def reconstruction_scores(model, series: np.ndarray, window: int) -> np.ndarray:
    """Per-step squared reconstruction error over non-overlapping windows."""
    C, T = series.shape
    n = T // window
    X = series[:, :n * window].reshape(C, n, window).transpose(1, 0, 2)
    err = ((predict(model, X) - X) ** 2).mean(axis=1)
    scores = np.zeros(T)
    scores[:n * window] = err.reshape(-1)
    if n * window < T:
        tail = series[None, :, T - window:]
        scores[n * window:] = ((model.forward(tail) - tail) ** 2).mean(axis=1)[0, n * window - T:]
    return scores


def threshold_metrics(scores: np.ndarray, labels: np.ndarray, ratio: float,
                      reference: np.ndarray | None = None) -> dict:
    """Flag the top ``ratio`` share of scores and compare with ground-truth labels."""
    if not 0 < ratio < 1:
        raise ValidationError(f"anomaly ratio must lie in (0, 1), got {ratio}")
    pool = scores if reference is None else np.concatenate([reference, scores])
    thr = float(np.quantile(pool, 1.0 - ratio))
    pred = scores > thr
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"threshold": thr, "precision": precision, "recall": recall, "f1": f1}


def routing_ablation(anomaly_ratio: float = 0.01, periods=(9.6, 16.0, 32.0),
                     amplitudes=(1.0, 0.6, 0.4), noise_std: float = 0.05, length: int = 2400,
                     window: int = 96, width: int = 8, partitions: int = 4,
                     kernels=(3, 5, 7), sigma: float = 1.0, epochs: int = 10, lr: float = 3e-3,
                     batch_size: int = 16, seed: int = 0, threads: int = 1):
    """Energy-ascending vs energy-descending kernel routing on spike detection."""
    if not 0 < anomaly_ratio < 1:
        raise ValidationError(f"anomaly ratio must lie in (0, 1), got {anomaly_ratio}")
    train_series, test_series, labels = anomaly_task(periods, amplitudes, length, noise_std,
                                                     seed=seed)
    Xtr, _ = sliding_windows(train_series, window, 0, stride=4)
    prior = extract_prior(Xtr, partitions - 1)

    def case(order):
        cfg = BackboneConfig(1, window, width, (StageConfig(1, width, 1), StageConfig(1, width, 2)),
                             partitions, tuple(kernels), InterpKernel.gaussian(sigma), order,
                             task="reconstruction")
        model = Backbone(cfg, prior, make_rng(seed))
        train(model, (Xtr, Xtr), Adam(lr), epochs, seed, batch_size)
        ref = reconstruction_scores(model, train_series, window)
        scores = reconstruction_scores(model, test_series, window)
        m = threshold_metrics(scores, labels, anomaly_ratio, ref)
        routes = model.route_assignments[0]
        return {"routing": order, "pairs": " ".join(f"{r.kernel}:{r.period}" for r in routes.routes),
                **m}

    rows = _map_cases(case, [ENERGY_ASC_KERNEL, ENERGY_DESC_KERNEL], threads)
    f1 = {r["routing"]: r["f1"] for r in rows}
    return rows, {"f1": f1, "f1_asc_minus_desc": f1[ENERGY_ASC_KERNEL] - f1[ENERGY_DESC_KERNEL],
                  "prior_periods": list(prior.periods)}


# ---------------------------------------------------------------- user data

def train_on_csv(path, task: str = "forecast", header: bool = False, lookback: int = 96,
                 horizon: int = 24, width: int = 4, partitions: int = 2, kernels=(3,),
                 blocks: int = 1, interp: str = "gaussian", sigma: float = 1.0,
                 routing_order: str = ENERGY_ASC_KERNEL, epochs: int = 10, lr: float = 1e-3,
                 batch_size: int = 32, stride: int = 1, train_fraction: float = 0.8,
                 seed: int = 0):
    """Load a CSV, standardise it, extract the prior and train a backbone.

    The series is split chronologically; validation windows may reach back
    ``lookback`` steps into the training part for context. Returns
    ``(rows, summary, model)``. For ``forecast`` the rows are per-epoch
    records; for ``reconstruction`` they are per-time-step anomaly scores.
    """
    if task not in ("forecast", "reconstruction"):
        raise ConfigError(f"task must be 'forecast' or 'reconstruction', got {task!r}")
    if interp not in ("gaussian", "bilinear"):
        raise ConfigError(f"interp must be 'gaussian' or 'bilinear', got {interp!r}")
    if not 0 < train_fraction < 1:
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    batch, meta = load_csv(path, header=header, standardize=True)
    series = np.array(batch.data[0])
    C, T = series.shape
    cut = int(T * train_fraction)
    h = horizon if task == "forecast" else 0
    tail_needed = h + 1 if task == "forecast" else lookback
    if cut < lookback + h or T - cut < tail_needed:
        raise ValidationError(f"series of length {T} is too short for lookback {lookback} "
                              f"and horizon {h} with a {train_fraction:.0%} split")
    Xtr, Ytr = sliding_windows(series[:, :cut], lookback, h, stride)
    Xva, Yva = sliding_windows(series[:, cut - lookback:], lookback, h, stride)
    if task == "reconstruction":
        Ytr, Yva = Xtr, Xva
    prior = None
    try:
        prior = extract_prior(Xtr, partitions - 1)
    except NoPeriodicityError:
        pass
    kern = InterpKernel.gaussian(sigma) if interp == "gaussian" else InterpKernel.bilinear()
    cfg = BackboneConfig(C, lookback, width, (StageConfig(blocks, width, 1),), partitions,
                         tuple(kernels), kern, routing_order, task=task,
                         horizon=max(horizon, 1))
    model = Backbone(cfg, prior, make_rng(seed))
    records = train(model, (Xtr, Ytr), Adam(lr), epochs, seed, batch_size, (Xva, Yva))
    summary = {"task": task, "channels": C, "length": T, "train_steps": cut,
               "train_windows": len(Xtr), "val_windows": len(Xva),
               "prior_periods": list(prior.periods) if prior else [],
               "channel_names": meta.names,
               "channel_mean": meta.mean.tolist(), "channel_std": meta.std.tolist(),
               "final_val": records[-1].val_metrics if records else
               metric_suite(predict(model, Xva), Yva)}
    if task == "forecast":
        rows = [{"epoch": r.epoch, "train_loss": r.train_loss, **r.val_metrics}
                for r in records]
    else:
        scores = np.concatenate([reconstruction_scores(model, series[:, :cut], lookback),
                                 reconstruction_scores(model, series[:, cut:], lookback)])
        rows = [{"t": t, "split": "train" if t < cut else "val", "anomaly_score": float(v)}
                for t, v in enumerate(scores)]
        summary["history"] = [{"epoch": r.epoch, "train_loss": r.train_loss, **r.val_metrics}
                              for r in records]
    return rows, summary, model
