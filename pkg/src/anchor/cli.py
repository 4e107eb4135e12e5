"""Command-line entry point.

Every subcommand writes ``<out-dir>/<subcommand>-<timestamp>/results.csv`` and
``summary.json``. Parameters come from the experiment function's defaults,
then an optional ``--config`` JSON file, then explicit flags.

Exit codes: 0 success, 1 runtime error, 2 validation or config error,
3 a check suite reported failures.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import math
import os
import sys
import tempfile
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .errors import AnchorError, ConfigError, ValidationError
from .synth import SignalSpec, generate, load_csv

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, EXIT_CHECK = 0, 1, 2, 3


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    """``"3,5,7"`` or an inclusive range ``"1-6"``."""
    out = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _strs(text):
    return [v.strip() for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------- runners
# Each runner takes the merged parameter dict and returns (rows, summary, check_ok).
# ``check_ok`` is None for subcommands that are not check suites.

def _signal_batch(params):
    if params.get("input"):
        batch, _ = load_csv(params["input"], header=bool(params.get("header")))
        return batch.data
    sig = params.get("signal")
    if sig is None:
        if params.get("period") is None:
            raise ConfigError("give --input CSV, --period, or a 'signal' object in the config")
        sig = {"kind": "fractional_sine", "length": params.get("length") or 96,
               "components": [[params["period"], 1.0, 0.0]],
               "noise_std": params.get("noise_std") or 0.0}
    if not isinstance(sig, dict):
        raise ConfigError("'signal' must be a JSON object")
    sig = dict(sig)
    sig.setdefault("seed", params["seed"])
    try:
        spec = SignalSpec(**{**sig, "components": tuple(tuple(c) for c in sig["components"])})
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"invalid signal spec: {exc}") from None
    return generate(spec).batch.data


def run_extract_periods(p):
    return (*ex.extract_periods(_signal_batch(p), p["k"]), None)


def run_gradcheck(p):
    rows, summary = ex.gradcheck_suite(p["scope"], p["seed"], p["tolerance"], p["inject_fault"])
    return rows, summary, summary["passed"]


def run_compensation(p):
    return (*ex.compensation_bench(**_call_args(ex.compensation_bench, p)), None)


def run_ablation(p):
    return (*ex.ablation(**_call_args(ex.ablation, p)), None)


def run_topk(p):
    return (*ex.topk_sweep(**_call_args(ex.topk_sweep, p)), None)


def run_routing(p):
    return (*ex.routing_ablation(**_call_args(ex.routing_ablation, p)), None)


def run_cost(p):
    return (*ex.cost_report(**_call_args(ex.cost_report, p)), None)


def run_train(p):
    if not p.get("input"):
        raise ConfigError("train needs --input CSV")
    args = _call_args(ex.train_on_csv, p)
    rows, summary, model = ex.train_on_csv(p["input"], **args)
    summary["_model"] = model
    return rows, summary, None


def _call_args(fn, params):
    names = inspect.signature(fn).parameters
    return {k: v for k, v in params.items() if k in names and k != "path" and v is not None}


# name -> (runner, help, [(flag, key, type, help)], extra config keys)
COMMON_FLAGS = [("--seed", "seed", int, "random seed (default 0)"),
                ("--out-dir", "out_dir", str, "output directory (default ./runs)"),
                ("--threads", "threads", int, "worker threads for independent cases")]

SUBCOMMANDS = {
    "extract-periods": (run_extract_periods, "top-K spectral periods of a CSV or synthetic signal", [
        ("--input", "input", str, "CSV file, one column per channel"),
        ("--header", "header", bool, "CSV has a header row"),
        ("--k", "k", int, "number of periods (default 3)"),
        ("--period", "period", float, "synthetic sinusoid period"),
        ("--length", "length", int, "synthetic signal length (default 96)"),
        ("--noise-std", "noise_std", float, "synthetic noise level"),
    ], {"signal": None, "k": 3}),
    "gradcheck": (run_gradcheck, "analytic vs finite-difference gradients", [
        ("--scope", "scope", str, "interp, defop, fgdm or backbone"),
        ("--tolerance", "tolerance", float, "relative tolerance (scope default)"),
        ("--inject-fault", "inject_fault", bool, "perturb analytic gradients to test the harness"),
    ], {"scope": "interp", "tolerance": None, "inject_fault": False}),
    "compensation-bench": (run_compensation, "offset compensation of linear vs Gaussian sampling", [
        ("--periods", "periods", _floats, "comma-separated fractional periods"),
        ("--steps", "steps", int, "training steps per case"),
        ("--lr", "lr", float, "Adam learning rate"),
        ("--sigma", "sigma", float, "Gaussian bandwidth"),
        ("--radius", "radius", int, "Gaussian window radius"),
    ], ex.compensation_bench),
    "ablation": (run_ablation, "standard conv vs bilinear vs Gaussian deformable variants", [
        ("--variants", "variants", _strs, "comma-separated variant names"),
        ("--period", "period", float, "pulse period of the task"),
        ("--epochs", "epochs", int, "training epochs"),
        ("--lr", "lr", float, "Adam learning rate"),
        ("--repeats", "repeats", int, "seeded repeats averaged per variant"),
    ], ex.ablation),
    "topk-sweep": (run_topk, "sensitivity of forecasting error to the number of periods", [
        ("--ks", "ks", _ints, "k values, e.g. 1-6 or 1,3,5"),
        ("--epochs", "epochs", int, "training epochs"),
        ("--lr", "lr", float, "Adam learning rate"),
    ], ex.topk_sweep),
    "routing-ablation": (run_routing, "energy-ascending vs descending kernel routing", [
        ("--anomaly-ratio", "anomaly_ratio", float, "share of points flagged (default 0.01)"),
        ("--epochs", "epochs", int, "training epochs"),
        ("--lr", "lr", float, "Adam learning rate"),
    ], ex.routing_ablation),
    "cost-model": (run_cost, "multiply-accumulate counts of the partitioned cascade", [
        ("--channels", "channels", int, "channel count C"),
        ("--length", "length", int, "sequence length L"),
        ("--partitions", "partitions", int, "partition count N"),
        ("--kernels", "kernels", _ints, "comma-separated kernel sizes"),
    ], ex.cost_report),
    "train": (run_train, "train a backbone on a CSV file", [
        ("--input", "input", str, "CSV file, one column per channel"),
        ("--header", "header", bool, "CSV has a header row"),
        ("--task", "task", str, "forecast or reconstruction"),
        ("--lookback", "lookback", int, "input window length"),
        ("--horizon", "horizon", int, "forecast horizon"),
        ("--epochs", "epochs", int, "training epochs"),
        ("--lr", "lr", float, "Adam learning rate"),
    ], ex.train_on_csv),
}


def _defaults(extra) -> dict:
    if isinstance(extra, dict):
        return dict(extra)
    return {name: prm.default for name, prm in inspect.signature(extra).parameters.items()
            if name not in ("path", "threads", "seed")}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anchor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext, flags, _) in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=helptext, description=helptext)
        sp.add_argument("--config", help="JSON file of parameters; flags override it")
        sp.add_argument("--plot", action="store_true", default=None,
                        help="also write a PNG figure (needs matplotlib)")
        for flag, key, typ, helpline in COMMON_FLAGS + flags:
            if typ is bool:
                sp.add_argument(flag, dest=key, action="store_true", default=None, help=helpline)
            else:
                sp.add_argument(flag, dest=key, type=typ, default=None, help=helpline)
    return parser


def _tupleize(value):
    if isinstance(value, list):
        return tuple(_tupleize(v) for v in value)
    return value


def _check_type(key, value, default):
    """Reject config values whose JSON type cannot stand in for the default's."""
    if default is None or value is None:
        return
    number = isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = number
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, (tuple, list)):
        ok = isinstance(value, list)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"config key {key!r} has the wrong type: {value!r}")


def merge_params(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the JSON config, then explicit flags. Unknown config keys are rejected."""
    _, _, flags, extra = SUBCOMMANDS[command]
    params = _defaults(extra)
    params.update({"seed": 0, "out_dir": "runs", "threads": 1, "plot": False})
    allowed = set(params) | {key for _, key, _, _ in flags}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        try:
            cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(cfg) - allowed)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
        for key, value in cfg.items():
            _check_type(key, value, params.get(key))
            params[key] = value if key == "signal" else _tupleize(value)
    for _, key, _, _ in COMMON_FLAGS + flags + [(None, "plot", None, None)]:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = _tupleize(value)
    for key in ("seed", "threads"):
        if not isinstance(params[key], int) or isinstance(params[key], bool) or params[key] < 0:
            raise ConfigError(f"{key} must be a non-negative integer, got {params[key]!r}")
    if params["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    return params


# ---------------------------------------------------------------- output

def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(rows: list[dict]) -> str:
    fields: list[str] = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def dump_parameters(model, run_dir: Path) -> None:
    """Flat little-endian float64 blob plus a JSON manifest of names, shapes and offsets."""
    manifest, chunks, offset = [], [], 0
    for name, p, _ in model.parameters():
        manifest.append({"name": name, "shape": list(p.shape), "offset": offset,
                         "count": int(p.size)})
        chunks.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
        offset += int(p.size)
    _atomic_write(run_dir / "params.bin", b"".join(chunks))
    _atomic_write(run_dir / "params.json", json.dumps(
        {"dtype": "float64", "byteorder": "little", "total": offset, "tensors": manifest},
        indent=2).encode())


def _plot(command: str, rows: list[dict], run_dir: Path) -> str | None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        warnings.warn("matplotlib is not installed; skipping --plot", stacklevel=2)
        return None
    numeric = [k for k in rows[0] if isinstance(rows[0][k], (int, float))
               and not isinstance(rows[0][k], bool)] if rows else []
    if len(numeric) < 2:
        return None
    x, ys = numeric[0], numeric[1:4]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for y in ys:
        ax.plot([r[x] for r in rows], [r[y] for r in rows], marker="o", label=y)
    ax.set_xlabel(x)
    ax.set_title(command)
    ax.legend()
    fig.tight_layout()
    out = run_dir / f"{command}.png"
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out.name


def _color(text: str, code: str) -> str:
    if os.environ.get("ANCHOR_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def run(command: str, params: dict) -> tuple[int, Path]:
    runner = SUBCOMMANDS[command][0]
    start = time.perf_counter()
    rows, summary, check_ok = runner(params)
    wall = time.perf_counter() - start
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    run_dir = Path(params["out_dir"]) / f"{command}-{stamp}"
    run_dir.mkdir(parents=True, exist_ok=False)
    model = summary.pop("_model", None)
    if model is not None:
        dump_parameters(model, run_dir)
    _atomic_write(run_dir / "results.csv", rows_to_csv(rows).encode())
    figure = _plot(command, rows, run_dir) if params.get("plot") else None
    report = {"command": command, "version": __version__, "config": _jsonable(params),
              "summary": _jsonable(summary), "rows": len(rows), "wall_clock_s": wall,
              "figure": figure}
    _atomic_write(run_dir / "summary.json", json.dumps(report, indent=2).encode())
    code = EXIT_OK if check_ok in (None, True) else EXIT_CHECK
    status = _color("PASS", "32") if code == EXIT_OK else _color("FAIL", "31")
    if check_ok is None:
        status = _color("done", "36")
    print(f"{command}: {status} ({len(rows)} rows, {wall:.2f}s) -> {run_dir}")
    return code, run_dir


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = merge_params(args.command, args)
        code, _ = run(args.command, params)
        return code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (AnchorError, ArithmeticError, MemoryError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
