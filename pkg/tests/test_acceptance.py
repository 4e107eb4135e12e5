"""Headline acceptance criteria. Each test prints one PASS/FAIL line, which is
also repeated in the terminal summary, and then asserts the criterion."""

import json
import time
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from anchor import experiments as ex
from anchor.backbone import Residual
from anchor.deform import DefOp, DefOpConfig
from anchor.fgdm import FGDM, FgdmConfig, assign_routes, channel_split, cost_model
from anchor.interpolation import InterpKernel, interp_bilinear, interp_gaussian
from anchor.numerics import make_rng
from anchor.spectral import SpectralPrior, extract_prior
from anchor.synth import DEFAULT_FRACTIONAL_PERIODS
from oracles import dilated_conv1d

FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "experiments.json").read_text())


def report(name: str, ok: bool, detail: str, seconds: float, limit: float):
    within = seconds < limit
    line = (f"[{'PASS' if ok and within else 'FAIL'}] {name}: {detail} "
            f"({seconds:.2f}s, limit {limit:g}s)")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert within, line


def test_gradient_fidelity():
    start = time.perf_counter()
    summaries = {s: ex.gradcheck_suite(s)[1] for s in ex.GRADCHECK_SCOPES}
    ok = all(s["passed"] for s in summaries.values())
    tol_ok = (summaries["interp"]["tolerance"] == 1e-6 and summaries["defop"]["tolerance"] == 1e-5
              and summaries["fgdm"]["tolerance"] == 1e-5
              and summaries["backbone"]["tolerance"] == 1e-4)
    detail = ", ".join(f"{k} {v['max_rel_error']:.1e}/{v['tolerance']:g}"
                       for k, v in summaries.items())
    report("gradient fidelity", ok and tol_ok, detail, time.perf_counter() - start, 60)


def test_bilinear_gradient_law():
    start = time.perf_counter()
    rng = make_rng(0)
    ok = True
    for _ in range(500):
        x = rng.standard_normal(12)
        q = int(rng.integers(0, 11))
        fracs = rng.uniform(1e-6, 1 - 1e-6, size=4)
        grads = [interp_bilinear(x, q + d).dvalue_dp for d in fracs]
        ok &= all(g == x[q + 1] - x[q] for g in grads)
    impulse = np.zeros(16)
    impulse[8] = 1.0
    lin = interp_bilinear(impulse, 4.3).dvalue_dp
    gau = interp_gaussian(impulse, 4.3, InterpKernel.gaussian(1.5, 6)).dvalue_dp
    ok &= lin == 0.0 and gau != 0.0
    report("bilinear gradient law", bool(ok),
           f"500 cells exact and constant; dead zone bilinear {lin} vs gaussian {gau:.3e}",
           time.perf_counter() - start, 1)


def test_reduction_oracle():
    start = time.perf_counter()
    rng = make_rng(0)
    bitwise = True
    for T, S in [(1, 3), (2, 3), (3, 5), (4, 7)]:
        op = DefOp(DefOpConfig(3, 4, S, T, InterpKernel.bilinear(), "predicted"), rng)
        op.params["bias"][:] = rng.standard_normal(4)
        x = rng.standard_normal((2, 3, 48))
        bitwise &= np.array_equal(op.forward(x), dilated_conv1d(x, op.params["weight"],
                                                                op.params["bias"], T))
    op = DefOp(DefOpConfig(3, 2, 3, 2, InterpKernel.gaussian(0.1), "predicted"), rng)
    x = rng.standard_normal((2, 3, 32))
    gdev = float(np.max(np.abs(op.forward(x) - dilated_conv1d(x, op.params["weight"],
                                                                op.params["bias"], 2))))
    report("reduction oracle", bool(bitwise and gdev < 1e-6),
           f"bilinear bit-exact {bool(bitwise)}, gaussian sigma=0.1 max dev {gdev:.1e}",
           time.perf_counter() - start, 5)


def test_spectral_prior():
    start = time.perf_counter()
    misses, pairs = [], 0
    for L in range(4, 129):
        t = np.arange(L)
        for P in range(2, L + 1):
            if L % P == 0:
                pairs += 1
                x = np.sin(2 * np.pi * t / P + 0.3)[None, None]
                if extract_prior(x, 1).periods != (P,):
                    misses.append((L, P))
    t = np.arange(96)
    noisy = np.sin(2 * np.pi * t / 24) + 0.1 * make_rng(11).standard_normal(96)
    noise_ok = extract_prior(noisy[None, None], 1).periods == (24,)
    report("spectral prior", not misses and noise_ok,
           f"{pairs - len(misses)}/{pairs} divisor pairs exact, 10% noise recovers 24: {noise_ok}",
           time.perf_counter() - start, 5)


@pytest.fixture(scope="module")
def compensation_run():
    start = time.perf_counter()
    rows, summary = ex.compensation_bench()
    return rows, summary, time.perf_counter() - start


def test_compensation_bench(compensation_run):
    rows, summary, seconds = compensation_run
    assert summary["cases"] == 9 and summary["steps"] == 500
    assert tuple(r["period"] for r in rows) == DEFAULT_FRACTIONAL_PERIODS
    ok = summary["eta_gt_1"] >= 7 and summary["mean_eta"] > 1.2
    report("compensation bench", ok,
           f"eta > 1 in {summary['eta_gt_1']}/9 (need 7), mean eta {summary['mean_eta']:.3f} "
           f"(need > 1.2)", seconds, 180)


def test_compensation_fixture(compensation_run):
    rows, _, _ = compensation_run
    for got, want in zip(rows, FIXTURES["compensation"]["rows"]):
        assert got["eta"] == pytest.approx(want["eta"], rel=1e-9), got["period"]


@pytest.fixture(scope="module")
def ablation_run():
    start = time.perf_counter()
    rows, summary = ex.ablation()
    return rows, summary, time.perf_counter() - start


def test_ablation_trend(ablation_run):
    rows, summary, seconds = ablation_run
    m = summary["mse"]
    g, b, c = m["anchor-gaussian"], m["anchor-bl"], m["anchor-1d"]
    ok = g <= b <= c
    report("ablation trend", ok,
           f"mse gaussian {g:.6f}, bilinear {b:.6f}, standard-conv {c:.6f}", seconds, 300)


def test_ablation_fixture(ablation_run):
    rows, _, _ = ablation_run
    for got, want in zip(rows, FIXTURES["ablation_fractional"]["rows"]):
        assert got["mse"] == pytest.approx(want["mse"], rel=1e-9), got["variant"]


def test_cost_model():
    start = time.perf_counter()
    rep = cost_model(8, 96, 4, [3, 5, 7])
    exact = rep.ratio_exact == Fraction(33024, 92160)
    rng = make_rng(0)
    below = 0
    for _ in range(100):
        N = int(rng.integers(2, 9))
        ks = sorted(rng.choice(np.arange(1, 32, 2), size=N - 1, replace=False).tolist())
        r = cost_model(int(rng.integers(1, 65)), int(rng.integers(2, 4097)), N, ks)
        below += r.ratio_exact < 1
    rfft_ok = rep.rfft_fraction < 0.05
    report("cost model", exact and below == 100 and rfft_ok,
           f"ratio {rep.ratio_exact} exact {exact}, ratio < 1 in {below}/100, "
           f"rfft fraction {rep.rfft_fraction:.4f} (need < 0.05)",
           time.perf_counter() - start, 1)


def _block(N, C, seed):
    periods = [5, 3, 2][:N - 1]
    e = np.zeros(49)
    for i, p in enumerate(periods):
        e[96 // p] = 10.0 - i
    prior = SpectralPrior(e, tuple(96 // p for p in periods), tuple(periods), 96)
    cfg = FgdmConfig(C, N, tuple(range(3, 2 * N + 1, 2)), InterpKernel.gaussian(1.0))
    return FGDM(cfg, assign_routes(prior, cfg), make_rng(seed))


def test_structural_invariants():
    start = time.perf_counter()
    sweep = [(N, C, L) for N in (2, 3, 4) for C in (4, 8, 12) for L in (32, 96) if C % N == 0]
    failures = []
    for N, C, L in sweep:
        g = C // N
        x = make_rng(C * L + N).standard_normal((2, C, L))
        block = _block(N, C, seed=N)
        width_ok = all(
            block.children[f"phi_f{i}"].params["weight"].shape == ((i + 1) * g, 2 * i * g)
            for i in range(1, N))
        split_ok = np.array_equal(np.concatenate(channel_split(x, N), axis=1), x)
        identity_ok = np.array_equal(Residual(block).forward(x), x)
        trained = _block(N, C, seed=N)
        rng = make_rng(7)
        for _, p, _ in trained.parameters():
            p[...] = rng.normal(0.0, 0.3, p.shape)
        y = trained.forward(x)
        shape_ok = y.shape == x.shape
        again = _block(N, C, seed=N)
        rng = make_rng(7)
        for _, p, _ in again.parameters():
            p[...] = rng.normal(0.0, 0.3, p.shape)
        det_ok = np.array_equal(again.forward(x), y)
        if not (width_ok and split_ok and identity_ok and shape_ok and det_ok):
            failures.append((N, C, L))
    report("structural invariants", not failures,
           f"{len(sweep) - len(failures)}/{len(sweep)} configs pass", time.perf_counter() - start,
           60)
