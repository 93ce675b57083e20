"""Exit criteria for the package, one test per criterion.

Every test records a PASS/FAIL line that the terminal summary prints (see
conftest.py), so ``pytest tests/test_acceptance.py`` ends with a short report.
"""

import json
import os
import pickle
import time

import numpy as np
import pytest

from splinecal.cli import main
from splinecal.curves import cumulative, ks_error
from splinecal.dataset import CalibrationTarget, read_csv, score_target, scored_from_pairs
from splinecal.metrics import accuracy_topr, brier_top1, ece, mce
from splinecal.recalibrate import build, fit_curves, recalibrate_evalset
from splinecal.spline import KnotGrid, Spline, fit
from splinecal.synth import SynthSpec, generate

from conftest import record
from oracles import brier_ref, ece_ref, mce_ref, natural_spline_interpolant

TOP1 = CalibrationTarget.top(1)
SEEDS = (0, 1, 2, 3, 4)


def check(name, ok, detail):
    record(name, ok, detail)
    assert ok, f"{name}: {detail}"


def test_c1_interpolation_matches_textbook_solver():
    worst = 0.0
    start = time.perf_counter()
    for k in range(3, 11):
        grid = KnotGrid(k)
        y = np.random.default_rng(k).normal(size=k)
        sp = fit(grid.knots, y, k)
        value, _ = natural_spline_interpolant(grid.knots, y)
        probes = np.linspace(0, 1, 100)
        worst = max(worst, float(np.max(np.abs(sp(probes) - np.array([value(p) for p in probes])))))
    elapsed = time.perf_counter() - start
    check("1 spline vs textbook interpolant", worst < 1e-9 and elapsed < 1.0,
          f"max abs err {worst:.2e} (< 1e-9), {elapsed:.3f}s (< 1s)")


def test_c2_derivative_matches_finite_differences():
    rng = np.random.default_rng(2024)
    eps = 1e-5
    worst = 0.0
    start = time.perf_counter()
    for k in range(3, 11):
        grid = KnotGrid(k)
        sp = Spline.from_knot_values(rng.normal(size=k), grid)
        x = rng.uniform(2 * eps, 1 - 2 * eps, 125)
        # fourth-order stencil: exact for a cubic, so only rounding remains
        fd = (-sp(x + 2 * eps) + 8 * sp(x + eps) - 8 * sp(x - eps) + sp(x - 2 * eps)) / (12 * eps)
        d = sp.derivative(x)
        worst = max(worst, float(np.max(np.abs(d - fd) / np.abs(d))))
    elapsed = time.perf_counter() - start
    check("2 analytic derivative vs finite differences", worst < 1e-6 and elapsed < 1.0,
          f"1000 probes, max rel err {worst:.2e} (< 1e-6), {elapsed:.3f}s (< 1s)")


def test_c3_slope_recovers_true_accuracy():
    start = time.perf_counter()
    sups = []
    for seed in SEEDS:
        ev = generate(SynthSpec(20000, 10, link="power", param=2.0, seed=seed))
        res = fit_curves(score_target(ev, TOP1), 6)
        t = res.curves.fractiles[1:]
        mid = (t >= 0.05) & (t <= 0.95)
        sups.append(float(np.max(np.abs(res.slope - res.curves.sorted_scores**2)[mid])))
    elapsed = time.perf_counter() - start
    check("3 slope of h vs P(correct|score)", max(sups) < 0.05 and elapsed < 5.0,
          f"sup errs {[round(s, 4) for s in sups]} (< 0.05), {elapsed:.2f}s (< 5s)")


def test_c4_ks_reduction_on_held_out_split():
    start = time.perf_counter()
    pre, post = [], []
    for seed in SEEDS:
        spec = dict(n_samples=20000, n_classes=100, score_low=0.01, link="power", param=2.0)
        calib = generate(SynthSpec(**spec, seed=2 * seed))
        test = generate(SynthSpec(**spec, seed=2 * seed + 1))
        pre.append(ks_error(cumulative(score_target(calib, TOP1))))
        m = build(score_target(calib, TOP1), 6)
        post.append(ks_error(cumulative(score_target(recalibrate_evalset(test, [m], "top1"), TOP1))))
    elapsed = time.perf_counter() - start
    ok = all(abs(p - 1 / 6) <= 0.02 for p in pre) and max(post) < 0.015 and elapsed < 10.0
    check("4 KS before/after recalibration", ok,
          f"pre {[round(p, 4) for p in pre]} (1/6 +- 0.02), post {[round(p, 4) for p in post]} (< 0.015), "
          f"{elapsed:.2f}s (< 10s)")


def test_c5_top1_accuracy_unchanged(tmp_path):
    configs = [
        dict(n=4000, classes=10, low=0.5, link="power", param=2.0, seed=0),
        dict(n=4000, classes=3, low=0.34, link="power", param=4.0, seed=1),
        dict(n=4000, classes=5, low=0.2, link="sharpen", param=3.0, seed=2),
        dict(n=4000, classes=2, low=0.5, link="identity", param=1.0, seed=3),
    ]
    results = []
    overtaken = 0
    for i, cfg in enumerate(configs):
        calib, test = tmp_path / f"c{i}.csv", tmp_path / f"t{i}.csv"
        common = ["--n", cfg["n"], "--classes", cfg["classes"], "--low", cfg["low"],
                  "--link", cfg["link"], "--param", cfg["param"]]
        assert main([str(a) for a in ["synth", "--out", calib, "--seed", 10 * cfg["seed"], *common]]) == 0
        assert main([str(a) for a in ["synth", "--out", test, "--seed", 10 * cfg["seed"] + 1, *common]]) == 0
        m, out, rep = tmp_path / f"m{i}.json", tmp_path / f"o{i}.csv", tmp_path / f"r{i}.json"
        assert main(["fit", "--calib", str(calib), "--out", str(m)]) == 0
        assert main(["apply", "--map", str(m), "--test", str(test), "--out", str(out),
                     "--mode", "top1", "--report", str(rep)]) == 0
        before = accuracy_topr(read_csv(test), 1)
        recal = read_csv(out, "scores")
        after = accuracy_topr(recal, 1)
        overtaken += int(np.sum(np.argmax(recal.scores, axis=1) != recal.top1()))
        r = json.loads(rep.read_text())
        results.append(before == after == r["before"]["accuracy"] == r["after"]["accuracy"])
    check("5 top-1 accuracy bit-identical after apply", all(results), f"{sum(results)}/{len(results)} files identical ({overtaken} rows where a lower class overtook the recalibrated top score)")


def constant_sign_instance(rng):
    n = int(rng.integers(1, 200))
    scores = rng.uniform(0, 1, n)
    if rng.random() < 0.5:
        # increments >= 0: correct samples, plus wrong ones only at score 0
        correct = np.ones(n)
        wrong = rng.random(n) < 0.2
        correct[wrong] = 0.0
        scores[wrong] = 0.0
    else:
        # increments <= 0: wrong samples, plus correct ones only at score 1
        correct = np.zeros(n)
        right = rng.random(n) < 0.2
        correct[right] = 1.0
        scores[right] = 1.0
    return scores, correct


def test_c6_constant_sign_reduces_to_endpoint():
    rng = np.random.default_rng(6)
    failures = 0
    endpoint_drift = 0.0
    for _ in range(1000):
        s, c = constant_sign_instance(rng)
        curves = cumulative(scored_from_pairs(s, c))
        # the endpoint difference as carried by the curves' accumulated gap
        if ks_error(curves) != abs(curves.gap[-1]):
            failures += 1
        endpoint_drift = max(endpoint_drift, abs(curves.gap[-1] - (curves.h[-1] - curves.h_tilde[-1])))
    ok = failures == 0 and endpoint_drift <= 1e-15
    check("6 constant-sign KS == |h_N - h~_N|", ok,
          f"{failures}/1000 exact mismatches; separately rounded endpoints agree to {endpoint_drift:.1e}")


def test_c7_metrics_match_reference():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 65))
        s = rng.uniform(0, 1, n)
        if rng.random() < 0.2:
            s = np.round(s, 2)  # hit bin edges and ties
        c = (rng.random(n) < s).astype(float)
        bins = int(rng.integers(1, 41))
        ss = scored_from_pairs(s, c)
        worst = max(worst,
                    abs(ece(ss, bins) - ece_ref(s.tolist(), c.tolist(), bins)),
                    abs(mce(ss, bins) - mce_ref(s.tolist(), c.tolist(), bins)),
                    abs(brier_top1(ss) - brier_ref(s.tolist(), c.tolist())))
    check("7 ECE/MCE/Brier vs brute force", worst <= 1e-12, f"500 instances, max abs diff {worst:.2e} (<= 1e-12)")


LOGITS_ENV = "SPLINECAL_DENSENET40_C10"


@pytest.mark.skipif(LOGITS_ENV not in os.environ,
                    reason=f"set {LOGITS_ENV} to the CIFAR-10 DenseNet-40 logits pickle to run")
def test_c8_cifar10_densenet40_reproduction():
    with open(os.environ[LOGITS_ENV], "rb") as fh:
        (z_val, y_val), (z_test, y_test) = pickle.load(fh)
    from splinecal.dataset import from_logits

    calib = from_logits(z_val, np.ravel(y_val).astype(int))
    test = from_logits(z_test, np.ravel(y_test).astype(int))
    before = 100 * ks_error(cumulative(score_target(test, TOP1)))
    m = build(score_target(calib, TOP1), 6)
    after = 100 * ks_error(cumulative(score_target(recalibrate_evalset(test, [m], "top1"), TOP1)))
    ok = abs(before - 5.493) <= 0.15 and abs(after - 0.773) <= 0.15
    check("8 CIFAR-10 DenseNet-40 KS (%)", ok, f"uncalibrated {before:.3f} (5.493), spline {after:.3f} (0.773) +- 0.15")
