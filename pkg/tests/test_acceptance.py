"""Acceptance checks; each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see only these lines, or
as part of the full suite (the lines are printed either way).
"""

import math
import os
import time

import numpy as np
import pytest

from castor.classifier import loocv_errors, loocv_errors_refit
from castor.dataset import LabeledDataset
from castor.params import CastorConfig, fit_params
from castor.pipeline import CastorClassifier, bench, evaluate
from castor.profile import (
    DilatedShapelet,
    distance_profile,
    distance_profile_oracle,
    effective_length,
    profile_length,
    standard_padding,
    znormalize,
)
from castor.synthetic import make_synthetic
from castor.transform import aggregate_block, feature_layout, occurrence, transform

pytestmark = pytest.mark.slow


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def _random_block(rng):
    """A group profile block built from real distance profiles."""
    k = int(rng.integers(1, 17))
    m = int(rng.integers(12, 150))
    length = int(rng.choice([3, 5, 7, 9]))
    d = int(rng.choice([1, 2, 4]))
    while effective_length(length, d) > m:
        d //= 2
    series = rng.normal(size=m)
    rows = []
    for _ in range(k):
        norm = bool(rng.random() < 0.5)
        values = rng.normal(size=length)
        rows.append(distance_profile(DilatedShapelet(znormalize(values) if norm else values, d, norm), series))
    dp = np.array(rows)
    if k > 1 and rng.random() < 0.2:
        dp[-1] = dp[0]  # exact ties
    return dp


def test_distance_kernel_oracle(verdict):
    rng = np.random.default_rng(1)
    distance_profile(DilatedShapelet([1.0, 2.0, 3.0]), np.arange(5.0))
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(1000):
        length = int(rng.choice([3, 5, 7, 9, 11]))
        d = int(rng.choice([1, 2, 4, 8]))
        span = effective_length(length, d)
        m = int(rng.integers(span, span + 120))
        norm = bool(rng.random() < 0.5)
        values = rng.normal(size=length)
        shapelet = DilatedShapelet(znormalize(values) if norm else values, d, norm)
        series = rng.normal(size=m) * rng.uniform(0.1, 10) + rng.uniform(-5, 5)
        p = 0 if rng.random() < 0.5 else standard_padding(length, d)
        fast = distance_profile(shapelet, series, p)
        slow = distance_profile_oracle(shapelet, series, p)
        worst = max(worst, float(np.max(np.abs(fast - slow) / np.abs(slow))))
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-9 and elapsed < 30,
            f"1000 cases, max relative error {worst:.2e} (<= 1e-9), {elapsed:.1f}s (< 30s)")


def test_output_size_identity(verdict):
    rng = np.random.default_rng(2)
    bad = []
    checked = 0
    for length in range(3, 16, 2):
        for d in (1, 2, 4, 8, 16, 32):
            p = standard_padding(length, d)
            for m in range(40, 401):
                if profile_length(m, length, d, p) != m:
                    bad.append((length, d, m))
                checked += 1
            # the kernel itself, at a few lengths per (l, d)
            for m in (40, int(rng.integers(41, 400)), 400):
                out = distance_profile(DilatedShapelet(rng.normal(size=length), d), rng.normal(size=m))
                if out.size != m:
                    bad.append((length, d, m, "kernel"))
    verdict(2, not bad, f"{checked} (l, d, m) triples, {len(bad)} mismatches")


def test_counting_conservation(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    failures = 0
    for _ in range(200):
        dp = _random_block(rng)
        k, m = dp.shape
        thr = rng.random(k) * dp.max()
        hard = aggregate_block(dp, thr, "hard", "hard", "independent")
        soft = aggregate_block(dp, thr, "soft", "soft", "independent")
        if hard[:k].sum() != m or hard[k : 2 * k].sum() != m:
            failures += 1
        for got, want in ((soft[:k].sum(), dp.min(axis=0).sum()), (soft[k : 2 * k].sum(), dp.max(axis=0).sum())):
            worst = max(worst, abs(got - want) / max(abs(want), 1e-300))

    # the compiled transform must conserve counts block by block too
    data = make_synthetic(classes=3, n=20, m=64, seed=4)
    cfg = CastorConfig(n_groups=16, n_shapelets=6, min_mode="hard", max_mode="hard", seed=4)
    params = fit_params(data, cfg)
    X = transform(data, params).values
    col = 0
    for b in params.banks:
        blocks = X[:, col : col + b.n_features].reshape(len(X), -1, 3, cfg.n_shapelets)
        failures += int(np.sum(blocks[:, :, 0].sum(axis=2) != b.series_length))
        failures += int(np.sum(blocks[:, :, 1].sum(axis=2) != b.series_length))
        col += b.n_features
    verdict(3, failures == 0 and worst <= 1e-9,
            f"200 blocks + transform blocks, {failures} hard-count violations, "
            f"soft relative error {worst:.2e} (<= 1e-9)")


def test_occurrence_ordering(verdict):
    rng = np.random.default_rng(5)
    violations = 0
    for _ in range(200):
        dp = _random_block(rng)
        k, m = dp.shape
        thr = rng.random(k) * dp.max()
        for j in range(k):
            comp = occurrence(j, dp, thr, "competing")
            ind = occurrence(j, dp, thr, "independent")
            violations += int(not comp <= ind <= m)
            violations += int(occurrence(j, dp, np.zeros(k), "independent") != 0)
            violations += int(occurrence(j, dp, np.zeros(k), "competing") != 0)

    data = make_synthetic(classes=2, n=20, m=64, seed=6)
    cfg = CastorConfig(n_groups=8, n_shapelets=6, seed=6)
    ind = transform(data, fit_params(data, cfg)).values
    comp = transform(data, fit_params(data, cfg.replace(occurrence_mode="competing"))).values
    layout_kind = np.array([c[3] for c in feature_layout(fit_params(data, cfg))]) == "occurrence"
    violations += int(np.sum(comp[:, layout_kind] > ind[:, layout_kind]))
    verdict(4, violations == 0, f"200 blocks + transform, {violations} ordering or zero-threshold violations")


def test_loocv_oracle(verdict):
    rng = np.random.default_rng(7)
    alphas = (0.01, 1.0, 10.0)
    worst = 0.0
    mismatched = 0
    for _ in range(50):
        n = int(rng.integers(5, 61))
        F = int(rng.integers(1, 41))
        X = rng.normal(size=(n, F)) * rng.uniform(0.1, 5, size=F)
        classes = int(rng.integers(2, 5))
        labels = np.arange(n) % classes
        Y = np.where(labels[:, None] == np.arange(classes), 1.0, -1.0)
        if classes == 2:
            Y = Y[:, 1:]
        fast = loocv_errors(X, Y, alphas)
        slow = np.array([loocv_errors_refit(X, Y, a) for a in alphas])
        worst = max(worst, float(np.max(np.abs(fast - slow) / slow)))
        mismatched += int(np.argmin(fast) != np.argmin(slow))
    verdict(5, worst <= 1e-8 and mismatched == 0,
            f"50 problems, max relative error {worst:.2e} (<= 1e-8), {mismatched} alpha mismatches")


def test_desk_scale_learnability(verdict):
    data = make_synthetic(classes=2, n=200, m=128, seed=1)
    t0 = time.perf_counter()
    report = evaluate(data, CastorConfig(), folds=5, repeats=5)
    elapsed = time.perf_counter() - t0

    shuffled = LabeledDataset(data.series, np.random.default_rng(99).permutation(data.labels), data.vocabulary)
    control = evaluate(shuffled, CastorConfig(), folds=5, repeats=5)
    chance = float(np.max(np.bincount(data.labels)) / data.n_samples)
    sigma = math.sqrt(chance * (1 - chance) / data.n_samples)
    ok = report.mean_accuracy >= 0.95 and abs(control.mean_accuracy - chance) <= 3 * sigma and elapsed < 60
    verdict(6, ok,
            f"5x5 CV accuracy {report.mean_accuracy:.4f} (>= 0.95); shuffled-label control "
            f"{control.mean_accuracy:.4f} vs chance {chance:.2f} +/- {3 * sigma:.3f}; "
            f"{elapsed:.1f}s on {os.cpu_count()} core(s) (< 60s)")


def test_competition_tradeoff(verdict):
    settings = {"balanced": (32, 8), "many groups": (128, 2), "few groups": (2, 128)}
    scores = {name: [] for name in settings}
    for i, classes in enumerate((2, 3, 4)):
        data = make_synthetic(classes=classes, n=150, m=128, seed=101 + i)
        for seed in range(5):
            for name, (g, k) in settings.items():
                cfg = CastorConfig(n_groups=g, n_shapelets=k, seed=seed)
                scores[name].append(evaluate(data, cfg, folds=5, repeats=1).mean_accuracy)
    mean = {name: float(np.mean(v)) for name, v in scores.items()}
    ok = mean["balanced"] + 0.005 >= max(mean["many groups"], mean["few groups"])
    verdict(7, ok,
            "mean accuracy over 3 datasets x 5 seeds: "
            + ", ".join(f"{name} (g={settings[name][0]}, k={settings[name][1]}) {v:.4f}" for name, v in mean.items())
            + " (balanced + 0.005 >= both extremes)")


def test_scaling(verdict):
    data = make_synthetic(classes=2, n=100, m=128, seed=2)
    cfg = CastorConfig()
    fit_params(data, cfg)
    t0 = time.perf_counter()
    rows_n, slope_n = bench(data, "n", (1, 2, 4, 8), cfg, runs=3)
    t1 = time.perf_counter()
    rows_m, slope_m = bench(data, "m", (1, 2, 4), cfg, runs=3)
    t2 = time.perf_counter()
    ok = 0.8 <= slope_n <= 1.3 and 0.8 <= slope_m <= 1.5 and t1 - t0 < 300 and t2 - t1 < 300
    verdict(8, ok,
            f"slope vs n {slope_n:.3f} (in [0.8, 1.3], {t1 - t0:.0f}s), "
            f"slope vs m {slope_m:.3f} (in [0.8, 1.5], {t2 - t1:.0f}s)")


def test_determinism_and_thread_invariance(verdict, tmp_path):
    data = make_synthetic(classes=3, n=60, m=96, seed=8)
    cfg = CastorConfig(seed=2024)
    blobs, features = [], []
    counts = [1, 4, None]
    for threads in counts:
        clf = CastorClassifier(cfg, threads=threads).fit(data)
        path = tmp_path / f"model_{threads}.bin"
        clf.save(path)
        blobs.append(path.read_bytes())
        features.append(clf.transform(data).values.tobytes())
    same = all(b == blobs[0] for b in blobs) and all(f == features[0] for f in features)
    verdict(9, same, f"model bytes and features identical for threads 1, 4 and max ({os.cpu_count()})")


def test_small_configuration_feature_count(verdict):
    rng = np.random.default_rng(10)
    data = LabeledDataset(rng.normal(size=(6, 4)), [0, 1] * 3, ["a", "b"])
    cfg = CastorConfig(n_groups=5, n_shapelets=4, shapelet_length=3, use_diff=False)
    params = fit_params(data, cfg)
    X = transform(data, params).values
    verdict(10, params.banks[0].n_exponents == 1 and X.shape == (6, 60),
            f"E={params.banks[0].n_exponents}, features per sample {X.shape[1]} (expected 60)")
