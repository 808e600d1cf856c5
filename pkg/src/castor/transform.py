"""Competing min/max and occurrence features from a fitted shapelet bank."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import SeriesLengthMismatch
from .params import DIFFERENCED, CastorParams
from .profile import profile_column, window_stats

FEATURE_KINDS = ("min", "max", "occurrence")


# Reference implementations over an explicit (k, o) block of profiles. The
# compiled transform below fuses the same rules; these stay as the readable
# ground truth and are what the tests compose with the brute-force profile.


def min_aggregate(j: int, dp, mode: str = "soft") -> float:
    """How often (hard) or by how much (soft) shapelet ``j`` is the closest.

    Columns of ``dp`` are time steps; ties go to the lowest row.
    """
    dp = np.asarray(dp, dtype=np.float64)
    wins = np.argmin(dp, axis=0) == j
    if mode == "hard":
        return float(np.count_nonzero(wins))
    return float(dp.min(axis=0)[wins].sum())


def max_aggregate(j: int, dp, mode: str = "hard") -> float:
    """Like :func:`min_aggregate` for the farthest shapelet."""
    dp = np.asarray(dp, dtype=np.float64)
    wins = np.argmax(dp, axis=0) == j
    if mode == "hard":
        return float(np.count_nonzero(wins))
    return float(dp.max(axis=0)[wins].sum())


def occurrence(j: int, dp, thresholds, mode: str = "independent") -> float:
    """Time steps where shapelet ``j`` is strictly below its threshold.

    In competing mode a step only counts if ``j`` is also the closest
    shapelet there.
    """
    # dp is (k, o): row j is shapelet j's distance at each time step
    dp = np.asarray(dp, dtype=np.float64)
    below = dp[j] < thresholds[j]
    if mode == "competing":
        below &= np.argmin(dp, axis=0) == j
    return float(np.count_nonzero(below))


def aggregate_block(dp, thresholds, min_mode, max_mode, occurrence_mode):
    """The ``3k`` features of one (group, exponent) block, in layout order."""
    k = np.asarray(dp).shape[0]
    out = np.empty(3 * k)
    for j in range(k):
        out[j] = min_aggregate(j, dp, min_mode)
        out[k + j] = max_aggregate(j, dp, max_mode)
        out[2 * k + j] = occurrence(j, dp, thresholds, occurrence_mode)
    return out


@njit(cache=True, nogil=True)
def _transform_rows(
    x, lo, hi, k, stap, normalized, thresholds, min_soft, max_soft, competing,
    out, col0,
):
    # stap: (E, l, g*k) shapelets tap-major per exponent; normalized and
    # thresholds: (E, g*k). Shapelet j of group i sits at column i*k + j.
    m = x.shape[1]
    n_exp, length, q = stap.shape
    g = q // k
    width = 3 * k
    count = np.empty(m)
    mean = np.empty(m)
    inv_std = np.empty(m)
    col = np.empty(q)
    mins = np.empty(q)
    maxs = np.empty(q)
    occ = np.empty(q)
    for a in range(lo, hi):
        row = x[a]
        for e in range(n_exp):
            d = 2**e
            p = ((length - 1) * d + 1) // 2
            o = m + 2 * p - (length - 1) * d
            window_stats(row, length, d, p, o, count, mean, inv_std)
            thr = thresholds[e]
            mins[:] = 0.0
            maxs[:] = 0.0
            occ[:] = 0.0
            for s in range(o):
                profile_column(
                    row, s, d, p, stap[e], normalized[e], count[s], mean[s],
                    inv_std[s], col,
                )
                for i in range(g):
                    q0 = i * k
                    jmin = 0
                    jmax = 0
                    vmin = col[q0]
                    vmax = vmin
                    # branchless scan; strict comparisons keep the lowest index
                    for j in range(1, k):
                        v = col[q0 + j]
                        lt = v < vmin
                        gt = v > vmax
                        jmin = j if lt else jmin
                        vmin = v if lt else vmin
                        jmax = j if gt else jmax
                        vmax = v if gt else vmax
                    mins[q0 + jmin] += vmin if min_soft else 1.0
                    maxs[q0 + jmax] += vmax if max_soft else 1.0
                    if competing and vmin < thr[q0 + jmin]:
                        occ[q0 + jmin] += 1.0
                if not competing:
                    for c in range(q):
                        occ[c] += 1.0 if col[c] < thr[c] else 0.0
            for i in range(g):
                base = col0 + (i * n_exp + e) * width
                for j in range(k):
                    out[a, base + j] = mins[i * k + j]
                    out[a, base + k + j] = maxs[i * k + j]
                    out[a, base + 2 * k + j] = occ[i * k + j]


def _kernel_arrays(bank):
    g, k, n_exp, length = bank.shapelets.shape
    # (g, k, E, l) -> (E, l, g*k)
    stap = np.ascontiguousarray(bank.shapelets.transpose(2, 3, 0, 1).reshape(n_exp, length, g * k))
    flags = np.ascontiguousarray(bank.normalized.transpose(2, 0, 1).reshape(n_exp, g * k))
    thr = np.ascontiguousarray(bank.thresholds.transpose(2, 0, 1).reshape(n_exp, g * k))
    return k, stap, flags, thr


def resolve_threads(threads=None) -> int:
    if threads in (None, 0, "auto", "max"):
        return os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    return threads


@dataclass(eq=False)
class FeatureMatrix:
    """Transformed samples plus the layout of their columns.

    Columns run representation-major, then group, then exponent, and within
    each (group, exponent) hold ``k`` min, ``k`` max and ``k`` occurrence
    features.
    """

    values: np.ndarray
    params: CastorParams

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @property
    def layout(self) -> list[tuple]:
        return feature_layout(self.params)

    def to_csv(self, path) -> None:
        header = [":".join(map(str, col)) for col in self.layout]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in self.values:
                writer.writerow([repr(float(v)) for v in row])


def feature_layout(params: CastorParams) -> list[tuple]:
    """``(representation, group, exponent, kind, shapelet)`` per column."""
    layout = []
    for bank in params.banks:
        for i in range(bank.n_groups):
            for e in range(bank.n_exponents):
                for kind in FEATURE_KINDS:
                    for j in range(bank.n_shapelets):
                        layout.append((bank.representation, i, e, kind, j))
    return layout


def _as_series(data) -> np.ndarray:
    x = getattr(data, "series", data)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    return np.ascontiguousarray(x)


def transform(data, params: CastorParams, threads=None) -> FeatureMatrix:
    """Map series to fixed-length feature vectors.

    Parameters
    ----------
    data : LabeledDataset or array-like of shape (n, m)
    params : CastorParams
    threads : int or "auto", optional
        Worker threads; samples are split into contiguous chunks and each
        output row is written by exactly one worker, so the result does not
        depend on this value.

    Returns
    -------
    FeatureMatrix
    """
    x = _as_series(data)
    if x.shape[1] != params.series_length:
        raise SeriesLengthMismatch(params.series_length, x.shape[1])
    n = x.shape[0]
    cfg = params.config
    out = np.zeros((n, params.n_features))
    threads = min(resolve_threads(threads), max(n, 1))

    jobs = []
    col0 = 0
    diff = None
    for bank in params.banks:
        if bank.representation == DIFFERENCED:
            if diff is None:
                diff = np.ascontiguousarray(np.diff(x, axis=1))
            xr = diff
        else:
            xr = x
        args = _kernel_arrays(bank) + (
            cfg.min_mode == "soft", cfg.max_mode == "soft",
            cfg.occurrence_mode == "competing", out, col0,
        )
        bounds = np.linspace(0, n, threads + 1).astype(int)
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi > lo:
                jobs.append((xr, int(lo), int(hi)) + args)
        col0 += bank.n_features

    if threads == 1:
        for job in jobs:
            _transform_rows(*job)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for fut in [pool.submit(_transform_rows, *job) for job in jobs]:
                fut.result()
    return FeatureMatrix(out, params)
