"""Padded, dilated, boundary-scaled distance profiles.

A profile slides a dilated shapelet over a zero-padded series. Window
positions that land in the padding are left out of the distance, and
the Euclidean distance over the remaining ``c`` positions is scaled by
``l / c`` so that boundary windows stay comparable to interior ones.

The compiled kernel evaluates one window position for a whole batch of
shapelets sharing a dilation, so the innermost loop runs over shapelets
and vectorizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    InternalPaddingError,
    InvalidShapeletLength,
    ShapeletTooLong,
    SubsequenceOutOfBounds,
)

#: Windows or shapelets whose population std falls below this are
#: normalized to the zero vector.
MIN_SPREAD = 1e-13


def effective_length(length: int, dilation: int) -> int:
    return (length - 1) * dilation + 1


def standard_padding(length: int, dilation: int) -> int:
    """Padding that keeps the profile as long as the series.

    >>> standard_padding(3, 2)
    2
    """
    if length % 2 == 0:
        raise InvalidShapeletLength(f"shapelet length must be odd, got {length}")
    return effective_length(length, dilation) // 2


def profile_length(m: int, length: int, dilation: int, padding: int) -> int:
    return m + 2 * padding - effective_length(length, dilation) + 1


def znormalize(x) -> np.ndarray:
    """Zero mean, unit population std; near-constant input maps to zeros."""
    x = np.asarray(x, dtype=np.float64)
    mu = x.mean()
    sd = math.sqrt(np.mean((x - mu) ** 2))
    if sd < MIN_SPREAD:
        return np.zeros_like(x)
    return (x - mu) / sd


@dataclass(frozen=True, eq=False)
class DilatedShapelet:
    """Shapelet values with the dilation used to match them.

    When ``normalized`` is set the values are expected to be z-normalized
    already, and every matched window is z-normalized as well.
    """

    values: np.ndarray
    dilation: int = 1
    normalized: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise InvalidShapeletLength("shapelet values must be 1-d")
        if values.size < 3 or values.size % 2 == 0:
            raise InvalidShapeletLength(
                f"shapelet length must be odd and >= 3, got {values.size}"
            )
        if self.dilation < 1:
            raise ValueError(f"dilation must be positive, got {self.dilation}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dilation", int(self.dilation))
        object.__setattr__(self, "normalized", bool(self.normalized))

    @property
    def length(self) -> int:
        return self.values.size

    @property
    def effective_length(self) -> int:
        return effective_length(self.length, self.dilation)

    @classmethod
    def from_series(cls, series, dilation, start, length, normalized=False):
        values = extract_dilated_subsequence(series, dilation, start, length)
        if normalized:
            values = znormalize(values)
        return cls(values, dilation, normalized)


def extract_dilated_subsequence(series, dilation: int, start: int, length: int):
    """Values ``series[start], series[start + d], ...``, ``length`` of them.

    ``start`` is 0-based.
    """
    series = np.asarray(series, dtype=np.float64)
    last = start + (length - 1) * dilation
    if start < 0 or dilation < 1 or length < 1 or last >= series.shape[-1]:
        raise SubsequenceOutOfBounds(
            f"start={start}, dilation={dilation}, length={length} does not fit "
            f"a series of length {series.shape[-1]}"
        )
    return series[..., start : last + 1 : dilation].copy()


@njit(cache=True, nogil=True, inline="always")
def _tap_range(t, d, p, m, o):
    # positions s in [lo, hi) whose tap t reads series index s - p + t*d
    lo = p - t * d
    if lo < 0:
        lo = 0
    hi = m + p - t * d
    if hi > o:
        hi = o
    return lo, hi


@njit(cache=True, nogil=True)
def window_stats(x, length, d, p, o, count, mean, inv_std):
    """In-bounds count, mean and inverse std of every window."""
    m = x.shape[0]
    for s in range(o):
        count[s] = 0.0
        mean[s] = 0.0
        inv_std[s] = 0.0
    for t in range(length):
        lo, hi = _tap_range(t, d, p, m, o)
        off = t * d - p
        for s in range(lo, hi):
            count[s] += 1.0
            mean[s] += x[s + off]
    for s in range(o):
        if count[s] > 0:
            mean[s] /= count[s]
    for t in range(length):
        lo, hi = _tap_range(t, d, p, m, o)
        off = t * d - p
        for s in range(lo, hi):
            v = x[s + off] - mean[s]
            inv_std[s] += v * v
    for s in range(o):
        if count[s] > 0:
            sd = math.sqrt(inv_std[s] / count[s])
            inv_std[s] = 1.0 / sd if sd >= 1e-13 else 0.0


@njit(cache=True, nogil=True)
def profile_column(x, s, d, p, stap, normalized, count_s, mean_s, inv_std_s, out):
    """Distances of many shapelets to the window at position ``s``.

    ``stap`` holds the shapelets tap-major, shape ``(l, q)``, so the inner
    loop runs over shapelets. Every caller (single profiles, threshold
    sampling, the transform) goes through here, which keeps their
    distances bit-identical.
    """
    m = x.shape[0]
    length, q = stap.shape
    for c in range(q):
        out[c] = 0.0
    # taps t with 0 <= s - p + t * d < m
    t_lo = 0
    if s < p:
        t_lo = (p - s + d - 1) // d
    t_hi = (m - 1 + p - s) // d
    if t_hi > length - 1:
        t_hi = length - 1
    for t in range(t_lo, t_hi + 1):
        xv = x[s - p + t * d]
        zv = (xv - mean_s) * inv_std_s
        row = stap[t]
        for c in range(q):
            v = row[c] - (zv if normalized[c] else xv)
            out[c] += v * v
    for c in range(q):
        out[c] = math.sqrt(out[c]) * length / count_s


@njit(cache=True, nogil=True)
def profiles_into(x, stap, normalized, d, p, o, count, mean, inv_std, out):
    """Profiles of all shapelets in ``stap`` against ``x``; ``out`` is (o, q)."""
    for s in range(o):
        profile_column(x, s, d, p, stap, normalized, count[s], mean[s], inv_std[s], out[s])


def _check_geometry(m, length, d, p):
    if p < 0:
        raise ValueError(f"padding must be non-negative, got {p}")
    o = profile_length(m, length, d, p)
    if o < 1:
        raise ShapeletTooLong(
            f"effective length {effective_length(length, d)} exceeds padded "
            f"series length {m + 2 * p}"
        )
    return o


def distance_profile(shapelet: DilatedShapelet, series, padding: int | None = None):
    """Distance between ``shapelet`` and every dilated window of ``series``.

    Parameters
    ----------
    shapelet : DilatedShapelet
    series : array-like of shape (m,)
    padding : int, optional
        Zeros added on each side. Defaults to :func:`standard_padding`,
        which makes the output length equal to ``m``.

    Returns
    -------
    ndarray of shape (m + 2 * padding - effective_length + 1,)
    """
    x = np.ascontiguousarray(series, dtype=np.float64)
    length, d = shapelet.length, shapelet.dilation
    p = standard_padding(length, d) if padding is None else int(padding)
    o = _check_geometry(x.shape[0], length, d, p)
    count = np.empty(o)
    mean = np.empty(o)
    inv_std = np.empty(o)
    window_stats(x, length, d, p, o, count, mean, inv_std)
    if np.any(count == 0):
        raise InternalPaddingError(
            "a window lies entirely in the padding; padding is too large"
        )
    out = np.empty((o, 1))
    stap = np.ascontiguousarray(shapelet.values[:, None])
    flags = np.array([shapelet.normalized])
    profiles_into(x, stap, flags, d, p, o, count, mean, inv_std, out)
    return out[:, 0]


def distance_profile_oracle(shapelet: DilatedShapelet, series, padding=None):
    """Brute-force twin of :func:`distance_profile` used as test ground truth.

    Materializes the padded series and evaluates every window with plain
    Python loops.
    """
    values = [float(v) for v in shapelet.values]
    t_series = [float(v) for v in np.asarray(series).ravel()]
    length, d = len(values), shapelet.dilation
    m = len(t_series)
    p = standard_padding(length, d) if padding is None else int(padding)
    _check_geometry(m, length, d, p)

    padded = [0.0] * p + t_series + [0.0] * p
    span = (length - 1) * d + 1
    out = []
    for s in range(len(padded) - span + 1):
        pairs = []
        for t in range(length):
            j = s + t * d
            if p <= j < m + p:
                pairs.append((values[t], padded[j]))
        c = len(pairs)
        if c == 0:
            raise InternalPaddingError(f"window at {s} lies entirely in the padding")
        window = [w for _, w in pairs]
        if shapelet.normalized:
            mu = sum(window) / c
            sd = math.sqrt(sum((w - mu) ** 2 for w in window) / c)
            if sd < MIN_SPREAD:
                window = [0.0] * c
            else:
                window = [(w - mu) / sd for w in window]
        total = 0.0
        for (sv, _), w in zip(pairs, window):
            total += (sv - w) ** 2
        out.append(length / c * math.sqrt(total))
    return np.array(out)
